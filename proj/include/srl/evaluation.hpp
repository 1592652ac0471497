#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "srl/corpus.hpp"
#include "srl/error.hpp"
#include "srl/embed.hpp"
#include "srl/gender.hpp"
#include "srl/nn.hpp"
#include "srl/resample.hpp"
#include "srl/sentiment.hpp"

namespace srl {

struct FoldPlan {
  std::vector<std::vector<std::size_t>> folds;  // sample indices, ascending
  std::vector<std::vector<std::string>> user_ids;  // filled when built from records
  std::uint64_t seed = 0;
  std::size_t size() const { return folds.size(); }
};

// Each class is shuffled with `seed` and dealt round-robin over the folds,
// continuing the deal across classes, so fold sizes differ by at most one and
// every class is spread within one sample of evenly.
FoldPlan stratified_kfold(const std::vector<int>& labels, std::size_t k, std::uint64_t seed);
FoldPlan stratified_kfold(const std::vector<UserRecord>& records, std::size_t k, std::uint64_t seed);

enum class Representation { avg_vector, tfidf, keyword_tfidf };
enum class SentimentMode { none, polarity_features, frozen_lstm, frozen_dense, finetuned_lstm };
enum class SourceMode { entire, high_similarity, entire_plus_manual, high_similarity_plus_manual };

std::string to_string(Representation r);
std::string to_string(SentimentMode m);
std::string to_string(SourceMode m);
Representation parse_representation(const std::string& s);
SentimentMode parse_sentiment_mode(const std::string& s);
SourceMode parse_source_mode(const std::string& s);

struct ExperimentConfig {
  Representation representation = Representation::avg_vector;
  SentimentMode sentiment_mode = SentimentMode::none;
  std::optional<SourceMode> source_mode;  // high_similarity when unset
  bool smote = false;
  ResampleConfig resample;
  double similarity_threshold = 0.25;
  std::vector<std::size_t> epochs{100};  // evaluation grid; one training run to the largest
  std::size_t folds = 5;
  std::uint64_t seed = 1;
  ClassifierConfig classifier;
  nn::TrainConfig gender_train{100, 32, 1e-3, nn::OptimizerKind::adam, 1, std::nullopt};
  SentimentModelConfig sentiment_model;
  nn::TrainConfig sentiment_train{30, 32, 1e-3, nn::OptimizerKind::adam, 1, std::nullopt};
  std::optional<double> finetune_lstm_learning_rate;  // defaults to the gender learning rate
  std::size_t keyword_top_n = 500;

  void validate() const;  // throws ConfigError
  bool uses_sentiment_model() const;
  bool uses_manual_labels() const;
  SourceMode effective_source_mode() const;
  nlohmann::json to_json() const;
  static ExperimentConfig from_json(const nlohmann::json& j);
};

// Corpus-level preprocessing shared by every experiment.
struct PipelineConfig {
  SkipGramConfig embedding;
  std::size_t r = 500;
  std::optional<std::filesystem::path> embeddings_path;  // load instead of training
};

struct ExperimentData {
  std::vector<UserRecord> users;
  std::vector<SourceReview> reviews;
  std::vector<SourceReview> manual;
  CleaningRules rules;
};

ExperimentData load_experiment_data(const std::filesystem::path& users, const std::filesystem::path& reviews,
                                    const std::optional<std::filesystem::path>& manual,
                                    const std::optional<std::filesystem::path>& stopwords);

struct FoldResult {
  std::size_t fold = 0;  // 1-based, D1..Dk
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  std::size_t synthetic = 0;
  std::vector<std::string> test_ids;
  std::vector<double> accuracy;  // one entry per epoch in the grid
};

struct EvalReport {
  nlohmann::json config;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::vector<std::size_t> epochs;
  std::vector<FoldResult> folds;
  std::vector<double> mean;  // per epoch
  std::optional<double> seconds;

  std::size_t best_epoch_index() const;
  nlohmann::json to_json() const;
  static EvalReport from_json(const nlohmann::json& j);
};

std::string config_hash(const nlohmann::json& config);

enum class ReportFormat { json, csv, table };
ReportFormat parse_report_format(const std::string& s);
void emit_report(const EvalReport& report, ReportFormat format, std::ostream& out);

// Raised for failures inside a pipeline stage.
class StageError : public Error {
 public:
  enum class Cause { config, data, other };
  StageError(std::string stage, std::optional<std::size_t> fold, Cause cause, const std::string& what);
  const std::string& stage() const { return stage_; }
  std::optional<std::size_t> fold() const { return fold_; }
  Cause cause() const { return cause_; }

 private:
  std::string stage_;
  std::optional<std::size_t> fold_;
  Cause cause_;
};

// Prepares the corpus once (cleaning, embeddings, document vectors and
// matrices) and runs any number of experiments on it. Trained sentiment
// models are cached by (source mode, threshold, fold, training settings).
class ExperimentRunner {
 public:
  ExperimentRunner(ExperimentData data, const PipelineConfig& pipeline);
  ~ExperimentRunner();
  ExperimentRunner(ExperimentRunner&&) noexcept;

  EvalReport run(const ExperimentConfig& config);

  const EmbeddingTable& embeddings() const;
  const std::vector<VirtualDocument>& documents() const;
  const std::vector<DocVector>& doc_vectors() const;
  const std::vector<DocMatrix>& doc_matrices() const;
  std::vector<int> labels() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

EvalReport run_experiment(const ExperimentConfig& config, ExperimentData data, const PipelineConfig& pipeline);

// The source-selection × extraction-layer grid plus the baseline.
std::vector<ExperimentConfig> grid_configs(const ExperimentConfig& base, bool include_manual);

}  // namespace srl
