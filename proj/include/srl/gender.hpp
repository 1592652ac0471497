#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "srl/corpus.hpp"
#include "srl/embed.hpp"
#include "srl/nn.hpp"
#include "srl/sentiment.hpp"

namespace srl {

struct FeatureSegment {
  std::string name;  // "doc_vector", "sentiment" or "polarity"
  std::size_t size = 0;
  friend bool operator==(const FeatureSegment&, const FeatureSegment&) = default;
};
using FeatureLayout = std::vector<FeatureSegment>;

struct FeatureVector {
  std::string user_id;
  Gender label = Gender::male;
  FeatureLayout layout;
  nn::Vector values;
};

std::size_t layout_size(const FeatureLayout& layout);

// [doc_vector] baseline, [doc_vector, sentiment] and [doc_vector, polarity].
FeatureVector concat_features(const DocVector& v);
FeatureVector concat_features(const DocVector& v, const SentimentRepresentation& h);
FeatureVector concat_features(const DocVector& v, const PolarityFeatures& p);

// Throws DataError when layouts differ between rows.
void check_uniform_layout(const std::vector<FeatureVector>& features);

// JSONL: {"user_id", "label", "layout": [names], "sizes": [segment sizes], "values"}.
void save_features(const std::vector<FeatureVector>& features, const std::filesystem::path& path);
std::vector<FeatureVector> load_features(const std::filesystem::path& path);

enum class ClassifierKind { mlp, logistic_regression };
std::string to_string(ClassifierKind k);
ClassifierKind parse_classifier(const std::string& s);

struct ClassifierConfig {
  ClassifierKind kind = ClassifierKind::mlp;
  std::vector<std::size_t> hidden{50, 10};
  double dropout = 0.4;     // follows the first hidden layer
  bool standardize = true;  // z-score inputs with training-set statistics
};

// dense(in→50, relu) → dropout(0.4) → dense(50→10, relu) → dense(10→2, softmax),
// or dense(in→2, softmax) for logistic regression.
nn::Mlp make_classifier(std::size_t input_size, const ClassifierConfig& config);

struct GenderModel {
  nn::Mlp network;
  FeatureLayout layout;
  nn::Vector input_mean;   // applied as (x - mean) / scale
  nn::Vector input_scale;
  std::uint64_t seed = 0;

  nn::Matrix normalize(const nn::Matrix& x) const;
  nn::ParamList params();
};

struct GenderEpoch {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
};

struct GenderTraining {
  GenderModel model;
  std::vector<GenderEpoch> history;
};

// Called after every epoch with the current model; used to score the epoch grid.
using EpochCallback = std::function<void(std::size_t epoch, const GenderModel& model)>;

// Categorical cross-entropy over one-hot {male, female} targets.
GenderTraining train_gender(const std::vector<FeatureVector>& features, const ClassifierConfig& classifier,
                            const nn::TrainConfig& train, const EpochCallback& on_epoch = {});

struct GenderPrediction {
  Gender label = Gender::male;
  std::array<double, 2> probabilities{0.5, 0.5};
};

// Argmax with ties going to male.
GenderPrediction predict_gender(const GenderModel& model, const FeatureVector& f);
std::vector<GenderPrediction> predict_gender(const GenderModel& model, const std::vector<FeatureVector>& fs);
double accuracy(const GenderModel& model, const std::vector<FeatureVector>& fs);

void save_model(const GenderModel& model, const std::filesystem::path& path);
GenderModel load_gender_model(const std::filesystem::path& path);

// Shared mini-batch loop. `batch` runs forward/backward for the given sample
// indices (gradients already zeroed) and returns the summed loss.
struct BatchLoop {
  std::size_t samples = 0;
  nn::TrainConfig config;
};
void run_minibatch_epoch(const BatchLoop& loop, nn::Rng& rng, std::vector<std::size_t>& order,
                         const std::function<double(const std::vector<std::size_t>&)>& batch);

}  // namespace srl
