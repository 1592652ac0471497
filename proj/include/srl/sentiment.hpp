#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "srl/corpus.hpp"
#include "srl/domainsel.hpp"
#include "srl/embed.hpp"
#include "srl/nn.hpp"

namespace srl {

struct SentimentModelConfig {
  std::size_t hidden = 64;
  double dropout_rate = 0.4;
};

// LSTM → dropout on the final hidden state → dense(H→1, sigmoid).
class SentimentModel {
 public:
  SentimentModel() = default;
  SentimentModel(std::size_t input_dim, std::size_t width, const SentimentModelConfig& config);

  struct Trace {
    nn::LstmTrace lstm;
    nn::Vector mask;  // empty at inference
    nn::Vector dropped;
    double logit = 0.0;
    double probability = 0.5;
  };

  void init(nn::Rng& rng);
  Trace forward(const DocMatrix& doc, nn::Mode mode, nn::Rng* rng = nullptr) const;
  // Binary cross-entropy of one sample, times `scale`.
  static double loss(const Trace& trace, int label, double scale = 1.0);
  void backward(const Trace& trace, int label, double scale = 1.0);

  nn::ParamList params();
  std::size_t input_dim() const { return lstm.input_size(); }
  std::size_t hidden_size() const { return lstm.hidden_size(); }

  nn::LstmLayer lstm;
  nn::DropoutLayer dropout;
  nn::DenseLayer head;
  std::size_t width = 0;  // r, the document-matrix width the model was trained on
  bool trained = false;
  std::uint64_t seed = 0;
};

struct SentimentEpoch {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double heldout_loss = 0.0;
  double heldout_accuracy = 0.0;
};

struct SentimentTraining {
  SentimentModel model;
  std::vector<SentimentEpoch> history;
};

// Holds out 10% of the items (stratified, seeded) for the training curve.
// Requires at least two items of each polarity.
SentimentTraining train_sentiment(const LabeledDomainSet& data, const SentimentModelConfig& model_config,
                                  const nn::TrainConfig& train_config);

// Probability of positive polarity, inference mode.
double predict_polarity(const SentimentModel& model, const DocMatrix& doc);

enum class RepresentationLayer { frozen_lstm, frozen_dense, finetuned_lstm };
std::string to_string(RepresentationLayer l);
RepresentationLayer parse_representation_layer(const std::string& s);

struct SentimentRepresentation {
  nn::Vector values;
  RepresentationLayer layer_source = RepresentationLayer::frozen_lstm;
};

// frozen_lstm: final hidden state (length H). frozen_dense: head output
// before the sigmoid (length 1). The model is not modified.
SentimentRepresentation extract_representation(const SentimentModel& model, const DocMatrix& doc,
                                               RepresentationLayer layer);

struct PolarityFeatures {
  double doc_polarity = 0.5;   // probability for the whole virtual document
  double positive_rate = 0.0;  // share of posts with probability > 0.5
  std::size_t posts_scored = 0;
};

// Posts without any in-vocabulary token are not scored and do not count
// towards the post total. Throws OutOfVocabularyError if no post is scorable.
PolarityFeatures polarity_features(const SentimentModel& model, const UserRecord& user,
                                   const EmbeddingTable& table, std::size_t r);

void save_model(const SentimentModel& model, const std::filesystem::path& path);
SentimentModel load_sentiment_model(const std::filesystem::path& path);

}  // namespace srl
