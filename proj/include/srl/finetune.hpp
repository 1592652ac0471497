#pragma once

#include <functional>
#include <vector>

#include "srl/gender.hpp"
#include "srl/sentiment.hpp"

namespace srl {

struct FinetuneSample {
  std::string user_id;
  nn::Vector doc_vector;  // input A
  DocMatrix matrix;       // input B, fed through the LSTM
  Gender label = Gender::male;
};

// Two-input gender classifier: the sentiment model's LSTM (trainable, head
// discarded) produces h from the document matrix and the MLP sees [v; h].
class FinetuneModel {
 public:
  nn::LstmLayer lstm;
  GenderModel classifier;  // input layout [doc_vector, sentiment]
  std::size_t width = 0;

  std::size_t doc_dim() const;
  // Raw (unnormalised) [v; h] columns for the given samples.
  nn::Matrix features(const std::vector<FinetuneSample>& samples, const std::vector<std::size_t>& idx,
                      std::vector<nn::LstmTrace>* traces = nullptr) const;
  nn::ParamList params();  // MLP parameters followed by LSTM parameters
};

FinetuneModel build_finetune_model(const SentimentModel& sentiment, std::size_t doc_dim,
                                   const ClassifierConfig& classifier);

struct FinetuneTraining {
  FinetuneModel model;
  std::vector<GenderEpoch> history;
};

using FinetuneCallback = std::function<void(std::size_t epoch, const FinetuneModel& model)>;

// Same schedule as train_gender (seeded init, shuffling, dropout). The LSTM is
// updated by its own optimizer at `lstm_learning_rate`; 0 keeps it frozen.
FinetuneTraining train_finetune(FinetuneModel model, const std::vector<FinetuneSample>& samples,
                                const ClassifierConfig& classifier, const nn::TrainConfig& train,
                                double lstm_learning_rate, const FinetuneCallback& on_epoch = {});

std::vector<GenderPrediction> predict_finetune(const FinetuneModel& model, const std::vector<FinetuneSample>& samples);

}  // namespace srl
