#include "srl/finetune.hpp"

#include <numeric>

#include "srl/error.hpp"

namespace srl {

std::size_t FinetuneModel::doc_dim() const { return classifier.network.input_size() - lstm.hidden_size(); }

nn::Matrix FinetuneModel::features(const std::vector<FinetuneSample>& samples, const std::vector<std::size_t>& idx,
                                   std::vector<nn::LstmTrace>* traces) const {
  const auto d = static_cast<Eigen::Index>(doc_dim());
  const auto h = static_cast<Eigen::Index>(lstm.hidden_size());
  nn::Matrix x(d + h, static_cast<Eigen::Index>(idx.size()));
  if (traces) traces->clear();
  for (std::size_t j = 0; j < idx.size(); ++j) {
    const auto& s = samples[idx[j]];
    if (s.doc_vector.size() != d) throw ShapeError("finetune: doc vector of '" + s.user_id + "' has wrong length");
    if (s.matrix.width != width) throw ShapeError("finetune: matrix of '" + s.user_id + "' has wrong width");
    auto tr = lstm.forward(s.matrix.columns, s.matrix.effective_length());
    const auto c = static_cast<Eigen::Index>(j);
    x.col(c).head(d) = s.doc_vector;
    x.col(c).tail(h) = tr.final_hidden();
    if (traces) traces->push_back(std::move(tr));
  }
  return x;
}

nn::ParamList FinetuneModel::params() {
  auto p = classifier.network.params("mlp");
  auto l = lstm.params("lstm");
  p.insert(p.end(), l.begin(), l.end());
  return p;
}

FinetuneModel build_finetune_model(const SentimentModel& sentiment, std::size_t doc_dim,
                                   const ClassifierConfig& classifier) {
  if (!sentiment.trained) throw ConfigError("finetune composite needs a trained sentiment model");
  FinetuneModel m;
  m.lstm = sentiment.lstm;
  m.width = sentiment.width;
  const std::size_t in = doc_dim + sentiment.hidden_size();
  m.classifier.network = make_classifier(in, classifier);
  m.classifier.layout = {{"doc_vector", doc_dim}, {"sentiment", sentiment.hidden_size()}};
  m.classifier.input_mean = nn::Vector::Zero(static_cast<Eigen::Index>(in));
  m.classifier.input_scale = nn::Vector::Ones(static_cast<Eigen::Index>(in));
  return m;
}

FinetuneTraining train_finetune(FinetuneModel model, const std::vector<FinetuneSample>& samples,
                                const ClassifierConfig& classifier, const nn::TrainConfig& train,
                                double lstm_learning_rate, const FinetuneCallback& on_epoch) {
  train.validate();
  if (samples.empty()) throw DataError("finetune training: no samples");
  const auto n = samples.size();
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  nn::Matrix target = nn::Matrix::Zero(2, static_cast<Eigen::Index>(n));
  bool seen[2] = {false, false};
  for (std::size_t j = 0; j < n; ++j) {
    const int label = static_cast<int>(samples[j].label);
    target(label, static_cast<Eigen::Index>(j)) = 1.0;
    seen[label] = true;
  }
  if (!seen[0] || !seen[1]) throw DataError("finetune training needs both classes present");

  // Normaliser fitted on the features of the initial (transferred) LSTM.
  const nn::Matrix x0 = model.features(samples, all);
  auto& cls = model.classifier;
  cls.input_mean = nn::Vector::Zero(x0.rows());
  cls.input_scale = nn::Vector::Ones(x0.rows());
  if (classifier.standardize) {
    cls.input_mean = x0.rowwise().mean();
    for (Eigen::Index i = 0; i < x0.rows(); ++i) {
      const double sd = std::sqrt((x0.row(i).array() - cls.input_mean(i)).square().mean());
      cls.input_scale(i) = sd > 1e-12 ? sd : 1.0;
    }
  }
  cls.seed = train.seed;
  nn::Rng rng(train.seed);
  cls.network = make_classifier(x0.rows(), classifier);
  cls.network.init(rng);

  auto mlp_params = cls.network.params("mlp");
  auto lstm_params = model.lstm.params("lstm");
  nn::Optimizer mlp_opt(train.optimizer, train.learning_rate);
  nn::Optimizer lstm_opt(train.optimizer, lstm_learning_rate);
  const auto h = static_cast<Eigen::Index>(model.lstm.hidden_size());

  FinetuneTraining out;
  std::vector<std::size_t> order = all;
  const BatchLoop loop{n, train};
  std::vector<nn::LstmTrace> traces;
  for (std::size_t epoch = 1; epoch <= train.epochs; ++epoch) {
    double total = 0.0;
    run_minibatch_epoch(loop, rng, order, [&](const std::vector<std::size_t>& idx) {
      const nn::Matrix xb = cls.normalize(model.features(samples, idx, &traces));
      nn::Matrix tb(2, static_cast<Eigen::Index>(idx.size()));
      for (std::size_t j = 0; j < idx.size(); ++j)
        tb.col(static_cast<Eigen::Index>(j)) = target.col(static_cast<Eigen::Index>(idx[j]));
      const auto acts = cls.network.forward(xb, nn::Mode::training, &rng);
      nn::zero_grad(mlp_params);
      nn::zero_grad(lstm_params);
      const double l = cls.network.loss(acts, tb, nn::Loss::categorical_cross_entropy);
      const nn::Matrix dx = cls.network.backward(acts, tb, nn::Loss::categorical_cross_entropy);
      const nn::Vector inv_scale = cls.input_scale.tail(h).cwiseInverse();
      for (std::size_t j = 0; j < idx.size(); ++j) {
        const nn::Vector dh = dx.col(static_cast<Eigen::Index>(j)).tail(h).cwiseProduct(inv_scale);
        model.lstm.backward(traces[j], dh);
      }
      mlp_opt.step(mlp_params);
      lstm_opt.step(lstm_params);
      total += l * static_cast<double>(idx.size());
      return l;
    });
    GenderEpoch rec;
    rec.epoch = epoch;
    rec.train_loss = total / static_cast<double>(n);
    const nn::Matrix p = cls.network.predict(cls.normalize(model.features(samples, all)));
    std::size_t correct = 0;
    for (std::size_t j = 0; j < n; ++j) {
      const auto c = static_cast<Eigen::Index>(j);
      if ((p(1, c) > p(0, c) ? 1 : 0) == (target(1, c) > 0.5 ? 1 : 0)) ++correct;
    }
    rec.train_accuracy = static_cast<double>(correct) / static_cast<double>(n);
    out.history.push_back(rec);
    if (on_epoch) on_epoch(epoch, model);
  }
  out.model = std::move(model);
  return out;
}

std::vector<GenderPrediction> predict_finetune(const FinetuneModel& model, const std::vector<FinetuneSample>& samples) {
  if (samples.empty()) return {};
  std::vector<std::size_t> all(samples.size());
  std::iota(all.begin(), all.end(), 0);
  const nn::Matrix p = model.classifier.network.predict(model.classifier.normalize(model.features(samples, all)));
  std::vector<GenderPrediction> out(samples.size());
  for (std::size_t j = 0; j < samples.size(); ++j) {
    const auto c = static_cast<Eigen::Index>(j);
    out[j].probabilities = {p(0, c), p(1, c)};
    out[j].label = p(1, c) > p(0, c) ? Gender::female : Gender::male;
  }
  return out;
}

}  // namespace srl
