#include "srl/sentiment.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "srl/error.hpp"

namespace srl {

SentimentModel::SentimentModel(std::size_t input_dim, std::size_t width_, const SentimentModelConfig& config)
    : lstm(input_dim, config.hidden),
      dropout(config.dropout_rate),
      head(config.hidden, 1, nn::Activation::sigmoid),
      width(width_) {
  if (width == 0) throw ConfigError("sentiment model: document width r must be >= 1");
}

void SentimentModel::init(nn::Rng& rng) {
  lstm.init(rng);
  head.init(rng);
}

SentimentModel::Trace SentimentModel::forward(const DocMatrix& doc, nn::Mode mode, nn::Rng* rng) const {
  if (doc.rows() != input_dim())
    throw ShapeError("sentiment model expects " + std::to_string(input_dim()) + "-dim word vectors, document '" +
                     doc.id + "' has " + std::to_string(doc.rows()));
  if (doc.width != width)
    throw ShapeError("sentiment model expects width " + std::to_string(width) + ", document '" + doc.id +
                     "' has " + std::to_string(doc.width));
  Trace tr;
  tr.lstm = lstm.forward(doc.columns, doc.effective_length());
  tr.dropped = tr.lstm.final_hidden();
  if (mode == nn::Mode::training && dropout.rate() > 0.0) {
    if (!rng) throw ConfigError("training-mode dropout needs a random generator");
    tr.mask = dropout.sample_mask(tr.dropped.size(), 1, *rng);
    tr.dropped = tr.dropped.cwiseProduct(tr.mask);
  }
  tr.logit = head.pre_activation(tr.dropped)(0, 0);
  tr.probability = 1.0 / (1.0 + std::exp(-tr.logit));
  return tr;
}

double SentimentModel::loss(const Trace& tr, int label, double scale) {
  // log(1 + e^-z) and log(1 + e^z) evaluated stably
  const double z = tr.logit;
  const double softplus_neg = std::max(-z, 0.0) + std::log1p(std::exp(-std::abs(z)));
  const double softplus_pos = std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
  return scale * (label == 1 ? softplus_neg : softplus_pos);
}

void SentimentModel::backward(const Trace& tr, int label, double scale) {
  nn::Matrix d_logit(1, 1);
  d_logit(0, 0) = scale * (tr.probability - static_cast<double>(label));
  nn::Vector d_h = head.backward_pre(tr.dropped, d_logit);
  if (tr.mask.size() > 0) d_h = d_h.cwiseProduct(tr.mask);
  lstm.backward(tr.lstm, d_h);
}

nn::ParamList SentimentModel::params() {
  auto p = lstm.params("lstm");
  auto h = head.params("head");
  p.insert(p.end(), h.begin(), h.end());
  return p;
}

namespace {

std::vector<double> snapshot(const nn::ParamList& params) {
  std::vector<double> out;
  for (const auto& p : params) out.insert(out.end(), p.value.begin(), p.value.end());
  return out;
}

}  // namespace

SentimentTraining train_sentiment(const LabeledDomainSet& data, const SentimentModelConfig& model_config,
                                  const nn::TrainConfig& train_config) {
  train_config.validate();
  if (data.empty()) throw DataError("sentiment training: empty data set");
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < data.size(); ++i) by_class[static_cast<int>(data.items[i].polarity)].push_back(i);
  if (by_class[0].size() < 2 || by_class[1].size() < 2)
    throw DataError("sentiment training needs at least two items of each polarity (have " +
                    std::to_string(by_class[1].size()) + " positive, " + std::to_string(by_class[0].size()) +
                    " negative)");

  const auto& first = data.items.front().matrix;
  SentimentTraining out;
  out.model = SentimentModel(first.rows(), first.width, model_config);
  out.model.seed = train_config.seed;
  nn::Rng rng(train_config.seed);
  out.model.init(rng);

  std::vector<std::size_t> train_idx, heldout_idx;
  for (auto& cls : by_class) {
    std::shuffle(cls.begin(), cls.end(), rng);
    const std::size_t n_hold = std::max<std::size_t>(1, cls.size() / 10);
    heldout_idx.insert(heldout_idx.end(), cls.begin(), cls.begin() + static_cast<std::ptrdiff_t>(n_hold));
    train_idx.insert(train_idx.end(), cls.begin() + static_cast<std::ptrdiff_t>(n_hold), cls.end());
  }
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(heldout_idx.begin(), heldout_idx.end());

  auto& model = out.model;
  auto params = model.params();
  nn::Optimizer opt(train_config.optimizer, train_config.learning_rate);
  double best_loss = std::numeric_limits<double>::infinity();
  std::vector<double> best_params;
  std::size_t since_best = 0;

  for (std::size_t epoch = 1; epoch <= train_config.epochs; ++epoch) {
    std::shuffle(train_idx.begin(), train_idx.end(), rng);
    double train_loss = 0.0;
    for (std::size_t start = 0; start < train_idx.size(); start += train_config.batch_size) {
      const std::size_t end = std::min(train_idx.size(), start + train_config.batch_size);
      const double scale = 1.0 / static_cast<double>(end - start);
      nn::zero_grad(params);
      for (std::size_t b = start; b < end; ++b) {
        const auto& item = data.items[train_idx[b]];
        const int label = static_cast<int>(item.polarity);
        const auto tr = model.forward(item.matrix, nn::Mode::training, &rng);
        train_loss += SentimentModel::loss(tr, label);
        model.backward(tr, label, scale);
      }
      opt.step(params);
    }
    SentimentEpoch rec;
    rec.epoch = epoch;
    rec.train_loss = train_loss / static_cast<double>(train_idx.size());
    std::size_t correct = 0;
    for (auto i : heldout_idx) {
      const auto& item = data.items[i];
      const int label = static_cast<int>(item.polarity);
      const auto tr = model.forward(item.matrix, nn::Mode::inference);
      rec.heldout_loss += SentimentModel::loss(tr, label);
      if ((tr.probability > 0.5 ? 1 : 0) == label) ++correct;
    }
    rec.heldout_loss /= static_cast<double>(heldout_idx.size());
    rec.heldout_accuracy = static_cast<double>(correct) / static_cast<double>(heldout_idx.size());
    out.history.push_back(rec);
    spdlog::debug("sentiment epoch {}: loss {:.4f} held-out loss {:.4f} acc {:.4f}", epoch, rec.train_loss,
                  rec.heldout_loss, rec.heldout_accuracy);

    if (train_config.patience) {
      if (rec.heldout_loss < best_loss) {
        best_loss = rec.heldout_loss;
        best_params = snapshot(params);
        since_best = 0;
      } else if (++since_best >= *train_config.patience) {
        spdlog::info("sentiment training stopped early at epoch {}", epoch);
        break;
      }
    }
  }
  if (!best_params.empty()) nn::assign_parameters(params, best_params);
  model.trained = true;
  return out;
}

double predict_polarity(const SentimentModel& model, const DocMatrix& doc) {
  return model.forward(doc, nn::Mode::inference).probability;
}

std::string to_string(RepresentationLayer l) {
  switch (l) {
    case RepresentationLayer::frozen_lstm: return "frozen_lstm";
    case RepresentationLayer::frozen_dense: return "frozen_dense";
    case RepresentationLayer::finetuned_lstm: return "finetuned_lstm";
  }
  return "frozen_lstm";
}

RepresentationLayer parse_representation_layer(const std::string& s) {
  if (s == "frozen_lstm") return RepresentationLayer::frozen_lstm;
  if (s == "frozen_dense") return RepresentationLayer::frozen_dense;
  if (s == "finetuned_lstm") return RepresentationLayer::finetuned_lstm;
  throw ConfigError("unknown representation layer '" + s + "'");
}

SentimentRepresentation extract_representation(const SentimentModel& model, const DocMatrix& doc,
                                               RepresentationLayer layer) {
  if (!model.trained) throw ConfigError("cannot extract representations from an untrained sentiment model");
  const auto tr = model.forward(doc, nn::Mode::inference);
  switch (layer) {
    case RepresentationLayer::frozen_lstm:
      return {tr.lstm.final_hidden(), layer};
    case RepresentationLayer::frozen_dense:
      return {nn::Vector::Constant(1, tr.logit), layer};
    case RepresentationLayer::finetuned_lstm:
      break;
  }
  throw ConfigError("finetuned_lstm representations come from the finetune composite, not frozen extraction");
}

PolarityFeatures polarity_features(const SentimentModel& model, const UserRecord& user,
                                   const EmbeddingTable& table, std::size_t r) {
  PolarityFeatures f;
  Tokens all;
  std::size_t positive = 0;
  for (const auto& post : user.posts) {
    all.insert(all.end(), post.begin(), post.end());
    DocMatrix m;
    try {
      m = doc_matrix(user.user_id, post, table, r);
    } catch (const OutOfVocabularyError&) {
      continue;
    }
    ++f.posts_scored;
    if (predict_polarity(model, m) > 0.5) ++positive;
  }
  if (f.posts_scored == 0)
    throw OutOfVocabularyError("user '" + user.user_id + "' has no post with in-vocabulary tokens");
  f.positive_rate = static_cast<double>(positive) / static_cast<double>(f.posts_scored);
  f.doc_polarity = predict_polarity(model, doc_matrix(user.user_id, all, table, r));
  return f;
}

void save_model(const SentimentModel& model, const std::filesystem::path& path) {
  nlohmann::json header;
  header["format_version"] = nn::kCheckpointVersion;
  header["kind"] = "sentiment";
  header["layers"] = nlohmann::json::array(
      {{{"type", "lstm"}, {"input", model.input_dim()}, {"hidden", model.hidden_size()}},
       {{"type", "dropout"}, {"rate", model.dropout.rate()}},
       {{"type", "dense"}, {"in", model.head.in()}, {"out", model.head.out()}, {"activation", "sigmoid"}}});
  header["width"] = model.width;
  header["seed"] = model.seed;
  header["trained"] = model.trained;
  auto copy = model;
  nn::write_checkpoint(path, header, copy.params());
}

SentimentModel load_sentiment_model(const std::filesystem::path& path) {
  const auto ck = nn::read_checkpoint(path);
  try {
    const auto& h = ck.header;
    if (h.at("kind").get<std::string>() != "sentiment")
      throw FormatError(path.string() + ": not a sentiment model checkpoint");
    const auto& layers = h.at("layers");
    SentimentModelConfig cfg;
    cfg.hidden = layers.at(0).at("hidden").get<std::size_t>();
    cfg.dropout_rate = layers.at(1).at("rate").get<double>();
    SentimentModel m(layers.at(0).at("input").get<std::size_t>(), h.at("width").get<std::size_t>(), cfg);
    m.seed = h.at("seed").get<std::uint64_t>();
    m.trained = h.at("trained").get<bool>();
    nn::assign_parameters(m.params(), ck.values);
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": bad sentiment header: " + e.what());
  }
}

}  // namespace srl
