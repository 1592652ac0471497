#include "srl/gender.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <fstream>
#include <numeric>

#include "srl/error.hpp"

namespace srl {

std::size_t layout_size(const FeatureLayout& layout) {
  std::size_t n = 0;
  for (const auto& s : layout) n += s.size;
  return n;
}

namespace {

FeatureVector join(const DocVector& v, const std::string& name, const nn::Vector& extra) {
  FeatureVector f;
  f.user_id = v.id;
  f.layout = {{"doc_vector", static_cast<std::size_t>(v.values.size())}};
  f.values.resize(v.values.size() + extra.size());
  f.values.head(v.values.size()) = v.values;
  if (extra.size() > 0) {
    f.layout.push_back({name, static_cast<std::size_t>(extra.size())});
    f.values.tail(extra.size()) = extra;
  }
  if (!f.values.allFinite()) throw DataError("non-finite feature values for '" + v.id + "'");
  return f;
}

}  // namespace

FeatureVector concat_features(const DocVector& v) { return join(v, "", nn::Vector()); }

FeatureVector concat_features(const DocVector& v, const SentimentRepresentation& h) {
  return join(v, "sentiment", h.values);
}

FeatureVector concat_features(const DocVector& v, const PolarityFeatures& p) {
  nn::Vector e(2);
  e << p.doc_polarity, p.positive_rate;
  return join(v, "polarity", e);
}

void check_uniform_layout(const std::vector<FeatureVector>& features) {
  if (features.empty()) return;
  const auto& ref = features.front().layout;
  for (const auto& f : features) {
    if (f.layout != ref)
      throw DataError("feature layout of '" + f.user_id + "' differs from '" + features.front().user_id +
                      "' (" + std::to_string(layout_size(f.layout)) + " vs " +
                      std::to_string(layout_size(ref)) + " values)");
    if (static_cast<std::size_t>(f.values.size()) != layout_size(f.layout))
      throw DataError("feature vector of '" + f.user_id + "' does not match its layout");
  }
}

void save_features(const std::vector<FeatureVector>& features, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& f : features) {
    nlohmann::json j;
    j["user_id"] = f.user_id;
    j["label"] = std::string(to_string(f.label));
    auto names = nlohmann::json::array();
    auto sizes = nlohmann::json::array();
    for (const auto& s : f.layout) {
      names.push_back(s.name);
      sizes.push_back(s.size);
    }
    j["layout"] = names;
    j["sizes"] = sizes;
    j["values"] = std::vector<double>(f.values.data(), f.values.data() + f.values.size());
    out << j.dump() << '\n';
  }
}

std::vector<FeatureVector> load_features(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<FeatureVector> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      FeatureVector f;
      f.user_id = j.at("user_id").get<std::string>();
      const auto label = j.at("label").get<std::string>();
      if (label != "male" && label != "female") throw SchemaError("unknown label '" + label + "'", line_no);
      f.label = label == "male" ? Gender::male : Gender::female;
      const auto values = j.at("values").get<std::vector<double>>();
      f.values = Eigen::Map<const nn::Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
      const auto names = j.at("layout").get<std::vector<std::string>>();
      std::vector<std::size_t> sizes;
      if (j.contains("sizes")) {
        sizes = j.at("sizes").get<std::vector<std::size_t>>();
      } else if (names.size() == 1) {
        sizes = {values.size()};
      } else {
        throw SchemaError("multi-segment layout without 'sizes'", line_no);
      }
      if (sizes.size() != names.size()) throw SchemaError("'layout' and 'sizes' lengths differ", line_no);
      for (std::size_t i = 0; i < names.size(); ++i) f.layout.push_back({names[i], sizes[i]});
      if (layout_size(f.layout) != values.size())
        throw SchemaError("layout sizes do not sum to the value count", line_no);
      out.push_back(std::move(f));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("bad feature record: ") + e.what(), line_no);
    }
  }
  return out;
}

std::string to_string(ClassifierKind k) { return k == ClassifierKind::mlp ? "mlp" : "logreg"; }

ClassifierKind parse_classifier(const std::string& s) {
  if (s == "mlp") return ClassifierKind::mlp;
  if (s == "logreg" || s == "logistic_regression") return ClassifierKind::logistic_regression;
  throw ConfigError("unknown classifier '" + s + "' (expected mlp|logreg)");
}

nn::Mlp make_classifier(std::size_t input_size, const ClassifierConfig& config) {
  std::vector<nn::Layer> layers;
  std::size_t width = input_size;
  if (config.kind == ClassifierKind::mlp) {
    for (std::size_t i = 0; i < config.hidden.size(); ++i) {
      layers.emplace_back(nn::DenseLayer(width, config.hidden[i], nn::Activation::relu));
      width = config.hidden[i];
      if (i == 0 && config.dropout > 0.0) layers.emplace_back(nn::DropoutLayer(config.dropout));
    }
  }
  layers.emplace_back(nn::DenseLayer(width, 2, nn::Activation::softmax));
  return nn::Mlp(std::move(layers));
}

nn::Matrix GenderModel::normalize(const nn::Matrix& x) const {
  if (static_cast<std::size_t>(x.rows()) != network.input_size())
    throw ShapeError("gender model expects " + std::to_string(network.input_size()) + " features, got " +
                     std::to_string(x.rows()));
  nn::Matrix out = x;
  out.colwise() -= input_mean;
  out = input_scale.cwiseInverse().asDiagonal() * out;
  return out;
}

nn::ParamList GenderModel::params() {
  auto p = network.params("mlp");
  p.push_back({"input.mean", {input_mean.data(), static_cast<std::size_t>(input_mean.size())}, {}});
  p.push_back({"input.scale", {input_scale.data(), static_cast<std::size_t>(input_scale.size())}, {}});
  return p;
}

void run_minibatch_epoch(const BatchLoop& loop, nn::Rng& rng, std::vector<std::size_t>& order,
                         const std::function<double(const std::vector<std::size_t>&)>& batch) {
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < loop.samples; start += loop.config.batch_size) {
    const std::size_t end = std::min(loop.samples, start + loop.config.batch_size);
    idx.assign(order.begin() + static_cast<std::ptrdiff_t>(start), order.begin() + static_cast<std::ptrdiff_t>(end));
    batch(idx);
  }
}

namespace {

nn::Matrix gather(const nn::Matrix& x, const std::vector<std::size_t>& idx) {
  nn::Matrix out(x.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = x.col(static_cast<Eigen::Index>(idx[i]));
  return out;
}

void fit_normalizer(GenderModel& m, const nn::Matrix& x, bool standardize) {
  const auto n = x.rows();
  m.input_mean = nn::Vector::Zero(n);
  m.input_scale = nn::Vector::Ones(n);
  if (!standardize) return;
  m.input_mean = x.rowwise().mean();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double var = (x.row(i).array() - m.input_mean(i)).square().mean();
    const double sd = std::sqrt(var);
    m.input_scale(i) = sd > 1e-12 ? sd : 1.0;
  }
}

}  // namespace

GenderTraining train_gender(const std::vector<FeatureVector>& features, const ClassifierConfig& classifier,
                            const nn::TrainConfig& train, const EpochCallback& on_epoch) {
  train.validate();
  if (features.empty()) throw DataError("gender training: no samples");
  check_uniform_layout(features);
  const auto n = static_cast<Eigen::Index>(features.size());
  const auto dim = features.front().values.size();
  nn::Matrix x(dim, n);
  nn::Matrix target = nn::Matrix::Zero(2, n);
  bool seen[2] = {false, false};
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto& f = features[static_cast<std::size_t>(j)];
    x.col(j) = f.values;
    const int label = static_cast<int>(f.label);
    target(label, j) = 1.0;
    seen[label] = true;
  }
  if (!seen[0] || !seen[1]) throw DataError("gender training needs both classes present");

  GenderTraining out;
  auto& model = out.model;
  model.layout = features.front().layout;
  model.seed = train.seed;
  fit_normalizer(model, x, classifier.standardize);
  nn::Rng rng(train.seed);
  model.network = make_classifier(static_cast<std::size_t>(dim), classifier);
  model.network.init(rng);
  const nn::Matrix xn = model.normalize(x);

  auto params = model.network.params();
  nn::Optimizer opt(train.optimizer, train.learning_rate);
  std::vector<std::size_t> order(features.size());
  std::iota(order.begin(), order.end(), 0);
  const BatchLoop loop{features.size(), train};

  for (std::size_t epoch = 1; epoch <= train.epochs; ++epoch) {
    double total = 0.0;
    run_minibatch_epoch(loop, rng, order, [&](const std::vector<std::size_t>& idx) {
      const nn::Matrix xb = gather(xn, idx);
      const nn::Matrix tb = gather(target, idx);
      const auto acts = model.network.forward(xb, nn::Mode::training, &rng);
      nn::zero_grad(params);
      const double l = model.network.loss(acts, tb, nn::Loss::categorical_cross_entropy);
      model.network.backward(acts, tb, nn::Loss::categorical_cross_entropy);
      opt.step(params);
      total += l * static_cast<double>(idx.size());
      return l;
    });
    GenderEpoch rec;
    rec.epoch = epoch;
    rec.train_loss = total / static_cast<double>(n);
    const nn::Matrix p = model.network.predict(xn);
    std::size_t correct = 0;
    for (Eigen::Index j = 0; j < n; ++j)
      if ((p(1, j) > p(0, j) ? 1 : 0) == (target(1, j) > 0.5 ? 1 : 0)) ++correct;
    rec.train_accuracy = static_cast<double>(correct) / static_cast<double>(n);
    out.history.push_back(rec);
    if (on_epoch) on_epoch(epoch, model);
  }
  return out;
}

GenderPrediction predict_gender(const GenderModel& model, const FeatureVector& f) {
  return predict_gender(model, std::vector<FeatureVector>{f}).front();
}

std::vector<GenderPrediction> predict_gender(const GenderModel& model, const std::vector<FeatureVector>& fs) {
  if (fs.empty()) return {};
  nn::Matrix x(static_cast<Eigen::Index>(model.network.input_size()), static_cast<Eigen::Index>(fs.size()));
  for (std::size_t j = 0; j < fs.size(); ++j) {
    if (static_cast<std::size_t>(fs[j].values.size()) != model.network.input_size())
      throw ShapeError("gender model expects " + std::to_string(model.network.input_size()) +
                       " features, '" + fs[j].user_id + "' has " + std::to_string(fs[j].values.size()));
    x.col(static_cast<Eigen::Index>(j)) = fs[j].values;
  }
  const nn::Matrix p = model.network.predict(model.normalize(x));
  std::vector<GenderPrediction> out(fs.size());
  for (std::size_t j = 0; j < fs.size(); ++j) {
    const auto c = static_cast<Eigen::Index>(j);
    out[j].probabilities = {p(0, c), p(1, c)};
    out[j].label = p(1, c) > p(0, c) ? Gender::female : Gender::male;
  }
  return out;
}

double accuracy(const GenderModel& model, const std::vector<FeatureVector>& fs) {
  if (fs.empty()) throw DataError("accuracy: empty evaluation set");
  const auto preds = predict_gender(model, fs);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < fs.size(); ++i)
    if (preds[i].label == fs[i].label) ++correct;
  return static_cast<double>(correct) / static_cast<double>(fs.size());
}

void save_model(const GenderModel& model, const std::filesystem::path& path) {
  nlohmann::json header;
  header["format_version"] = nn::kCheckpointVersion;
  header["kind"] = "gender";
  auto layers = model.network.spec();
  layers.push_back({{"type", "normalizer"}, {"size", model.input_mean.size()}});
  header["layers"] = layers;
  header["seed"] = model.seed;
  auto names = nlohmann::json::array();
  auto sizes = nlohmann::json::array();
  for (const auto& s : model.layout) {
    names.push_back(s.name);
    sizes.push_back(s.size);
  }
  header["layout"] = names;
  header["sizes"] = sizes;
  auto copy = model;
  nn::write_checkpoint(path, header, copy.params());
}

GenderModel load_gender_model(const std::filesystem::path& path) {
  const auto ck = nn::read_checkpoint(path);
  try {
    const auto& h = ck.header;
    if (h.at("kind").get<std::string>() != "gender")
      throw FormatError(path.string() + ": not a gender model checkpoint");
    auto layers = h.at("layers");
    const auto norm = layers.back();
    if (norm.at("type").get<std::string>() != "normalizer") throw FormatError(path.string() + ": missing normalizer");
    layers.erase(layers.end() - 1);
    GenderModel m;
    m.network = nn::Mlp::from_spec(layers);
    const auto n = norm.at("size").get<Eigen::Index>();
    m.input_mean = nn::Vector::Zero(n);
    m.input_scale = nn::Vector::Ones(n);
    m.seed = h.at("seed").get<std::uint64_t>();
    const auto names = h.at("layout").get<std::vector<std::string>>();
    const auto sizes = h.at("sizes").get<std::vector<std::size_t>>();
    for (std::size_t i = 0; i < names.size() && i < sizes.size(); ++i) m.layout.push_back({names[i], sizes[i]});
    nn::assign_parameters(m.params(), ck.values);
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": bad gender header: " + e.what());
  }
}

}  // namespace srl
