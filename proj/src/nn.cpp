#include "srl/nn.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "srl/error.hpp"

namespace srl::nn {
namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void apply_activation(Matrix& z, Activation a) {
  switch (a) {
    case Activation::sigmoid:
      z = z.unaryExpr([](double v) { return sigmoid(v); });
      break;
    case Activation::tanh:
      z = z.array().tanh().matrix();
      break;
    case Activation::relu:
      z = z.cwiseMax(0.0);
      break;
    case Activation::softmax:
      for (Eigen::Index j = 0; j < z.cols(); ++j) {
        auto col = z.col(j);
        col.array() -= col.maxCoeff();
        col = col.array().exp().matrix();
        col /= col.sum();
      }
      break;
    case Activation::identity:
      break;
  }
}

Matrix glorot(Eigen::Index rows, Eigen::Index cols, double fan_in, double fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  std::uniform_real_distribution<double> u(-limit, limit);
  Matrix m(rows, cols);
  // Column-major fill keeps the draw order stable across Eigen versions.
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = u(rng);
  return m;
}

template <typename M>
std::span<double> span_of(M& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}

}  // namespace

std::string to_string(Activation a) {
  switch (a) {
    case Activation::sigmoid: return "sigmoid";
    case Activation::tanh: return "tanh";
    case Activation::relu: return "relu";
    case Activation::softmax: return "softmax";
    case Activation::identity: return "identity";
  }
  return "identity";
}

Activation parse_activation(const std::string& s) {
  if (s == "sigmoid") return Activation::sigmoid;
  if (s == "tanh") return Activation::tanh;
  if (s == "relu") return Activation::relu;
  if (s == "softmax") return Activation::softmax;
  if (s == "identity") return Activation::identity;
  throw FormatError("unknown activation '" + s + "'");
}

void zero_grad(const ParamList& params) {
  for (const auto& p : params) std::fill(p.grad.begin(), p.grad.end(), 0.0);
}

std::size_t parameter_count(const ParamList& params) {
  std::size_t n = 0;
  for (const auto& p : params) n += p.value.size();
  return n;
}

std::uint32_t parameter_checksum(const ParamList& params) {
  uLong crc = crc32(0L, Z_NULL, 0);
  for (const auto& p : params)
    crc = crc32(crc, reinterpret_cast<const Bytef*>(p.value.data()),
                static_cast<uInt>(p.value.size_bytes()));
  return static_cast<std::uint32_t>(crc);
}

// ---------------------------------------------------------------- dense ----

DenseLayer::DenseLayer(std::size_t in, std::size_t out, Activation act)
    : weights(Matrix::Zero(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in))),
      bias(Vector::Zero(static_cast<Eigen::Index>(out))),
      activation(act),
      d_weights(Matrix::Zero(weights.rows(), weights.cols())),
      d_bias(Vector::Zero(bias.size())) {
  if (in == 0 || out == 0) throw ConfigError("dense layer sizes must be positive");
}

void DenseLayer::init(Rng& rng) {
  weights = glorot(weights.rows(), weights.cols(), static_cast<double>(weights.cols()),
                   static_cast<double>(weights.rows()), rng);
  bias.setZero();
}

Matrix DenseLayer::pre_activation(const Matrix& x) const {
  if (x.rows() != weights.cols())
    throw ShapeError("dense layer expects " + std::to_string(weights.cols()) + " inputs, got " +
                     std::to_string(x.rows()));
  Matrix z = weights * x;
  z.colwise() += bias;
  return z;
}

Matrix DenseLayer::forward(const Matrix& x) const {
  Matrix z = pre_activation(x);
  apply_activation(z, activation);
  return z;
}

Matrix DenseLayer::backward_pre(const Matrix& x, const Matrix& d_pre) {
  d_weights.noalias() += d_pre * x.transpose();
  d_bias += d_pre.rowwise().sum();
  return weights.transpose() * d_pre;
}

Matrix DenseLayer::backward(const Matrix& x, const Matrix& y, const Matrix& d_out) {
  Matrix d_pre;
  switch (activation) {
    case Activation::sigmoid:
      d_pre = d_out.cwiseProduct(y.cwiseProduct((1.0 - y.array()).matrix()));
      break;
    case Activation::tanh:
      d_pre = d_out.cwiseProduct((1.0 - y.array().square()).matrix());
      break;
    case Activation::relu:
      d_pre = d_out.cwiseProduct((y.array() > 0.0).cast<double>().matrix());
      break;
    case Activation::softmax: {
      d_pre.resize(y.rows(), y.cols());
      for (Eigen::Index j = 0; j < y.cols(); ++j) {
        const double dot = d_out.col(j).dot(y.col(j));
        d_pre.col(j) = y.col(j).cwiseProduct((d_out.col(j).array() - dot).matrix());
      }
      break;
    }
    case Activation::identity:
      d_pre = d_out;
      break;
  }
  return backward_pre(x, d_pre);
}

ParamList DenseLayer::params(const std::string& prefix) {
  return {{prefix + ".weights", span_of(weights), span_of(d_weights)},
          {prefix + ".bias", span_of(bias), span_of(d_bias)}};
}

// -------------------------------------------------------------- dropout ----

DropoutLayer::DropoutLayer(double rate) : rate_(rate) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ConfigError("dropout rate must be in [0, 1)");
}

Matrix DropoutLayer::sample_mask(Eigen::Index rows, Eigen::Index cols, Rng& rng) const {
  std::bernoulli_distribution keep(1.0 - rate_);
  const double scale = 1.0 / (1.0 - rate_);
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = keep(rng) ? scale : 0.0;
  return m;
}

// ------------------------------------------------------------------ mlp ----

Mlp::Mlp(std::vector<Layer> layers) : layers_(std::move(layers)) {
  std::optional<std::size_t> width;
  std::size_t prev_index = 0;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (const auto* d = std::get_if<DenseLayer>(&layers_[i])) {
      if (width && *width != d->in())
        throw ShapeError("layer " + std::to_string(prev_index) + " outputs " +
                         std::to_string(*width) + " values but layer " + std::to_string(i) +
                         " expects " + std::to_string(d->in()));
      width = d->out();
      prev_index = i;
    }
  }
  if (!width) throw ConfigError("an MLP needs at least one dense layer");
}

void Mlp::init(Rng& rng) {
  for (auto& l : layers_)
    if (auto* d = std::get_if<DenseLayer>(&l)) d->init(rng);
}

std::size_t Mlp::input_size() const {
  for (const auto& l : layers_)
    if (const auto* d = std::get_if<DenseLayer>(&l)) return d->in();
  return 0;
}

std::size_t Mlp::output_size() const {
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it)
    if (const auto* d = std::get_if<DenseLayer>(&*it)) return d->out();
  return 0;
}

MlpActivations Mlp::forward(const Matrix& x, Mode mode, Rng* rng) const {
  if (static_cast<std::size_t>(x.rows()) != input_size())
    throw ShapeError("MLP input layer expects " + std::to_string(input_size()) +
                     " features, got " + std::to_string(x.rows()));
  MlpActivations acts;
  acts.outputs.reserve(layers_.size() + 1);
  acts.masks.resize(layers_.size());
  acts.outputs.push_back(x);
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Matrix& in = acts.outputs.back();
    if (const auto* d = std::get_if<DenseLayer>(&layers_[i])) {
      acts.outputs.push_back(d->forward(in));
    } else {
      const auto& drop = std::get<DropoutLayer>(layers_[i]);
      if (mode == Mode::training && drop.rate() > 0.0) {
        if (!rng) throw ConfigError("training-mode dropout needs a random generator");
        acts.masks[i] = drop.sample_mask(in.rows(), in.cols(), *rng);
        acts.outputs.push_back(in.cwiseProduct(acts.masks[i]));
      } else {
        acts.outputs.push_back(in);
      }
    }
  }
  return acts;
}

Matrix Mlp::predict(const Matrix& x) const { return forward(x, Mode::inference).outputs.back(); }

double Mlp::loss(const MlpActivations& acts, const Matrix& target, Loss loss, double scale) const {
  const Matrix& p = acts.outputs.back();
  if (p.rows() != target.rows() || p.cols() != target.cols())
    throw ShapeError("target shape does not match network output");
  constexpr double tiny = 1e-300;
  double total = 0.0;
  for (Eigen::Index j = 0; j < p.cols(); ++j) {
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
      const double t = target(i, j);
      const double q = p(i, j);
      if (loss == Loss::categorical_cross_entropy) {
        if (t != 0.0) total -= t * std::log(std::max(q, tiny));
      } else {
        if (t != 0.0) total -= t * std::log(std::max(q, tiny));
        if (t != 1.0) total -= (1.0 - t) * std::log(std::max(1.0 - q, tiny));
      }
    }
  }
  return scale * total / static_cast<double>(p.cols());
}

Matrix Mlp::backward(const MlpActivations& acts, const Matrix& target, Loss loss, double scale) {
  const Matrix& p = acts.outputs.back();
  if (p.rows() != target.rows() || p.cols() != target.cols())
    throw ShapeError("target shape does not match network output");
  const double k = scale / static_cast<double>(p.cols());
  auto* last = std::get_if<DenseLayer>(&layers_.back());
  const bool fused =
      last && ((last->activation == Activation::softmax && loss == Loss::categorical_cross_entropy) ||
               (last->activation == Activation::sigmoid && loss == Loss::binary_cross_entropy));
  if (fused) {
    Matrix d_pre;
    if (last->activation == Activation::softmax) {
      // d/dz of -sum t log softmax(z) = p * sum(t) - t
      d_pre = p * target.colwise().sum().asDiagonal();
      d_pre -= target;
    } else {
      d_pre = p - target;
    }
    d_pre *= k;
    const std::size_t li = layers_.size() - 1;
    Matrix d = last->backward_pre(acts.outputs[li], d_pre);
    for (std::size_t i = li; i-- > 0;) {
      if (auto* dl = std::get_if<DenseLayer>(&layers_[i])) {
        d = dl->backward(acts.outputs[i], acts.outputs[i + 1], d);
      } else if (acts.masks[i].size() > 0) {
        d = d.cwiseProduct(acts.masks[i]);
      }
    }
    return d;
  }
  constexpr double tiny = 1e-300;
  Matrix d_out(p.rows(), p.cols());
  for (Eigen::Index j = 0; j < p.cols(); ++j) {
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
      const double t = target(i, j);
      const double q = p(i, j);
      double g = -t / std::max(q, tiny);
      if (loss == Loss::binary_cross_entropy) g += (1.0 - t) / std::max(1.0 - q, tiny);
      d_out(i, j) = k * g;
    }
  }
  return backward_from_output(acts, d_out);
}

Matrix Mlp::backward_from_output(const MlpActivations& acts, const Matrix& d_out) {
  Matrix d = d_out;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    if (auto* dl = std::get_if<DenseLayer>(&layers_[i])) {
      d = dl->backward(acts.outputs[i], acts.outputs[i + 1], d);
    } else if (acts.masks[i].size() > 0) {
      d = d.cwiseProduct(acts.masks[i]);
    }
  }
  return d;
}

ParamList Mlp::params(const std::string& prefix) {
  ParamList out;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (auto* d = std::get_if<DenseLayer>(&layers_[i])) {
      auto p = d->params(prefix + "." + std::to_string(i));
      out.insert(out.end(), p.begin(), p.end());
    }
  }
  return out;
}

nlohmann::json Mlp::spec() const {
  auto arr = nlohmann::json::array();
  for (const auto& l : layers_) {
    if (const auto* d = std::get_if<DenseLayer>(&l)) {
      arr.push_back({{"type", "dense"},
                     {"in", d->in()},
                     {"out", d->out()},
                     {"activation", to_string(d->activation)}});
    } else {
      arr.push_back({{"type", "dropout"}, {"rate", std::get<DropoutLayer>(l).rate()}});
    }
  }
  return arr;
}

Mlp Mlp::from_spec(const nlohmann::json& spec) {
  std::vector<Layer> layers;
  try {
    for (const auto& l : spec) {
      const auto type = l.at("type").get<std::string>();
      if (type == "dense") {
        layers.emplace_back(DenseLayer(l.at("in").get<std::size_t>(), l.at("out").get<std::size_t>(),
                                       parse_activation(l.at("activation").get<std::string>())));
      } else if (type == "dropout") {
        layers.emplace_back(DropoutLayer(l.at("rate").get<double>()));
      } else {
        throw FormatError("unknown layer type '" + type + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad layer spec: ") + e.what());
  }
  return Mlp(std::move(layers));
}

// ----------------------------------------------------------------- lstm ----

LstmLayer::LstmLayer(std::size_t input_size, std::size_t hidden_size) {
  if (input_size == 0 || hidden_size == 0) throw ConfigError("LSTM sizes must be positive");
  const auto d = static_cast<Eigen::Index>(input_size);
  const auto h = static_cast<Eigen::Index>(hidden_size);
  input_weights = Matrix::Zero(4 * h, d);
  recurrent_weights = Matrix::Zero(4 * h, h);
  bias = Vector::Zero(4 * h);
  d_input_weights = Matrix::Zero(4 * h, d);
  d_recurrent_weights = Matrix::Zero(4 * h, h);
  d_bias = Vector::Zero(4 * h);
}

void LstmLayer::init(Rng& rng) {
  const auto h = recurrent_weights.cols();
  const auto d = input_weights.cols();
  for (Eigen::Index g = 0; g < 4; ++g) {
    input_weights.middleRows(g * h, h) =
        glorot(h, d, static_cast<double>(d), static_cast<double>(h), rng);
    recurrent_weights.middleRows(g * h, h) =
        glorot(h, h, static_cast<double>(h), static_cast<double>(h), rng);
  }
  bias.setZero();
  bias.segment(h, h).setOnes();
}

LstmTrace LstmLayer::forward(const Eigen::Ref<const Matrix>& sequence,
                             std::size_t effective_length) const {
  if (effective_length == 0) throw ShapeError("LSTM forward: effective length is zero");
  if (sequence.rows() != input_weights.cols())
    throw ShapeError("LSTM expects " + std::to_string(input_weights.cols()) +
                     "-dimensional inputs, got " + std::to_string(sequence.rows()));
  if (static_cast<Eigen::Index>(effective_length) > sequence.cols())
    throw ShapeError("LSTM forward: effective length exceeds sequence length");
  const auto L = static_cast<Eigen::Index>(effective_length);
  const auto H = recurrent_weights.cols();
  LstmTrace tr;
  tr.inputs = sequence.leftCols(L);
  tr.gates.resize(4 * H, L);
  tr.cells = Matrix::Zero(H, L + 1);
  tr.hidden = Matrix::Zero(H, L + 1);
  Matrix pre = input_weights * tr.inputs;
  pre.colwise() += bias;
  Vector a(4 * H);
  for (Eigen::Index t = 0; t < L; ++t) {
    a.noalias() = pre.col(t) + recurrent_weights * tr.hidden.col(t);
    auto gates = tr.gates.col(t);
    for (Eigen::Index k = 0; k < 3 * H; ++k) gates(k) = sigmoid(a(k));
    gates.segment(3 * H, H) = a.segment(3 * H, H).array().tanh().matrix();
    tr.cells.col(t + 1) = gates.segment(H, H).cwiseProduct(tr.cells.col(t)) +
                          gates.segment(0, H).cwiseProduct(gates.segment(3 * H, H));
    tr.hidden.col(t + 1) =
        gates.segment(2 * H, H).cwiseProduct(tr.cells.col(t + 1).array().tanh().matrix());
  }
  return tr;
}

std::optional<Matrix> LstmLayer::backward(const LstmTrace& tr, const Eigen::Ref<const Vector>& d_final,
                                          bool want_input_grad) {
  const auto L = static_cast<Eigen::Index>(tr.length());
  const auto H = recurrent_weights.cols();
  if (d_final.size() != H) throw ShapeError("LSTM backward: gradient size mismatch");
  std::optional<Matrix> d_inputs;
  if (want_input_grad) d_inputs = Matrix::Zero(input_weights.cols(), L);
  Vector dh = d_final;
  Vector dc = Vector::Zero(H);
  Vector da(4 * H);
  for (Eigen::Index t = L - 1; t >= 0; --t) {
    const auto g = tr.gates.col(t);
    const auto i_g = g.segment(0, H).array();
    const auto f_g = g.segment(H, H).array();
    const auto o_g = g.segment(2 * H, H).array();
    const auto c_g = g.segment(3 * H, H).array();
    const Eigen::ArrayXd tc = tr.cells.col(t + 1).array().tanh();
    const Eigen::ArrayXd dha = dh.array();
    Eigen::ArrayXd dca = dc.array() + dha * o_g * (1.0 - tc.square());
    da.segment(0, H) = (dca * c_g * i_g * (1.0 - i_g)).matrix();
    da.segment(H, H) = (dca * tr.cells.col(t).array() * f_g * (1.0 - f_g)).matrix();
    da.segment(2 * H, H) = (dha * tc * o_g * (1.0 - o_g)).matrix();
    da.segment(3 * H, H) = (dca * i_g * (1.0 - c_g.square())).matrix();
    d_input_weights.noalias() += da * tr.inputs.col(t).transpose();
    d_recurrent_weights.noalias() += da * tr.hidden.col(t).transpose();
    d_bias += da;
    if (d_inputs) d_inputs->col(t).noalias() = input_weights.transpose() * da;
    dh.noalias() = recurrent_weights.transpose() * da;
    dc = (dca * f_g).matrix();
  }
  return d_inputs;
}

ParamList LstmLayer::params(const std::string& prefix) {
  return {{prefix + ".input_weights", span_of(input_weights), span_of(d_input_weights)},
          {prefix + ".recurrent_weights", span_of(recurrent_weights), span_of(d_recurrent_weights)},
          {prefix + ".bias", span_of(bias), span_of(d_bias)}};
}

// ------------------------------------------------------------ optimizer ----

std::string to_string(OptimizerKind k) { return k == OptimizerKind::sgd ? "sgd" : "adam"; }

OptimizerKind parse_optimizer(const std::string& s) {
  if (s == "sgd") return OptimizerKind::sgd;
  if (s == "adam") return OptimizerKind::adam;
  throw ConfigError("unknown optimizer '" + s + "'");
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
}

Optimizer::Optimizer(OptimizerKind kind, double learning_rate)
    : kind_(kind), learning_rate_(learning_rate) {
  if (!(learning_rate >= 0.0)) throw ConfigError("learning rate must be >= 0");
}

void Optimizer::step(const ParamList& params) {
  for (const auto& p : params) {
    for (double g : p.grad)
      if (!std::isfinite(g)) throw TrainingError("non-finite gradient in " + p.name);
  }
  if (kind_ == OptimizerKind::sgd) {
    for (const auto& p : params)
      for (std::size_t i = 0; i < p.value.size(); ++i) p.value[i] -= learning_rate_ * p.grad[i];
    ++t_;
    return;
  }
  if (m_.empty()) {
    for (const auto& p : params) {
      m_.emplace_back(p.value.size(), 0.0);
      v_.emplace_back(p.value.size(), 0.0);
    }
  }
  if (m_.size() != params.size()) throw ShapeError("optimizer state does not match parameters");
  ++t_;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    const auto& p = params[k];
    auto& m = m_[k];
    auto& v = v_[k];
    if (m.size() != p.value.size()) throw ShapeError("optimizer state does not match " + p.name);
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i];
      m[i] = beta1 * m[i] + (1.0 - beta1) * g;
      v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
      p.value[i] -= learning_rate_ * (m[i] / c1) / (std::sqrt(v[i] / c2) + epsilon);
    }
  }
}

// ------------------------------------------------------- gradient check ----

double gradient_check(const ParamList& params, const std::function<double()>& loss,
                      const std::function<void()>& analytic, double epsilon) {
  zero_grad(params);
  analytic();
  double worst = 0.0;
  for (const auto& p : params) {
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double saved = p.value[i];
      p.value[i] = saved + epsilon;
      const double up = loss();
      p.value[i] = saved - epsilon;
      const double down = loss();
      p.value[i] = saved;
      const double numeric = (up - down) / (2.0 * epsilon);
      const double a = p.grad[i];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
      worst = std::max(worst, std::abs(a - numeric) / denom);
    }
  }
  return worst;
}

double gradient_check(Mlp& model, const Matrix& input, const Matrix& target, Loss loss,
                      double epsilon) {
  auto params = model.params();
  return gradient_check(
      params,
      [&] { return model.loss(model.forward(input, Mode::inference), target, loss); },
      [&] {
        auto acts = model.forward(input, Mode::inference);
        model.backward(acts, target, loss);
      },
      epsilon);
}

// ----------------------------------------------------------- checkpoint ----

namespace {

constexpr char kMagic[8] = {'S', 'R', 'L', 'C', 'K', 'P', 'T', '\0'};

void put_u32(std::string& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
void put_u64(std::string& buf, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
std::uint64_t get_le(const std::string& buf, std::size_t pos, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
  return v;
}

}  // namespace

void write_checkpoint(const std::filesystem::path& path, const nlohmann::json& header,
                      const ParamList& params) {
  std::string buf(kMagic, sizeof kMagic);
  const std::string h = header.dump();
  put_u32(buf, static_cast<std::uint32_t>(h.size()));
  buf += h;
  put_u64(buf, parameter_count(params));
  for (const auto& p : params)
    for (double x : p.value) put_u64(buf, std::bit_cast<std::uint64_t>(x));
  const auto crc = crc32(crc32(0L, Z_NULL, 0), reinterpret_cast<const Bytef*>(buf.data()),
                         static_cast<uInt>(buf.size()));
  put_u32(buf, static_cast<std::uint32_t>(crc));
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw DataError("write failed: " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string name = path.string();
  if (buf.size() < sizeof kMagic + 4 + 8 + 4 || std::memcmp(buf.data(), kMagic, sizeof kMagic) != 0)
    throw FormatError(name + ": not a model checkpoint");
  const std::size_t body = buf.size() - 4;
  const auto stored = static_cast<std::uint32_t>(get_le(buf, body, 4));
  const auto actual = static_cast<std::uint32_t>(
      crc32(crc32(0L, Z_NULL, 0), reinterpret_cast<const Bytef*>(buf.data()), static_cast<uInt>(body)));
  if (stored != actual) throw FormatError(name + ": checksum mismatch (truncated or corrupt)");
  std::size_t pos = sizeof kMagic;
  const auto hlen = get_le(buf, pos, 4);
  pos += 4;
  if (pos + hlen + 8 > body) throw FormatError(name + ": header overruns file");
  Checkpoint ck;
  try {
    ck.header = nlohmann::json::parse(buf.substr(pos, hlen));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(name + ": bad header: " + e.what());
  }
  pos += hlen;
  const auto version = ck.header.value("format_version", -1);
  if (version != kCheckpointVersion)
    throw UnsupportedVersionError(name + ": unsupported format_version " + std::to_string(version) +
                                  " (expected " + std::to_string(kCheckpointVersion) + ")");
  const auto count = get_le(buf, pos, 8);
  pos += 8;
  if (pos + count * 8 != body) throw FormatError(name + ": parameter block size mismatch");
  ck.values.resize(count);
  for (std::size_t i = 0; i < count; ++i, pos += 8)
    ck.values[i] = std::bit_cast<double>(get_le(buf, pos, 8));
  return ck;
}

void assign_parameters(const ParamList& params, const std::vector<double>& values) {
  if (parameter_count(params) != values.size())
    throw FormatError("checkpoint holds " + std::to_string(values.size()) +
                      " parameters, model expects " + std::to_string(parameter_count(params)));
  std::size_t k = 0;
  for (const auto& p : params)
    for (auto& x : p.value) x = values[k++];
  for (const auto& p : params)
    for (double x : p.value)
      if (!std::isfinite(x)) throw FormatError("checkpoint contains non-finite parameter in " + p.name);
}

}  // namespace srl::nn
