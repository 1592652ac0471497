#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <json.hpp>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace srl::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Rng = std::mt19937_64;

enum class Activation { sigmoid, tanh, relu, softmax, identity };
enum class Loss { binary_cross_entropy, categorical_cross_entropy };
enum class Mode { training, inference };

std::string to_string(Activation a);
Activation parse_activation(const std::string& s);

// View of one parameter tensor and its gradient buffer.
struct Param {
  std::string name;
  std::span<double> value;
  std::span<double> grad;
};
using ParamList = std::vector<Param>;

void zero_grad(const ParamList& params);
std::size_t parameter_count(const ParamList& params);
// crc32 over the raw parameter bytes; used to detect mutation.
std::uint32_t parameter_checksum(const ParamList& params);

class DenseLayer {
 public:
  DenseLayer() = default;
  DenseLayer(std::size_t in, std::size_t out, Activation activation);

  void init(Rng& rng);
  std::size_t in() const { return static_cast<std::size_t>(weights.cols()); }
  std::size_t out() const { return static_cast<std::size_t>(weights.rows()); }

  // Column-per-sample batch.
  Matrix pre_activation(const Matrix& x) const;
  Matrix forward(const Matrix& x) const;
  // Accumulates parameter gradients from the gradient w.r.t. the
  // pre-activation and returns the gradient w.r.t. the input.
  Matrix backward_pre(const Matrix& x, const Matrix& d_pre);
  // Same, starting from the gradient w.r.t. the activated output.
  Matrix backward(const Matrix& x, const Matrix& y, const Matrix& d_out);

  ParamList params(const std::string& prefix);

  Matrix weights;  // out × in
  Vector bias;
  Activation activation = Activation::identity;
  Matrix d_weights;
  Vector d_bias;
};

// Inverted dropout: survivors are scaled by 1/(1-rate) at training time, the
// layer is the identity at inference.
class DropoutLayer {
 public:
  explicit DropoutLayer(double rate = 0.0);
  double rate() const { return rate_; }
  // Returns the scaled keep-mask (entries 0 or 1/(1-rate)).
  Matrix sample_mask(Eigen::Index rows, Eigen::Index cols, Rng& rng) const;

 private:
  double rate_;
};

using Layer = std::variant<DenseLayer, DropoutLayer>;

struct MlpActivations {
  // outputs[0] is the input, outputs[i+1] the output of layer i.
  std::vector<Matrix> outputs;
  std::vector<Matrix> masks;  // per layer; empty unless dropout in training
};

// Feed-forward stack of dense and dropout layers.
class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(std::vector<Layer> layers);

  void init(Rng& rng);
  std::size_t input_size() const;
  std::size_t output_size() const;

  // `rng` is required in training mode when the stack contains dropout.
  MlpActivations forward(const Matrix& x, Mode mode, Rng* rng = nullptr) const;
  Matrix predict(const Matrix& x) const;

  // Loss averaged over the batch columns, multiplied by `scale`.
  double loss(const MlpActivations& acts, const Matrix& target, Loss loss, double scale = 1.0) const;
  // Accumulates parameter gradients for the loss above; returns d(loss)/d(input).
  Matrix backward(const MlpActivations& acts, const Matrix& target, Loss loss, double scale = 1.0);
  // Backward from an explicit gradient w.r.t. the network output.
  Matrix backward_from_output(const MlpActivations& acts, const Matrix& d_out);

  ParamList params(const std::string& prefix = "mlp");
  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<Layer>& layers() { return layers_; }

  nlohmann::json spec() const;
  static Mlp from_spec(const nlohmann::json& spec);

 private:
  std::vector<Layer> layers_;
};

struct LstmTrace {
  Matrix inputs;  // d × L, the unpadded steps
  Matrix gates;   // 4H × L, activated gates in order [input, forget, output, candidate]
  Matrix cells;   // H × (L+1), column 0 is c_0 = 0
  Matrix hidden;  // H × (L+1), column 0 is h_0 = 0
  std::size_t length() const { return static_cast<std::size_t>(inputs.cols()); }
  auto final_hidden() const { return hidden.col(hidden.cols() - 1); }
};

class LstmLayer {
 public:
  LstmLayer() = default;
  LstmLayer(std::size_t input_size, std::size_t hidden_size);

  // Glorot-uniform gate matrices, forget-gate bias 1, other biases 0.
  void init(Rng& rng);
  std::size_t input_size() const { return static_cast<std::size_t>(input_weights.cols()); }
  std::size_t hidden_size() const { return static_cast<std::size_t>(recurrent_weights.cols()); }

  // Runs the recurrence over the first `effective_length` columns of
  // `sequence`; later columns are treated as padding and never read.
  LstmTrace forward(const Eigen::Ref<const Matrix>& sequence, std::size_t effective_length) const;
  // BPTT from a gradient on the final hidden state. Accumulates parameter
  // gradients; returns d/d(inputs) when `want_input_grad` is set.
  std::optional<Matrix> backward(const LstmTrace& trace, const Eigen::Ref<const Vector>& d_final,
                                 bool want_input_grad = false);

  ParamList params(const std::string& prefix = "lstm");

  Matrix input_weights;      // 4H × d
  Matrix recurrent_weights;  // 4H × H
  Vector bias;               // 4H
  Matrix d_input_weights;
  Matrix d_recurrent_weights;
  Vector d_bias;
};

enum class OptimizerKind { sgd, adam };
std::string to_string(OptimizerKind k);
OptimizerKind parse_optimizer(const std::string& s);

struct TrainConfig {
  std::size_t epochs = 100;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  OptimizerKind optimizer = OptimizerKind::adam;
  std::uint64_t seed = 1;
  std::optional<std::size_t> patience;

  void validate() const;  // throws ConfigError
};

class Optimizer {
 public:
  Optimizer(OptimizerKind kind, double learning_rate);

  // Applies one update. Throws TrainingError if any gradient is NaN/Inf.
  void step(const ParamList& params);
  double learning_rate() const { return learning_rate_; }
  std::size_t steps() const { return t_; }

  static constexpr double beta1 = 0.9;
  static constexpr double beta2 = 0.999;
  static constexpr double epsilon = 1e-8;

 private:
  OptimizerKind kind_;
  double learning_rate_;
  std::size_t t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

// Central finite differences against the analytic gradient. `loss` evaluates
// the objective at the current parameter values; `analytic` fills the grad
// buffers. Returns max |a-n| / max(|a|, |n|, 1e-8) over all parameters.
double gradient_check(const ParamList& params, const std::function<double()>& loss,
                      const std::function<void()>& analytic, double epsilon = 1e-5);

// Inference-mode gradient check of an MLP on a batch.
double gradient_check(Mlp& model, const Matrix& input, const Matrix& target, Loss loss,
                      double epsilon = 1e-5);

// Binary container: magic, u32 header length, JSON header, u64 value count,
// little-endian float64 parameters, trailing crc32 of all preceding bytes.
inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  nlohmann::json header;
  std::vector<double> values;
};

void write_checkpoint(const std::filesystem::path& path, const nlohmann::json& header,
                      const ParamList& params);
Checkpoint read_checkpoint(const std::filesystem::path& path);
// Copies checkpoint values into `params` in declaration order.
void assign_parameters(const ParamList& params, const std::vector<double>& values);

}  // namespace srl::nn
