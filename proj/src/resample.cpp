#include "srl/resample.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "srl/error.hpp"

namespace srl {

std::string to_string(SmoteVariant v) { return v == SmoteVariant::mean_offset ? "mean_offset" : "classic"; }

SmoteVariant parse_smote_variant(const std::string& s) {
  if (s == "mean_offset") return SmoteVariant::mean_offset;
  if (s == "classic") return SmoteVariant::classic;
  throw ConfigError("unknown SMOTE variant '" + s + "' (expected mean_offset|classic)");
}

SmotePlan plan_smote(const std::vector<int>& labels, const ResampleConfig& config,
                     const std::function<double(std::size_t, std::size_t)>& distance) {
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw DataError("SMOTE expects labels 0 and 1");
    by_class[labels[i]].push_back(i);
  }
  if (by_class[0].empty() || by_class[1].empty()) throw DataError("SMOTE needs both classes present");
  if (config.k == 0) throw ConfigError("SMOTE k must be >= 1");

  SmotePlan plan;
  plan.minority_label = by_class[1].size() < by_class[0].size() ? 1 : 0;
  const auto& minority = by_class[plan.minority_label];
  const auto majority_count = by_class[1 - plan.minority_label].size();
  const double current = static_cast<double>(minority.size()) / static_cast<double>(majority_count);
  if (config.target_ratio + 1e-12 < current)
    throw ConfigError("SMOTE target ratio " + std::to_string(config.target_ratio) +
                      " is below the current minority/majority ratio " + std::to_string(current));
  const auto desired = static_cast<std::size_t>(
      std::llround(config.target_ratio * static_cast<double>(majority_count)));
  if (desired <= minority.size()) return plan;
  if (config.k >= minority.size())
    throw ConfigError("SMOTE k = " + std::to_string(config.k) + " must be below the minority count " +
                      std::to_string(minority.size()));

  std::vector<std::vector<std::size_t>> neighbors(minority.size());
  auto nearest = [&](std::size_t m) -> const std::vector<std::size_t>& {
    auto& nb = neighbors[m];
    if (!nb.empty()) return nb;
    std::vector<std::pair<double, std::size_t>> d;
    d.reserve(minority.size() - 1);
    for (std::size_t o = 0; o < minority.size(); ++o)
      if (o != m) d.emplace_back(distance(minority[m], minority[o]), minority[o]);
    std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(config.k), d.end());
    for (std::size_t i = 0; i < config.k; ++i) nb.push_back(d[i].second);
    return nb;
  };

  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t need = desired - minority.size();
  plan.samples.reserve(need);
  for (std::size_t s = 0; s < need; ++s) {
    const std::size_t m = s % minority.size();
    SyntheticSample syn;
    syn.origin = minority[m];
    const auto& nb = nearest(m);
    if (config.variant == SmoteVariant::mean_offset) {
      syn.neighbors = nb;
    } else {
      std::uniform_int_distribution<std::size_t> pick(0, nb.size() - 1);
      syn.neighbors = {nb[pick(rng)]};
    }
    syn.sigma = unit(rng);
    plan.samples.push_back(std::move(syn));
  }
  return plan;
}

Eigen::VectorXd synthesize(const SyntheticSample& s, const std::vector<Eigen::VectorXd>& samples) {
  const auto& x_old = samples[s.origin];
  Eigen::VectorXd diff = Eigen::VectorXd::Zero(x_old.size());
  for (auto n : s.neighbors) diff += samples[n] - x_old;
  diff /= static_cast<double>(s.neighbors.size());
  return x_old + s.sigma * diff;
}

DocMatrix synthesize(const SyntheticSample& s, const std::vector<DocMatrix>& matrices, std::string id) {
  const auto& x_old = matrices[s.origin];
  auto len = x_old.columns.cols();
  for (auto n : s.neighbors) len = std::max(len, matrices[n].columns.cols());
  auto padded = [len](const DocMatrix& m) {
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(m.columns.rows(), len);
    p.leftCols(m.columns.cols()) = m.columns;
    return p;
  };
  const Eigen::MatrixXd old = padded(x_old);
  Eigen::MatrixXd diff = Eigen::MatrixXd::Zero(old.rows(), len);
  for (auto n : s.neighbors) diff += padded(matrices[n]) - old;
  diff /= static_cast<double>(s.neighbors.size());
  DocMatrix out;
  out.id = std::move(id);
  out.width = x_old.width;
  out.columns = old + s.sigma * diff;
  return out;
}

Resampled<Eigen::VectorXd> smote(const std::vector<Eigen::VectorXd>& samples, const std::vector<int>& labels,
                                 const ResampleConfig& config) {
  if (samples.size() != labels.size()) throw ShapeError("SMOTE: sample and label counts differ");
  for (const auto& s : samples)
    if (s.size() != samples.front().size()) throw ShapeError("SMOTE: vectors differ in length");
  Resampled<Eigen::VectorXd> out;
  out.plan = plan_smote(labels, config, [&](std::size_t i, std::size_t j) {
    return (samples[i] - samples[j]).norm();
  });
  out.samples = samples;
  out.labels = labels;
  out.original_count = samples.size();
  for (const auto& s : out.plan.samples) {
    out.samples.push_back(synthesize(s, samples));
    out.labels.push_back(out.plan.minority_label);
  }
  return out;
}

double squared_distance(const DocMatrix& a, const DocMatrix& b) {
  const auto common = std::min(a.columns.cols(), b.columns.cols());
  double d = (a.columns.leftCols(common) - b.columns.leftCols(common)).squaredNorm();
  d += a.columns.rightCols(a.columns.cols() - common).squaredNorm();
  d += b.columns.rightCols(b.columns.cols() - common).squaredNorm();
  return d;
}

Resampled<DocMatrix> smote_matrices(const std::vector<DocMatrix>& matrices, const std::vector<int>& labels,
                                    const ResampleConfig& config) {
  if (matrices.size() != labels.size()) throw ShapeError("SMOTE: sample and label counts differ");
  for (const auto& m : matrices)
    if (m.rows() != matrices.front().rows() || m.width != matrices.front().width)
      throw ShapeError("SMOTE: document matrices differ in shape (" + m.id + ")");
  Resampled<DocMatrix> out;
  out.plan = plan_smote(labels, config, [&](std::size_t i, std::size_t j) {
    return std::sqrt(squared_distance(matrices[i], matrices[j]));
  });
  out.samples = matrices;
  out.labels = labels;
  out.original_count = matrices.size();
  for (std::size_t s = 0; s < out.plan.samples.size(); ++s) {
    out.samples.push_back(synthesize(out.plan.samples[s], matrices, "synthetic-" + std::to_string(s)));
    out.labels.push_back(out.plan.minority_label);
  }
  return out;
}

}  // namespace srl
