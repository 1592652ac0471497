#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "srl/embed.hpp"

namespace srl {

// mean_offset: x_new = x_old + σ · (1/k) Σ_i (x_i − x_old) over the k nearest minority neighbours
// classic:     x_new = x_old + σ · (x_nn − x_old) for one neighbour drawn from the k nearest
enum class SmoteVariant { mean_offset, classic };
std::string to_string(SmoteVariant v);
SmoteVariant parse_smote_variant(const std::string& s);

struct ResampleConfig {
  std::size_t k = 5;
  double target_ratio = 1.0;  // minority / majority after resampling
  std::uint64_t seed = 1;
  SmoteVariant variant = SmoteVariant::mean_offset;
};

struct SyntheticSample {
  std::size_t origin = 0;               // index of x_old in the input
  std::vector<std::size_t> neighbors;   // indices of the averaged neighbours
  double sigma = 0.0;
};

struct SmotePlan {
  int minority_label = 1;
  std::vector<SyntheticSample> samples;
};

// Decides which synthetic samples to create. `distance(i, j)` must return the
// Euclidean distance between inputs i and j. Origins cycle through the
// minority class in index order; neighbour ties go to the lowest index.
SmotePlan plan_smote(const std::vector<int>& labels, const ResampleConfig& config,
                     const std::function<double(std::size_t, std::size_t)>& distance);

Eigen::VectorXd synthesize(const SyntheticSample& s, const std::vector<Eigen::VectorXd>& samples);
DocMatrix synthesize(const SyntheticSample& s, const std::vector<DocMatrix>& matrices, std::string id);

template <typename T>
struct Resampled {
  std::vector<T> samples;  // originals first, unchanged, then synthetic
  std::vector<int> labels;
  std::size_t original_count = 0;
  SmotePlan plan;
};

Resampled<Eigen::VectorXd> smote(const std::vector<Eigen::VectorXd>& samples, const std::vector<int>& labels,
                                 const ResampleConfig& config);

// Euclidean geometry of the flattened d·r matrices. A synthetic matrix keeps
// columns up to the longest effective length among its origin and neighbours.
Resampled<DocMatrix> smote_matrices(const std::vector<DocMatrix>& matrices, const std::vector<int>& labels,
                                    const ResampleConfig& config);

// Squared distance between the zero-padded forms of two matrices.
double squared_distance(const DocMatrix& a, const DocMatrix& b);

}  // namespace srl
