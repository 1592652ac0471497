#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "srl/error.hpp"
#include "srl/resample.hpp"

namespace srl {
namespace {

Eigen::VectorXd vec(double a, double b) {
  Eigen::VectorXd v(2);
  v << a, b;
  return v;
}

struct Dataset {
  std::vector<Eigen::VectorXd> x;
  std::vector<int> y;
};

Dataset random_set(std::mt19937_64& rng, std::size_t majority, std::size_t minority, int dim = 3) {
  std::normal_distribution<double> n(0, 1);
  Dataset d;
  for (std::size_t i = 0; i < majority + minority; ++i) {
    Eigen::VectorXd v(dim);
    for (auto& e : v) e = n(rng);
    d.x.push_back(v);
    d.y.push_back(i < majority ? 0 : 1);
  }
  std::vector<std::size_t> order(d.x.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  Dataset s;
  for (auto i : order) {
    s.x.push_back(d.x[i]);
    s.y.push_back(d.y[i]);
  }
  return s;
}

TEST(Synthesize, SigmaZeroIsOrigin) {
  const std::vector<Eigen::VectorXd> xs{vec(0, 0), vec(1, 0), vec(0, 1)};
  SyntheticSample s{0, {1, 2}, 0.0};
  EXPECT_EQ(synthesize(s, xs), xs[0]);
}

TEST(Synthesize, MeanOffsetExample) {
  const std::vector<Eigen::VectorXd> xs{vec(0, 0), vec(1, 0), vec(0, 1)};
  SyntheticSample s{0, {1, 2}, 1.0};
  EXPECT_TRUE(synthesize(s, xs).isApprox(vec(0.5, 0.5)));
  s.sigma = 0.5;
  EXPECT_TRUE(synthesize(s, xs).isApprox(vec(0.25, 0.25)));
}

TEST(Smote, AlreadyBalancedIsNoop) {
  std::mt19937_64 rng(1);
  const auto d = random_set(rng, 6, 6);
  const auto r = smote(d.x, d.y, ResampleConfig{});
  EXPECT_EQ(r.samples.size(), 12u);
  EXPECT_TRUE(r.plan.samples.empty());
}

TEST(Smote, Errors) {
  std::mt19937_64 rng(2);
  const auto d = random_set(rng, 10, 5);
  ResampleConfig c;
  c.k = 5;
  EXPECT_THROW(smote(d.x, d.y, c), ConfigError);
  c.k = 0;
  EXPECT_THROW(smote(d.x, d.y, c), ConfigError);
  c.k = 2;
  c.target_ratio = 0.3;
  EXPECT_THROW(smote(d.x, d.y, c), ConfigError);
  std::vector<int> one_class(d.y.size(), 0);
  EXPECT_THROW(smote(d.x, one_class, ResampleConfig{}), DataError);
  auto bad = d.y;
  bad[0] = 2;
  EXPECT_THROW(smote(d.x, bad, ResampleConfig{}), DataError);
  auto short_y = d.y;
  short_y.pop_back();
  EXPECT_THROW(smote(d.x, short_y, ResampleConfig{}), ShapeError);
}

TEST(Smote, BalancesAndPreservesOriginals) {
  std::mt19937_64 rng(3);
  const auto d = random_set(rng, 40, 13);
  ResampleConfig c;
  c.k = 4;
  const auto r = smote(d.x, d.y, c);
  ASSERT_EQ(r.original_count, d.x.size());
  EXPECT_EQ(r.samples.size(), 80u);
  EXPECT_EQ(std::count(r.labels.begin(), r.labels.end(), 1), 40);
  for (std::size_t i = 0; i < d.x.size(); ++i) {
    EXPECT_EQ(r.samples[i], d.x[i]);
    EXPECT_EQ(r.labels[i], d.y[i]);
  }
  c.target_ratio = 0.5;
  const auto half = smote(d.x, d.y, c);
  EXPECT_EQ(std::count(half.labels.begin(), half.labels.end(), 1), 20);
}

TEST(Smote, MinorityLabelZero) {
  std::mt19937_64 rng(4);
  auto d = random_set(rng, 20, 8);
  for (auto& y : d.y) y = 1 - y;
  ResampleConfig c;
  c.k = 3;
  const auto r = smote(d.x, d.y, c);
  EXPECT_EQ(r.plan.minority_label, 0);
  EXPECT_EQ(std::count(r.labels.begin(), r.labels.end(), 0), 20);
}

TEST(Smote, Deterministic) {
  std::mt19937_64 rng(5);
  const auto d = random_set(rng, 30, 9);
  ResampleConfig c;
  c.k = 3;
  c.seed = 77;
  const auto a = smote(d.x, d.y, c);
  const auto b = smote(d.x, d.y, c);
  ASSERT_EQ(a.samples.size(), b.samples.size());
  for (std::size_t i = 0; i < a.samples.size(); ++i) EXPECT_EQ(a.samples[i], b.samples[i]);
  c.seed = 78;
  EXPECT_NE(smote(d.x, d.y, c).samples.back(), a.samples.back());
}

// Independent brute-force neighbour search; ties go to the lower index.
std::vector<std::size_t> brute_neighbors(const Dataset& d, std::size_t origin, std::size_t k) {
  std::vector<std::size_t> cand;
  for (std::size_t i = 0; i < d.x.size(); ++i)
    if (i != origin && d.y[i] == d.y[origin]) cand.push_back(i);
  std::stable_sort(cand.begin(), cand.end(), [&](auto a, auto b) {
    return (d.x[a] - d.x[origin]).norm() < (d.x[b] - d.x[origin]).norm();
  });
  cand.resize(k);
  return cand;
}

TEST(Smote, SyntheticPointsLieInNeighbourHull) {
  std::mt19937_64 rng(6);
  const auto d = random_set(rng, 50, 12);
  ResampleConfig c;
  c.k = 4;
  const auto r = smote(d.x, d.y, c);
  for (std::size_t s = 0; s < r.plan.samples.size(); ++s) {
    const auto& p = r.plan.samples[s];
    EXPECT_EQ(d.y[p.origin], 1);
    auto nb = p.neighbors;
    auto ref = brute_neighbors(d, p.origin, 4);
    std::sort(nb.begin(), nb.end());
    std::sort(ref.begin(), ref.end());
    EXPECT_EQ(nb, ref);
    EXPECT_GE(p.sigma, 0.0);
    EXPECT_LT(p.sigma, 1.0);
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(3);
    for (auto n : p.neighbors) mean += d.x[n];
    mean /= 4.0;
    const Eigen::VectorXd expect = d.x[p.origin] + p.sigma * (mean - d.x[p.origin]);
    EXPECT_TRUE(r.samples[d.x.size() + s].isApprox(expect, 1e-12));
  }
}

TEST(Smote, NeighbourTiesGoToLowestIndex) {
  // Minority points 1, 2, 3 are equidistant from origin 0 on the unit circle.
  std::vector<Eigen::VectorXd> x{vec(0, 0), vec(1, 0), vec(0, 1), vec(-1, 0), vec(5, 5), vec(6, 5),
                                 vec(5, 6), vec(6, 6), vec(7, 7), vec(8, 8)};
  std::vector<int> y{1, 1, 1, 1, 0, 0, 0, 0, 0, 0};
  ResampleConfig c;
  c.k = 2;
  const auto r = smote(x, y, c);
  ASSERT_FALSE(r.plan.samples.empty());
  EXPECT_EQ(r.plan.samples[0].origin, 0u);
  EXPECT_EQ(r.plan.samples[0].neighbors, (std::vector<std::size_t>{1, 2}));
}

TEST(Smote, ClassicVariantPicksOneNeighbour) {
  std::mt19937_64 rng(7);
  const auto d = random_set(rng, 20, 6);
  ResampleConfig c;
  c.k = 3;
  c.variant = SmoteVariant::classic;
  const auto r = smote(d.x, d.y, c);
  for (const auto& p : r.plan.samples) {
    ASSERT_EQ(p.neighbors.size(), 1u);
    const auto ref = brute_neighbors(d, p.origin, 3);
    EXPECT_NE(std::find(ref.begin(), ref.end(), p.neighbors[0]), ref.end());
  }
  EXPECT_EQ(parse_smote_variant("classic"), SmoteVariant::classic);
  EXPECT_EQ(to_string(SmoteVariant::mean_offset), "mean_offset");
  EXPECT_THROW(parse_smote_variant("other"), ConfigError);
}

DocMatrix random_matrix(std::mt19937_64& rng, std::string id, Eigen::Index len) {
  std::normal_distribution<double> n(0, 1);
  DocMatrix m;
  m.id = std::move(id);
  m.width = 6;
  m.columns.resize(2, len);
  for (Eigen::Index i = 0; i < m.columns.size(); ++i) m.columns.data()[i] = n(rng);
  return m;
}

TEST(SmoteMatrices, MatchesFlattenedVectorSmote) {
  std::mt19937_64 rng(8);
  std::vector<DocMatrix> ms;
  std::vector<int> y;
  std::uniform_int_distribution<Eigen::Index> len(1, 6);
  for (int i = 0; i < 24; ++i) {
    ms.push_back(random_matrix(rng, "d" + std::to_string(i), len(rng)));
    y.push_back(i % 3 == 0 ? 1 : 0);
  }
  ResampleConfig c;
  c.k = 3;
  const auto rm = smote_matrices(ms, y, c);
  std::vector<Eigen::VectorXd> flat;
  for (const auto& m : ms) flat.push_back(m.flatten());
  const auto rv = smote(flat, y, c);
  ASSERT_EQ(rm.samples.size(), rv.samples.size());
  EXPECT_EQ(rm.samples.size(), 32u);
  for (std::size_t s = 0; s < rm.plan.samples.size(); ++s) {
    const auto& p = rm.plan.samples[s];
    EXPECT_EQ(p.origin, rv.plan.samples[s].origin);
    EXPECT_EQ(p.neighbors, rv.plan.samples[s].neighbors);
    const auto& m = rm.samples[ms.size() + s];
    EXPECT_EQ(m.id, "synthetic-" + std::to_string(s));
    EXPECT_EQ(m.width, 6u);
    EXPECT_TRUE(m.flatten().isApprox(rv.samples[ms.size() + s], 1e-12));
    std::size_t longest = ms[p.origin].effective_length();
    for (auto n : p.neighbors) longest = std::max(longest, ms[n].effective_length());
    EXPECT_EQ(m.effective_length(), longest);
  }
}

TEST(SmoteMatrices, SquaredDistanceUsesPadding) {
  DocMatrix a, b;
  a.width = b.width = 4;
  a.columns = Eigen::MatrixXd::Ones(2, 1);
  b.columns = Eigen::MatrixXd::Ones(2, 3);
  EXPECT_DOUBLE_EQ(squared_distance(a, b), 4.0);
  EXPECT_DOUBLE_EQ(squared_distance(a, b), (a.flatten() - b.flatten()).squaredNorm());
  b.width = 5;
  EXPECT_THROW(smote_matrices({a, b}, {0, 1}, ResampleConfig{}), ShapeError);
}

}  // namespace
}  // namespace srl
