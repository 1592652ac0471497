// Acceptance checks, one per criterion: `acceptance <name>` prints a single
// PASS/FAIL (or SKIP) line and exits 0, 1 or 77.
#include <spdlog/spdlog.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "srl/domainsel.hpp"
#include "srl/evaluation.hpp"
#include "srl/nn.hpp"
#include "srl/resample.hpp"
#include "srl/sentiment.hpp"
#include "srl/synth.hpp"
#include "test_util.hpp"

namespace {

using namespace srl;
using nn::Matrix;
using nn::Vector;
using Clock = std::chrono::steady_clock;

struct Outcome {
  enum { pass, fail, skip } status;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

Matrix uniform(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng, double s = 1.0) {
  std::uniform_real_distribution<double> u(-s, s);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

// ---------------------------------------------------------------- gradients

// Five-point central stencil: truncation error O(eps^4), so roundoff stays
// well below gradients of order 1e-7.
double fd_error(const nn::ParamList& params, const std::function<double()>& loss,
                const std::function<void()>& analytic) {
  nn::zero_grad(params);
  analytic();
  const double eps = 5e-4;
  double worst = 0.0;
  for (const auto& p : params)
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double keep = p.value[i];
      auto at = [&](double delta) {
        p.value[i] = keep + delta;
        return loss();
      };
      const double n = (at(-2 * eps) - 8 * at(-eps) + 8 * at(eps) - at(2 * eps)) / (12 * eps);
      p.value[i] = keep;
      worst = std::max(worst, std::abs(p.grad[i] - n) / std::max({std::abs(p.grad[i]), std::abs(n), 1e-8}));
    }
  return worst;
}

Outcome gradients() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> dim(1, 8), len(1, 5), batch(1, 4);
  double worst = 0.0;
  std::string where;
  for (int inst = 0; inst < 50; ++inst) {
    const int d = dim(rng), H = dim(rng), T = len(rng), B = batch(rng);
    nn::Rng init(static_cast<std::uint64_t>(inst) + 1);

    // dense stack with dropout (inference) and a softmax head
    nn::Mlp mlp({nn::DenseLayer(d, H, nn::Activation::tanh), nn::DropoutLayer(0.4),
                 nn::DenseLayer(H, H, nn::Activation::sigmoid), nn::DenseLayer(H, 3, nn::Activation::softmax)});
    mlp.init(init);
    const Matrix x = uniform(d, B, rng);
    Matrix t = Matrix::Zero(3, B);
    for (int j = 0; j < B; ++j) t(static_cast<Eigen::Index>(rng() % 3), j) = 1;
    auto mp = mlp.params();
    const double e1 = fd_error(
        mp, [&] { return mlp.loss(mlp.forward(x, nn::Mode::inference), t, nn::Loss::categorical_cross_entropy); },
        [&] { mlp.backward(mlp.forward(x, nn::Mode::inference), t, nn::Loss::categorical_cross_entropy); });

    // dense + sigmoid under binary cross-entropy
    nn::Mlp bin({nn::DenseLayer(d, 2, nn::Activation::sigmoid)});
    bin.init(init);
    const Matrix tb = (uniform(2, B, rng).array() > 0).cast<double>();
    auto bp = bin.params();
    const double e2 = fd_error(
        bp, [&] { return bin.loss(bin.forward(x, nn::Mode::inference), tb, nn::Loss::binary_cross_entropy); },
        [&] { bin.backward(bin.forward(x, nn::Mode::inference), tb, nn::Loss::binary_cross_entropy); });

    // LSTM feeding a sigmoid head, padded beyond T
    nn::LstmLayer lstm(d, H);
    lstm.init(init);
    lstm.bias += uniform(4 * H, 1, rng, 0.5);
    nn::DenseLayer head(H, 1, nn::Activation::sigmoid);
    head.init(init);
    Matrix seq = Matrix::Zero(d, T + 2);
    seq.leftCols(T) = uniform(d, T, rng);
    const int label = static_cast<int>(rng() % 2);
    auto lp = lstm.params();
    auto hp = head.params("head");
    lp.insert(lp.end(), hp.begin(), hp.end());
    auto loss = [&] {
      const double p = head.forward(lstm.forward(seq, T).final_hidden())(0, 0);
      return label ? -std::log(p) : -std::log(1 - p);
    };
    const double e3 = fd_error(lp, loss, [&] {
      const auto tr = lstm.forward(seq, T);
      const Matrix h = tr.final_hidden();
      const Matrix y = head.forward(h);
      Matrix dz(1, 1);
      dz(0, 0) = y(0, 0) - label;
      const Vector dh = head.backward_pre(h, dz);
      lstm.backward(tr, dh);
    });

    for (auto [e, name] : {std::pair{e1, "mlp"}, {e2, "dense"}, {e3, "lstm"}})
      if (e > worst) {
        worst = e;
        where = std::string(name) + " instance " + std::to_string(inst) + " (d=" + std::to_string(d) +
                ", H=" + std::to_string(H) + ", T=" + std::to_string(T) + ")";
      }
  }
  const double secs = seconds_since(t0);
  const bool ok = worst < 1e-4 && secs < 60;
  return {ok ? Outcome::pass : Outcome::fail,
          "50 instances, max relative error " + fmt("%.3g", worst) + " at " + where + ", " + fmt("%.1f", secs) + " s"};
}

// ---------------------------------------------------------- smote geometry

Outcome smote_geometry() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(99);
  std::normal_distribution<double> n(0, 3);
  std::size_t bad_point = 0, bad_balance = 0, bad_original = 0, synthetic = 0;
  double worst = 0.0;
  for (int set = 0; set < 200; ++set) {
    const int dim = 1 + static_cast<int>(rng() % 6);
    const std::size_t k = 1 + rng() % 5;
    const std::size_t minority = k + 1 + rng() % 20;
    const std::size_t majority = minority + rng() % 60;
    std::vector<Eigen::VectorXd> x;
    std::vector<int> y;
    const int minority_label = static_cast<int>(rng() % 2);
    for (std::size_t i = 0; i < minority + majority; ++i) {
      Eigen::VectorXd v(dim);
      for (auto& e : v) e = n(rng);
      x.push_back(v);
      y.push_back(i < minority ? minority_label : 1 - minority_label);
    }
    std::vector<std::size_t> order(x.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<Eigen::VectorXd> xs;
    std::vector<int> ys;
    for (auto i : order) {
      xs.push_back(x[i]);
      ys.push_back(y[i]);
    }
    ResampleConfig c;
    c.k = k;
    c.seed = static_cast<std::uint64_t>(set);
    const auto r = smote(xs, ys, c);
    const auto count = [&](int label) { return std::count(r.labels.begin(), r.labels.end(), label); };
    if (count(0) != count(1)) ++bad_balance;
    for (std::size_t i = 0; i < xs.size(); ++i)
      if (r.samples[i] != xs[i] || r.labels[i] != ys[i]) ++bad_original;
    for (std::size_t s = 0; s < r.plan.samples.size(); ++s) {
      const auto& p = r.plan.samples[s];
      Eigen::VectorXd centroid = Eigen::VectorXd::Zero(dim);
      for (auto j : p.neighbors) centroid += xs[j];
      centroid /= static_cast<double>(p.neighbors.size());
      const Eigen::VectorXd expect = (1 - p.sigma) * xs[p.origin] + p.sigma * centroid;
      const double err = (r.samples[xs.size() + s] - expect).cwiseAbs().maxCoeff();
      worst = std::max(worst, err);
      if (err > 1e-12 || ys[p.origin] != minority_label || p.neighbors.size() != k) ++bad_point;
      ++synthetic;
    }
  }
  const bool ok = bad_point == 0 && bad_balance == 0 && bad_original == 0;
  return {ok ? Outcome::pass : Outcome::fail,
          "200 sets, " + std::to_string(synthetic) + " synthetic points, max deviation " + fmt("%.3g", worst) +
              ", " + std::to_string(bad_point) + " bad points, " + std::to_string(bad_balance) + " unbalanced, " +
              std::to_string(bad_original) + " altered originals, " + fmt("%.1f", seconds_since(t0)) + " s"};
}

// --------------------------------------------------------------- selection

std::set<std::string> kept_ids(const LabeledDomainSet& src, const std::vector<DocVector>& targets, double z) {
  std::set<std::string> out;
  try {
    for (const auto& it : select_source(src, targets, SimilarityConfig{z}).selected.items) out.insert(it.id);
  } catch (const EmptySelectionError&) {
  }
  return out;
}

Outcome selection() {
  spdlog::set_level(spdlog::level::warn);
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n(0, 1);
  std::size_t nesting = 0, scaling = 0, checks = 0;
  for (int set = 0; set < 100; ++set) {
    const int dim = 2 + static_cast<int>(rng() % 8);
    Eigen::VectorXd shift(dim);
    for (auto& e : shift) e = n(rng);
    std::vector<DocVector> targets;
    for (int i = 0; i < 20; ++i) {
      Eigen::VectorXd v(dim);
      for (auto& e : v) e = n(rng);
      targets.push_back({"t" + std::to_string(i), v + shift});
    }
    LabeledDomainSet src;
    for (int i = 0; i < 40; ++i) {
      LabeledItem it;
      it.id = "s" + std::to_string(i);
      Eigen::VectorXd v(dim);
      for (auto& e : v) e = n(rng);
      it.vector = {it.id, v + 0.5 * shift};
      src.items.push_back(it);
    }
    std::vector<double> zs{0.01, 0.05, 0.1, 0.2, 0.25, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95};
    std::set<std::string> prev = kept_ids(src, targets, zs[0]);
    for (std::size_t zi = 1; zi < zs.size(); ++zi) {
      const auto cur = kept_ids(src, targets, zs[zi]);
      ++checks;
      if (!std::includes(prev.begin(), prev.end(), cur.begin(), cur.end())) ++nesting;
      prev = cur;
    }
    for (double c : {0.5, 2.0, 10.0}) {
      const std::size_t which = rng() % src.size();
      auto scaled = src;
      scaled.items[which].vector.values *= c;
      for (double z : {0.1, 0.25, 0.5})
        if (kept_ids(src, targets, z) != kept_ids(scaled, targets, z)) ++scaling;
      auto all = src;
      for (auto& it : all.items) it.vector.values *= c;
      if (kept_ids(src, targets, 0.25) != kept_ids(all, targets, 0.25)) ++scaling;
      checks += 4;
    }
  }
  const bool ok = nesting == 0 && scaling == 0;
  return {ok ? Outcome::pass : Outcome::fail, "100 sets, " + std::to_string(checks) + " checks, " +
                                                  std::to_string(nesting) + " nesting violations, " +
                                                  std::to_string(scaling) + " scale-dependent kept sets"};
}

// ------------------------------------------------------------ learnability

struct Prepared {
  SynthData data;
  EmbeddingTable table;
};

Prepared prepare_synthetic(const SynthConfig& c, const SkipGramConfig& sg) {
  Prepared p;
  p.data = generate_synthetic(c);
  CleaningRules rules;
  rules.stopwords = {p.data.stopwords.begin(), p.data.stopwords.end()};
  p.data.users = clean_user_records(p.data.users, rules);
  p.data.reviews = clean_source_reviews(p.data.reviews, rules);
  std::vector<Tokens> docs;
  for (const auto& u : p.data.users) docs.insert(docs.end(), u.posts.begin(), u.posts.end());
  for (const auto& r : p.data.reviews) docs.push_back(r.tokens);
  p.table = train_skipgram(docs, sg);
  return p;
}

Outcome learnability() {
  spdlog::set_level(spdlog::level::warn);
  const auto t0 = Clock::now();
  SynthConfig c;
  c.reviews = 2000;
  c.seed = 17;
  SkipGramConfig sg;  // d = 100
  const auto p = prepare_synthetic(c, sg);
  const auto set = make_labeled_set(p.data.reviews, p.table, 500, Provenance::source);
  SentimentModelConfig model;  // H = 64, dropout 0.4
  nn::TrainConfig train;
  train.epochs = 30;
  train.seed = 17;
  const auto t = train_sentiment(set, model, train);
  double best = 0.0;
  std::size_t first = 0;
  for (const auto& e : t.history) {
    best = std::max(best, e.heldout_accuracy);
    if (!first && e.heldout_accuracy >= 0.95) first = e.epoch;
  }
  const double secs = seconds_since(t0);
  const bool ok = first != 0 && secs < 300;
  return {ok ? Outcome::pass : Outcome::fail,
          "2000 reviews, d=100, H=64: held-out accuracy " + fmt("%.4f", t.history.back().heldout_accuracy) +
              " after 30 epochs (best " + fmt("%.4f", best) + ", first >= 0.95 at epoch " + std::to_string(first) +
              "), " + fmt("%.0f", secs) + " s"};
}

// ---------------------------------------------------------------- transfer

Outcome transfer() {
  spdlog::set_level(spdlog::level::warn);
  const auto t0 = Clock::now();
  double sum_base = 0, sum_lstm = 0;
  std::string per_seed;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SynthConfig c;
    c.users = 1000;
    c.correlation = 0.6;
    c.seed = seed;
    const auto d = generate_synthetic(c);
    ExperimentData data;
    data.users = d.users;
    data.reviews = d.reviews;
    data.manual = d.manual;
    data.rules.stopwords = {d.stopwords.begin(), d.stopwords.end()};
    PipelineConfig pipeline;  // d = 100, r = 500
    pipeline.embedding.seed = seed;
    ExperimentRunner runner(std::move(data), pipeline);
    ExperimentConfig base;
    base.seed = seed;
    base.epochs = {10, 20, 50, 100};
    auto lstm = base;
    lstm.sentiment_mode = SentimentMode::frozen_lstm;
    const auto rb = runner.run(base);
    const auto rl = runner.run(lstm);
    const double b = rb.mean[rb.best_epoch_index()], l = rl.mean[rl.best_epoch_index()];
    sum_base += b;
    sum_lstm += l;
    per_seed += (per_seed.empty() ? "" : ", ") + fmt("%.2f", 100 * b) + "->" + fmt("%.2f", 100 * l);
  }
  const double gain = 100 * (sum_lstm - sum_base) / 5;
  return {gain >= 2.0 ? Outcome::pass : Outcome::fail,
          "baseline " + fmt("%.2f%%", 100 * sum_base / 5) + ", frozen_lstm " + fmt("%.2f%%", 100 * sum_lstm / 5) +
              ", gain " + fmt("%+.2f", gain) + " points over 5 seeds [" + per_seed + "], " +
              fmt("%.0f", seconds_since(t0)) + " s"};
}

// ------------------------------------------------------------ reproduction

Outcome reproduction() {
  const char* dir = std::getenv("SRL_ORIGINAL_DATA");
  if (!dir) return {Outcome::skip, "original datasets not supplied (set SRL_ORIGINAL_DATA to a directory with "
                                   "users.jsonl and reviews.jsonl)"};
  const std::filesystem::path root(dir);
  std::optional<std::filesystem::path> manual, stopwords;
  if (std::filesystem::exists(root / "manual.jsonl")) manual = root / "manual.jsonl";
  if (std::filesystem::exists(root / "stopwords.txt")) stopwords = root / "stopwords.txt";
  ExperimentRunner runner(load_experiment_data(root / "users.jsonl", root / "reviews.jsonl", manual, stopwords),
                          PipelineConfig{});
  ExperimentConfig base;
  base.epochs = {60, 80, 100, 150, 200, 250, 300};
  auto best = base;
  best.sentiment_mode = SentimentMode::frozen_lstm;
  best.source_mode = SourceMode::high_similarity;
  const auto rb = runner.run(base), rl = runner.run(best);
  const double b = 100 * rb.mean[rb.best_epoch_index()], l = 100 * rl.mean[rl.best_epoch_index()];
  const bool ok = std::abs(b - 84.20) <= 1.5 && std::abs(l - 89.73) <= 1.5;
  return {ok ? Outcome::pass : Outcome::fail,
          "baseline " + fmt("%.2f%%", b) + " (target 84.20 +/- 1.5), frozen_lstm " + fmt("%.2f%%", l) +
              " (target 89.73 +/- 1.5)"};
}

// ------------------------------------------------------------- determinism

Outcome determinism() {
  test::TempDir dir;
  const std::string cli = SRLMLP_CLI;
  auto sh = [](const std::string& cmd) { return std::system((cmd + " 2>/dev/null").c_str()); };
  if (sh(cli + " --seed 11 synth-data --out-dir " + dir.path().string() + " --n-users 80 --n-reviews 200") != 0)
    return {Outcome::fail, "synth-data failed"};
  const std::string common = cli + " --seed 5 evaluate --users " + (dir / "users.jsonl").string() + " --reviews " +
                             (dir / "reviews.jsonl").string() + " --manual " + (dir / "manual.jsonl").string() +
                             " --stopwords " + (dir / "stopwords.txt").string() +
                             " --dim 8 --r 24 --min-count 1 --embed-epochs 2 --folds 3 --epochs 2,5 --hidden 4"
                             " --sentiment-epochs 2 --z 0.1";
  const std::vector<std::string> configs{
      "",
      "--smote --smote-k 3",
      "--sentiment-mode frozen_lstm --smote --smote-k 3",
      "--sentiment-mode frozen_dense --source-mode entire",
      "--sentiment-mode finetuned_lstm --source-mode high_similarity_plus_manual",
      "--sentiment-mode polarity_features --source-mode entire_plus_manual",
      "--representation keyword_tfidf --keyword-top-n 30",
      "--representation tfidf --classifier logreg",
  };
  std::size_t identical = 0;
  std::string first_diff;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    const auto a = dir / ("a" + std::to_string(i) + ".json"), b = dir / ("b" + std::to_string(i) + ".json");
    if (sh(common + " " + configs[i] + " --out " + a.string()) != 0 ||
        sh(common + " " + configs[i] + " --out " + b.string()) != 0)
      return {Outcome::fail, "evaluate failed for '" + configs[i] + "'"};
    const auto ta = test::read_file(a), tb = test::read_file(b);
    if (!ta.empty() && ta == tb)
      ++identical;
    else if (first_diff.empty())
      first_diff = configs[i].empty() ? "baseline" : configs[i];
  }
  const bool ok = identical == configs.size();
  return {ok ? Outcome::pass : Outcome::fail,
          std::to_string(identical) + "/" + std::to_string(configs.size()) +
              " CLI evaluate configurations byte-identical across repeated runs" +
              (first_diff.empty() ? "" : "; first difference: " + first_diff)};
}

// ---------------------------------------------------------- fold integrity

Outcome fold_integrity() {
  spdlog::set_level(spdlog::level::warn);
  std::mt19937_64 rng(5150);
  std::size_t bad = 0;
  double worst_prop = 0.0;
  std::size_t worst_size = 0;
  for (int ds = 0; ds < 1000; ++ds) {
    const std::size_t k = 2 + rng() % 9;
    const std::size_t n = k * (100 + rng() % 200) + rng() % k;
    const double p1 = std::uniform_real_distribution<double>(0.1, 0.9)(rng);
    std::vector<int> labels(n);
    for (auto& l : labels) l = std::uniform_real_distribution<double>(0, 1)(rng) < p1;
    if (std::count(labels.begin(), labels.end(), 1) < static_cast<long>(k) ||
        std::count(labels.begin(), labels.end(), 0) < static_cast<long>(k)) {
      --ds;
      continue;
    }
    const auto plan = stratified_kfold(labels, k, rng());
    const double overall = static_cast<double>(std::count(labels.begin(), labels.end(), 1)) / static_cast<double>(n);
    std::vector<int> seen(n, 0);
    std::size_t lo = n, hi = 0;
    for (const auto& f : plan.folds) {
      lo = std::min(lo, f.size());
      hi = std::max(hi, f.size());
      std::size_t ones = 0;
      for (auto i : f) {
        ++seen[i];
        ones += labels[i];
      }
      worst_prop = std::max(worst_prop, std::abs(static_cast<double>(ones) / static_cast<double>(f.size()) - overall));
    }
    worst_size = std::max(worst_size, hi - lo);
    const bool partition = std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; });
    if (!partition || hi - lo > 1 || plan.size() != k) ++bad;
  }

  // No synthetic sample may reach a test fold.
  std::size_t leaked = 0, synthetic = 0, runs = 0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    SynthConfig c;
    c.users = 120;
    c.reviews = 200;
    c.seed = seed;
    const auto d = generate_synthetic(c);
    ExperimentData data{d.users, d.reviews, d.manual, {}};
    data.rules.stopwords = {d.stopwords.begin(), d.stopwords.end()};
    PipelineConfig pipeline;
    pipeline.r = 24;
    pipeline.embedding.dimension = 8;
    pipeline.embedding.min_count = 1;
    ExperimentRunner runner(std::move(data), pipeline);
    for (auto mode : {SentimentMode::none, SentimentMode::frozen_lstm, SentimentMode::finetuned_lstm}) {
      ExperimentConfig cfg;
      cfg.seed = seed;
      cfg.smote = true;
      cfg.resample.k = 3;
      cfg.epochs = {2};
      cfg.sentiment_mode = mode;
      cfg.sentiment_model.hidden = 4;
      cfg.sentiment_train.epochs = 2;
      cfg.similarity_threshold = 0.05;
      const auto r = runner.run(cfg);
      ++runs;
      std::set<std::string> users;
      for (const auto& u : runner.documents()) users.insert(u.user_id);
      for (const auto& f : r.folds) {
        synthetic += f.synthetic;
        for (const auto& id : f.test_ids)
          if (!users.count(id) || id.rfind("synthetic", 0) == 0) ++leaked;
      }
    }
  }
  const bool ok = bad == 0 && worst_prop <= 0.02 && leaked == 0 && synthetic > 0;
  return {ok ? Outcome::pass : Outcome::fail,
          "1000 datasets: " + std::to_string(bad) + " bad plans, max size spread " + std::to_string(worst_size) +
              ", max class-share deviation " + fmt("%.2f", 100 * worst_prop) + " points; " + std::to_string(runs) +
              " SMOTE runs created " + std::to_string(synthetic) + " synthetic samples, " + std::to_string(leaked) +
              " in test folds"};
}

// ----------------------------------------------------------- positive rate

// Independent LSTM + sigmoid head over a post's in-vocabulary tokens.
double reference_probability(const SentimentModel& m, const EmbeddingTable& table, const Tokens& post, std::size_t r) {
  const auto H = static_cast<Eigen::Index>(m.hidden_size());
  Vector h = Vector::Zero(H), c = Vector::Zero(H);
  auto sig = [](const Vector& x) { return Vector((1.0 + (-x.array()).exp()).inverse()); };
  std::size_t steps = 0;
  for (const auto& tok : post) {
    const auto idx = table.find(tok);
    if (!idx) continue;
    if (steps++ == r) break;
    const Vector z = m.lstm.input_weights * table.vector(*idx) + m.lstm.recurrent_weights * h + m.lstm.bias;
    const Vector i = sig(z.segment(0, H)), f = sig(z.segment(H, H)), o = sig(z.segment(2 * H, H));
    const Vector g = z.segment(3 * H, H).array().tanh();
    c = f.cwiseProduct(c) + i.cwiseProduct(g);
    h = o.cwiseProduct(Vector(c.array().tanh()));
  }
  return 1.0 / (1.0 + std::exp(-(m.head.weights.row(0).dot(h) + m.head.bias(0))));
}

Outcome positive_rate() {
  spdlog::set_level(spdlog::level::warn);
  SynthConfig c;
  c.users = 100;
  c.reviews = 600;
  c.seed = 23;
  SkipGramConfig sg;
  sg.dimension = 16;
  sg.min_count = 1;
  const auto p = prepare_synthetic(c, sg);
  const std::size_t r = 30;
  nn::TrainConfig train;
  train.epochs = 15;
  train.learning_rate = 5e-3;
  const auto model = train_sentiment(make_labeled_set(p.data.reviews, p.table, r, Provenance::source), {16, 0.4}, train).model;

  std::mt19937_64 rng(3);
  std::size_t mismatches = 0, posts = 0;
  for (auto user : p.data.users) {
    // a few out-of-vocabulary posts that must not count
    if (rng() % 3 == 0) user.posts.push_back({"oov-token-" + std::to_string(rng() % 100)});
    const auto f = polarity_features(model, user, p.table, r);
    std::size_t scored = 0, positive = 0;
    for (const auto& post : user.posts) {
      const bool any = std::any_of(post.begin(), post.end(), [&](const auto& t) { return p.table.contains(t); });
      if (!any) continue;
      ++scored;
      positive += reference_probability(model, p.table, post, r) > 0.5;
    }
    posts += scored;
    const double rate = static_cast<double>(positive) / static_cast<double>(scored);
    if (f.positive_rate != rate || f.posts_scored != scored) ++mismatches;
  }
  return {mismatches == 0 ? Outcome::pass : Outcome::fail,
          "100 users, " + std::to_string(posts) + " scored posts, " + std::to_string(mismatches) +
              " users whose positive rate differs from brute-force counting"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::map<std::string, std::function<Outcome()>> checks{
      {"gradients", gradients},         {"smote_geometry", smote_geometry}, {"selection", selection},
      {"learnability", learnability},   {"transfer", transfer},             {"reproduction", reproduction},
      {"determinism", determinism},     {"fold_integrity", fold_integrity}, {"positive_rate", positive_rate}};
  std::vector<std::string> names;
  for (int i = 1; i < argc; ++i) names.emplace_back(argv[i]);
  if (names.empty())
    for (const auto& [name, fn] : checks) names.push_back(name);
  int rc = 0;
  bool skipped = false;
  for (const auto& name : names) {
    const auto it = checks.find(name);
    if (it == checks.end()) {
      std::fprintf(stderr, "unknown criterion '%s'\n", name.c_str());
      return 2;
    }
    Outcome o;
    try {
      o = it->second();
    } catch (const std::exception& e) {
      o = {Outcome::fail, std::string("exception: ") + e.what()};
    }
    const char* tag = o.status == Outcome::pass ? "PASS" : o.status == Outcome::fail ? "FAIL" : "SKIP";
    std::printf("%s %s: %s\n", tag, name.c_str(), o.detail.c_str());
    std::fflush(stdout);
    if (o.status == Outcome::fail) rc = 1;
    if (o.status == Outcome::skip) skipped = true;
  }
  if (rc == 0 && skipped && names.size() == 1) return 77;
  return rc;
}
