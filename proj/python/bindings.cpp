#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "srl/domainsel.hpp"
#include "srl/embed.hpp"
#include "srl/error.hpp"
#include "srl/evaluation.hpp"
#include "srl/resample.hpp"
#include "srl/synth.hpp"

namespace py = pybind11;

namespace {

srl::EvalReport evaluate(const std::string& config_json, const std::filesystem::path& users,
                         const std::filesystem::path& reviews, std::optional<std::filesystem::path> manual,
                         std::optional<std::filesystem::path> stopwords, std::size_t r, std::size_t dimension,
                         std::uint64_t seed) {
  auto config = srl::ExperimentConfig::from_json(nlohmann::json::parse(config_json));
  config.seed = seed;
  srl::PipelineConfig pipeline;
  pipeline.r = r;
  pipeline.embedding.dimension = dimension;
  pipeline.embedding.seed = seed;
  py::gil_scoped_release release;
  return srl::run_experiment(config, srl::load_experiment_data(users, reviews, manual, stopwords), pipeline);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "sentiment representation transfer for gender classification";

  py::register_exception<srl::Error>(m, "Error");
  py::register_exception<srl::ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<srl::DataError>(m, "DataError", PyExc_ValueError);

  m.def(
      "synth_data",
      [](const std::filesystem::path& out_dir, std::size_t users, std::size_t reviews, double correlation,
         std::uint64_t seed) {
        srl::SynthConfig c;
        c.users = users;
        c.reviews = reviews;
        c.correlation = correlation;
        c.seed = seed;
        const auto data = srl::generate_synthetic(c);
        srl::write_synthetic(data, out_dir);
        return py::make_tuple(data.users.size(), data.reviews.size(), data.manual.size());
      },
      py::arg("out_dir"), py::arg("users") = 1000, py::arg("reviews") = 2000, py::arg("correlation") = 0.6,
      py::arg("seed") = 7);

  m.def("positive_bias", &srl::positive_bias, py::arg("correlation"), py::arg("female_fraction"),
        py::arg("posts"));

  m.def(
      "stratified_kfold",
      [](const std::vector<int>& labels, std::size_t k, std::uint64_t seed) {
        return srl::stratified_kfold(labels, k, seed).folds;
      },
      py::arg("labels"), py::arg("k") = 5, py::arg("seed") = 1);

  m.def(
      "smote",
      [](const Eigen::MatrixXd& samples, const std::vector<int>& labels, std::size_t k, double target_ratio,
         std::uint64_t seed, const std::string& variant) {
        if (static_cast<std::size_t>(samples.rows()) != labels.size())
          throw srl::ShapeError("smote: one label per row expected");
        std::vector<Eigen::VectorXd> xs;
        for (Eigen::Index i = 0; i < samples.rows(); ++i) xs.emplace_back(samples.row(i).transpose());
        const auto res = srl::smote(xs, labels, {k, target_ratio, seed, srl::parse_smote_variant(variant)});
        Eigen::MatrixXd out(static_cast<Eigen::Index>(res.samples.size()), samples.cols());
        for (std::size_t i = 0; i < res.samples.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = res.samples[i];
        return py::make_tuple(out, res.labels);
      },
      py::arg("samples"), py::arg("labels"), py::arg("k") = 5, py::arg("target_ratio") = 1.0, py::arg("seed") = 1,
      py::arg("variant") = "mean_offset");

  m.def(
      "cosine", [](const Eigen::VectorXd& u, const Eigen::VectorXd& v) { return srl::cosine(u, v); }, py::arg("u"),
      py::arg("v"));

  m.def(
      "select_source",
      [](const Eigen::MatrixXd& source, const Eigen::MatrixXd& targets, double threshold) {
        // rows are vectors; returns kept row indices and per-row scores
        srl::LabeledDomainSet set;
        for (Eigen::Index i = 0; i < source.rows(); ++i) {
          srl::LabeledItem item;
          item.id = std::to_string(i);
          item.vector = {item.id, source.row(i).transpose()};
          set.items.push_back(std::move(item));
        }
        std::vector<srl::DocVector> ts;
        for (Eigen::Index i = 0; i < targets.rows(); ++i) ts.push_back({std::to_string(i), targets.row(i).transpose()});
        std::vector<std::size_t> kept;
        std::vector<double> scores;
        try {
          auto res = srl::select_source(set, ts, srl::SimilarityConfig{threshold});
          for (const auto& item : res.selected.items) kept.push_back(std::stoul(item.id));
          scores = res.scores;
        } catch (const srl::EmptySelectionError&) {
        }
        return py::make_tuple(kept, scores);
      },
      py::arg("source"), py::arg("targets"), py::arg("threshold") = 0.25);

  m.def(
      "train_skipgram",
      [](const std::vector<srl::Tokens>& sentences, std::size_t dimension, std::size_t window, std::size_t negatives,
         std::size_t epochs, std::size_t min_count, std::uint64_t seed) {
        srl::SkipGramConfig c{dimension, window, negatives, epochs, min_count, seed, 0.025};
        py::gil_scoped_release release;
        auto table = srl::train_skipgram(sentences, c);
        py::gil_scoped_acquire acquire;
        return py::make_tuple(table.tokens(), Eigen::MatrixXd(table.vectors().transpose()));
      },
      py::arg("sentences"), py::arg("dimension") = 100, py::arg("window") = 5, py::arg("negatives") = 5,
      py::arg("epochs") = 5, py::arg("min_count") = 2, py::arg("seed") = 1);

  m.def(
      "evaluate",
      [](const std::string& config_json, const std::filesystem::path& users, const std::filesystem::path& reviews,
         std::optional<std::filesystem::path> manual, std::optional<std::filesystem::path> stopwords, std::size_t r,
         std::size_t dimension, std::uint64_t seed) {
        const auto report = evaluate(config_json, users, reviews, manual, stopwords, r, dimension, seed);
        return report.to_json().dump();
      },
      py::arg("config_json"), py::arg("users"), py::arg("reviews"), py::arg("manual") = py::none(),
      py::arg("stopwords") = py::none(), py::arg("r") = 500, py::arg("dimension") = 100, py::arg("seed") = 1);
}
