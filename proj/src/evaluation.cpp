#include "srl/evaluation.hpp"

#include <spdlog/spdlog.h>
#include <zlib.h>

#include <algorithm>
#include <cstdio>
#include <iomanip>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <unordered_set>

#include "srl/domainsel.hpp"
#include "srl/finetune.hpp"

namespace srl {

using nlohmann::json;

FoldPlan stratified_kfold(const std::vector<int>& labels, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("k-fold needs k >= 2, got " + std::to_string(k));
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  for (const auto& [label, members] : by_class)
    if (members.size() < k)
      throw DataError("class " + std::to_string(label) + " has " + std::to_string(members.size()) +
                      " members, fewer than k=" + std::to_string(k));

  FoldPlan plan;
  plan.seed = seed;
  plan.folds.resize(k);
  std::mt19937_64 rng(seed);
  std::size_t next = 0;
  for (auto& [label, members] : by_class) {
    std::shuffle(members.begin(), members.end(), rng);
    for (std::size_t i : members) {
      plan.folds[next].push_back(i);
      next = (next + 1) % k;
    }
  }
  for (auto& f : plan.folds) std::sort(f.begin(), f.end());
  return plan;
}

FoldPlan stratified_kfold(const std::vector<UserRecord>& records, std::size_t k, std::uint64_t seed) {
  std::vector<int> labels;
  labels.reserve(records.size());
  for (const auto& r : records) labels.push_back(static_cast<int>(r.gender));
  auto plan = stratified_kfold(labels, k, seed);
  for (const auto& fold : plan.folds) {
    auto& ids = plan.user_ids.emplace_back();
    for (std::size_t i : fold) ids.push_back(records[i].user_id);
  }
  return plan;
}

namespace {

template <typename E>
E parse_enum(const std::string& s, const std::vector<std::pair<const char*, E>>& names, const char* what) {
  for (const auto& [n, v] : names)
    if (s == n) return v;
  std::string known;
  for (const auto& [n, v] : names) known += (known.empty() ? "" : ", ") + std::string(n);
  throw ConfigError(std::string("unknown ") + what + " '" + s + "' (expected one of " + known + ")");
}

const std::vector<std::pair<const char*, Representation>> kRepresentations{
    {"avg_vector", Representation::avg_vector},
    {"tfidf", Representation::tfidf},
    {"keyword_tfidf", Representation::keyword_tfidf}};
const std::vector<std::pair<const char*, SentimentMode>> kSentimentModes{
    {"none", SentimentMode::none},
    {"polarity_features", SentimentMode::polarity_features},
    {"frozen_lstm", SentimentMode::frozen_lstm},
    {"frozen_dense", SentimentMode::frozen_dense},
    {"finetuned_lstm", SentimentMode::finetuned_lstm}};
const std::vector<std::pair<const char*, SourceMode>> kSourceModes{
    {"entire", SourceMode::entire},
    {"high_similarity", SourceMode::high_similarity},
    {"entire_plus_manual", SourceMode::entire_plus_manual},
    {"high_similarity_plus_manual", SourceMode::high_similarity_plus_manual}};

template <typename E>
std::string name_of(E v, const std::vector<std::pair<const char*, E>>& names) {
  for (const auto& [n, e] : names)
    if (e == v) return n;
  return "?";
}

}  // namespace

std::string to_string(Representation r) { return name_of(r, kRepresentations); }
std::string to_string(SentimentMode m) { return name_of(m, kSentimentModes); }
std::string to_string(SourceMode m) { return name_of(m, kSourceModes); }
Representation parse_representation(const std::string& s) { return parse_enum(s, kRepresentations, "representation"); }
SentimentMode parse_sentiment_mode(const std::string& s) { return parse_enum(s, kSentimentModes, "sentiment mode"); }
SourceMode parse_source_mode(const std::string& s) { return parse_enum(s, kSourceModes, "source mode"); }

bool ExperimentConfig::uses_sentiment_model() const { return sentiment_mode != SentimentMode::none; }

SourceMode ExperimentConfig::effective_source_mode() const {
  return source_mode.value_or(SourceMode::high_similarity);
}

bool ExperimentConfig::uses_manual_labels() const {
  if (!uses_sentiment_model()) return false;
  const auto m = effective_source_mode();
  return m == SourceMode::entire_plus_manual || m == SourceMode::high_similarity_plus_manual;
}

void ExperimentConfig::validate() const {
  if (folds < 2) throw ConfigError("folds must be >= 2");
  if (epochs.empty()) throw ConfigError("epoch grid is empty");
  for (auto e : epochs)
    if (e == 0) throw ConfigError("epoch grid entries must be >= 1");
  SimilarityConfig{similarity_threshold}.validate();
  if (resample.k == 0) throw ConfigError("smote k must be >= 1");
  if (!(resample.target_ratio > 0.0) || !std::isfinite(resample.target_ratio))
    throw ConfigError("smote target ratio must be > 0");
  if (!(classifier.dropout >= 0.0 && classifier.dropout < 1.0)) throw ConfigError("dropout must be in [0, 1)");
  if (!(sentiment_model.dropout_rate >= 0.0 && sentiment_model.dropout_rate < 1.0))
    throw ConfigError("sentiment dropout must be in [0, 1)");
  if (sentiment_model.hidden == 0) throw ConfigError("sentiment hidden size must be >= 1");
  auto g = gender_train;
  g.epochs = 1;
  g.validate();
  sentiment_train.validate();
  if (finetune_lstm_learning_rate && !(*finetune_lstm_learning_rate >= 0.0))
    throw ConfigError("finetune lstm learning rate must be >= 0");
  if (keyword_top_n == 0) throw ConfigError("keyword top-n must be >= 1");
}

json ExperimentConfig::to_json() const {
  json j;
  j["representation"] = to_string(representation);
  j["sentiment_mode"] = to_string(sentiment_mode);
  if (source_mode) j["source_mode"] = to_string(*source_mode);
  j["smote"] = smote;
  j["resample"] = {{"k", resample.k}, {"target_ratio", resample.target_ratio},
                   {"variant", to_string(resample.variant)}};
  j["similarity_threshold"] = similarity_threshold;
  j["epochs"] = epochs;
  j["folds"] = folds;
  j["seed"] = seed;
  j["classifier"] = {{"kind", to_string(classifier.kind)},
                     {"hidden", classifier.hidden},
                     {"dropout", classifier.dropout},
                     {"standardize", classifier.standardize}};
  j["gender_train"] = {{"batch_size", gender_train.batch_size},
                       {"learning_rate", gender_train.learning_rate},
                       {"optimizer", nn::to_string(gender_train.optimizer)}};
  j["sentiment_model"] = {{"hidden", sentiment_model.hidden}, {"dropout", sentiment_model.dropout_rate}};
  json st = {{"epochs", sentiment_train.epochs},
             {"batch_size", sentiment_train.batch_size},
             {"learning_rate", sentiment_train.learning_rate},
             {"optimizer", nn::to_string(sentiment_train.optimizer)}};
  if (sentiment_train.patience) st["patience"] = *sentiment_train.patience;
  j["sentiment_train"] = st;
  if (finetune_lstm_learning_rate) j["finetune_lstm_learning_rate"] = *finetune_lstm_learning_rate;
  j["keyword_top_n"] = keyword_top_n;
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  ExperimentConfig c;
  try {
    if (j.contains("representation")) c.representation = parse_representation(j.at("representation"));
    if (j.contains("sentiment_mode")) c.sentiment_mode = parse_sentiment_mode(j.at("sentiment_mode"));
    if (j.contains("source_mode")) c.source_mode = parse_source_mode(j.at("source_mode"));
    c.smote = j.value("smote", c.smote);
    if (j.contains("resample")) {
      const auto& r = j.at("resample");
      c.resample.k = r.value("k", c.resample.k);
      c.resample.target_ratio = r.value("target_ratio", c.resample.target_ratio);
      if (r.contains("variant")) c.resample.variant = parse_smote_variant(r.at("variant"));
    }
    c.similarity_threshold = j.value("similarity_threshold", c.similarity_threshold);
    if (j.contains("epochs")) c.epochs = j.at("epochs").get<std::vector<std::size_t>>();
    c.folds = j.value("folds", c.folds);
    c.seed = j.value("seed", c.seed);
    if (j.contains("classifier")) {
      const auto& k = j.at("classifier");
      if (k.contains("kind")) c.classifier.kind = parse_classifier(k.at("kind"));
      if (k.contains("hidden")) c.classifier.hidden = k.at("hidden").get<std::vector<std::size_t>>();
      c.classifier.dropout = k.value("dropout", c.classifier.dropout);
      c.classifier.standardize = k.value("standardize", c.classifier.standardize);
    }
    if (j.contains("gender_train")) {
      const auto& g = j.at("gender_train");
      c.gender_train.batch_size = g.value("batch_size", c.gender_train.batch_size);
      c.gender_train.learning_rate = g.value("learning_rate", c.gender_train.learning_rate);
      if (g.contains("optimizer")) c.gender_train.optimizer = nn::parse_optimizer(g.at("optimizer"));
    }
    if (j.contains("sentiment_model")) {
      const auto& m = j.at("sentiment_model");
      c.sentiment_model.hidden = m.value("hidden", c.sentiment_model.hidden);
      c.sentiment_model.dropout_rate = m.value("dropout", c.sentiment_model.dropout_rate);
    }
    if (j.contains("sentiment_train")) {
      const auto& s = j.at("sentiment_train");
      c.sentiment_train.epochs = s.value("epochs", c.sentiment_train.epochs);
      c.sentiment_train.batch_size = s.value("batch_size", c.sentiment_train.batch_size);
      c.sentiment_train.learning_rate = s.value("learning_rate", c.sentiment_train.learning_rate);
      if (s.contains("optimizer")) c.sentiment_train.optimizer = nn::parse_optimizer(s.at("optimizer"));
      if (s.contains("patience")) c.sentiment_train.patience = s.at("patience").get<std::size_t>();
    }
    if (j.contains("finetune_lstm_learning_rate"))
      c.finetune_lstm_learning_rate = j.at("finetune_lstm_learning_rate").get<double>();
    c.keyword_top_n = j.value("keyword_top_n", c.keyword_top_n);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad experiment config: ") + e.what());
  }
  return c;
}

std::string config_hash(const json& config) {
  const std::string text = config.dump();
  const auto crc = crc32(0L, reinterpret_cast<const Bytef*>(text.data()), static_cast<uInt>(text.size()));
  char buf[9];
  std::snprintf(buf, sizeof buf, "%08lx", static_cast<unsigned long>(crc));
  return buf;
}

std::size_t EvalReport::best_epoch_index() const {
  if (mean.empty()) throw DataError("report has no epochs");
  return static_cast<std::size_t>(std::max_element(mean.begin(), mean.end()) - mean.begin());
}

json EvalReport::to_json() const {
  json j;
  j["config"] = config;
  j["config_hash"] = config_hash;
  j["seed"] = seed;
  j["epochs"] = epochs;
  json folds_j = json::array();
  for (const auto& f : folds) {
    folds_j.push_back({{"fold", f.fold},
                       {"train_size", f.train_size},
                       {"test_size", f.test_size},
                       {"synthetic", f.synthetic},
                       {"test_ids", f.test_ids},
                       {"accuracy", f.accuracy}});
  }
  j["folds"] = folds_j;
  j["mean"] = mean;
  if (seconds) j["seconds"] = *seconds;
  return j;
}

EvalReport EvalReport::from_json(const json& j) {
  EvalReport r;
  try {
    r.config = j.at("config");
    r.config_hash = j.at("config_hash").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.epochs = j.at("epochs").get<std::vector<std::size_t>>();
    for (const auto& f : j.at("folds")) {
      FoldResult fr;
      fr.fold = f.at("fold").get<std::size_t>();
      fr.train_size = f.at("train_size").get<std::size_t>();
      fr.test_size = f.at("test_size").get<std::size_t>();
      fr.synthetic = f.at("synthetic").get<std::size_t>();
      fr.test_ids = f.at("test_ids").get<std::vector<std::string>>();
      fr.accuracy = f.at("accuracy").get<std::vector<double>>();
      if (fr.accuracy.size() != r.epochs.size()) throw FormatError("fold accuracy length differs from epoch grid");
      r.folds.push_back(std::move(fr));
    }
    r.mean = j.at("mean").get<std::vector<double>>();
    if (j.contains("seconds")) r.seconds = j.at("seconds").get<double>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad report: ") + e.what());
  }
  return r;
}

ReportFormat parse_report_format(const std::string& s) {
  if (s == "json") return ReportFormat::json;
  if (s == "csv") return ReportFormat::csv;
  if (s == "table") return ReportFormat::table;
  throw ConfigError("unknown report format '" + s + "' (expected json, csv or table)");
}

void emit_report(const EvalReport& report, ReportFormat format, std::ostream& out) {
  char buf[64];
  switch (format) {
    case ReportFormat::json:
      out << report.to_json().dump(2) << '\n';
      break;
    case ReportFormat::csv:
      out << "fold,accuracy,epochs,config_hash\n";
      for (const auto& f : report.folds)
        for (std::size_t e = 0; e < report.epochs.size(); ++e) {
          std::snprintf(buf, sizeof buf, "%.17g", f.accuracy[e]);
          out << 'D' << f.fold << ',' << buf << ',' << report.epochs[e] << ',' << report.config_hash << '\n';
        }
      break;
    case ReportFormat::table: {
      out << std::left << std::setw(8) << "epochs";
      for (auto e : report.epochs) out << std::right << std::setw(8) << e;
      out << '\n';
      auto row = [&](const std::string& name, const std::vector<double>& acc) {
        out << std::left << std::setw(8) << name;
        for (double a : acc) {
          std::snprintf(buf, sizeof buf, "%.2f", 100.0 * a);
          out << std::right << std::setw(8) << buf;
        }
        out << '\n';
      };
      for (const auto& f : report.folds) row("D" + std::to_string(f.fold), f.accuracy);
      row("avg", report.mean);
      break;
    }
  }
}

StageError::StageError(std::string stage, std::optional<std::size_t> fold, Cause cause, const std::string& what)
    : Error(stage + (fold ? " (fold D" + std::to_string(*fold) + ")" : std::string()) + ": " + what),
      stage_(std::move(stage)),
      fold_(fold),
      cause_(cause) {}

ExperimentData load_experiment_data(const std::filesystem::path& users, const std::filesystem::path& reviews,
                                    const std::optional<std::filesystem::path>& manual,
                                    const std::optional<std::filesystem::path>& stopwords) {
  ExperimentData d;
  d.users = load_user_records(users);
  d.reviews = load_source_reviews(reviews);
  if (manual) d.manual = load_manual_labels(*manual);
  if (stopwords) d.rules.stopwords = load_stopwords(*stopwords);
  return d;
}

namespace {

template <typename F>
auto stage(const std::string& name, std::optional<std::size_t> fold, F&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const ConfigError& e) {
    throw StageError(name, fold, StageError::Cause::config, e.what());
  } catch (const DataError& e) {
    throw StageError(name, fold, StageError::Cause::data, e.what());
  } catch (const Error& e) {
    throw StageError(name, fold, StageError::Cause::other, e.what());
  }
}

enum Stream : std::uint32_t { kFolds = 1, kSentiment, kSmote, kGender };

std::uint64_t derive_seed(std::uint64_t base, Stream stream, std::size_t fold) {
  std::seed_seq seq{static_cast<std::uint32_t>(base), static_cast<std::uint32_t>(base >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(fold)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

std::string train_key(const nn::TrainConfig& t) {
  std::ostringstream os;
  os << std::setprecision(17) << t.epochs << '/' << t.batch_size << '/' << t.learning_rate << '/'
     << nn::to_string(t.optimizer) << '/' << t.seed << '/' << (t.patience ? static_cast<long long>(*t.patience) : -1);
  return os.str();
}

}  // namespace

struct ExperimentRunner::Impl {
  PipelineConfig pipeline;
  CleaningRules rules;
  std::vector<UserRecord> users;  // cleaned, aligned with the arrays below
  std::vector<VirtualDocument> documents;
  std::vector<DocVector> vectors;
  std::vector<DocMatrix> matrices;
  EmbeddingTable table;
  LabeledDomainSet source;
  LabeledDomainSet manual;

  std::optional<TfidfModel> tfidf;
  std::map<double, LabeledDomainSet> selections;
  std::map<std::string, std::shared_ptr<const SentimentModel>> sentiment_models;
  std::map<std::string, std::vector<nn::Vector>> representations;
  std::map<std::string, std::vector<PolarityFeatures>> polarities;

  Impl(ExperimentData data, const PipelineConfig& p);

  std::vector<nn::Vector> base_representation(const ExperimentConfig& cfg, const std::vector<std::size_t>& train,
                                              std::size_t fold);
  std::pair<std::string, std::shared_ptr<const SentimentModel>> sentiment_model(
      const ExperimentConfig& cfg, const std::vector<std::size_t>& train, std::size_t fold);
  FoldResult run_fold(const ExperimentConfig& cfg, const FoldPlan& plan, std::size_t f,
                      const std::vector<std::size_t>& epochs);
};

ExperimentRunner::Impl::Impl(ExperimentData data, const PipelineConfig& p) : pipeline(p), rules(data.rules) {
  if (pipeline.r == 0) throw ConfigError("r must be >= 1");
  auto cleaned = stage("prepare", std::nullopt, [&] { return clean_user_records(data.users, rules); });
  auto reviews = stage("prepare", std::nullopt, [&] { return clean_source_reviews(data.reviews, rules); });
  auto manual_reviews = stage("prepare", std::nullopt, [&] { return clean_source_reviews(data.manual, rules); });
  if (cleaned.size() < data.users.size())
    spdlog::warn("{} users dropped: no tokens left after cleaning", data.users.size() - cleaned.size());

  table = stage("embed", std::nullopt, [&] {
    if (pipeline.embeddings_path) return load_embeddings(*pipeline.embeddings_path);
    std::vector<Tokens> sentences;
    for (const auto& u : cleaned)
      for (const auto& post : u.posts) sentences.push_back(post);
    for (const auto& r : reviews) sentences.push_back(r.tokens);
    return train_skipgram(sentences, pipeline.embedding);
  });

  stage("vectorize", std::nullopt, [&] {
    std::size_t oov = 0;
    for (auto& u : cleaned) {
      auto doc = build_virtual_document(u, rules);
      try {
        auto v = doc_vector(doc, table);
        auto m = doc_matrix(doc, table, pipeline.r);
        vectors.push_back(std::move(v));
        matrices.push_back(std::move(m));
      } catch (const OutOfVocabularyError&) {
        ++oov;
        continue;
      }
      documents.push_back(std::move(doc));
      users.push_back(std::move(u));
    }
    if (oov) spdlog::warn("{} users dropped: no in-vocabulary token", oov);
    if (users.empty()) throw DataError("no usable users");
    source = make_labeled_set(reviews, table, pipeline.r, Provenance::source);
    manual = make_labeled_set(manual_reviews, table, pipeline.r, Provenance::manual_target);
  });
  spdlog::info("prepared {} users, {} source reviews, {} manual labels, vocabulary {}", users.size(),
               source.size(), manual.size(), table.size());
}

std::vector<nn::Vector> ExperimentRunner::Impl::base_representation(const ExperimentConfig& cfg,
                                                                   const std::vector<std::size_t>& train,
                                                                   std::size_t fold) {
  std::vector<nn::Vector> out;
  out.reserve(users.size());
  switch (cfg.representation) {
    case Representation::avg_vector:
      for (const auto& v : vectors) out.push_back(v.values);
      break;
    case Representation::tfidf: {
      if (!tfidf) {
        std::vector<Tokens> docs;
        for (const auto& d : documents) docs.push_back(d.tokens);
        tfidf = TfidfModel::fit(docs);
      }
      for (const auto& d : documents) out.emplace_back(tfidf->transform(d.tokens).toDense());
      break;
    }
    case Representation::keyword_tfidf: {
      stage("keywords", fold, [&] {
        std::vector<VirtualDocument> train_docs;
        for (std::size_t i : train) train_docs.push_back(documents[i]);
        const auto keywords = gender_keywords(train_docs, cfg.keyword_top_n);
        if (keywords.empty()) throw DataError("no gender-differentiated keywords in the training fold");
        std::vector<Tokens> docs;
        for (const auto& d : documents) docs.push_back(d.tokens);
        const auto model = TfidfModel::fit(docs, &keywords);
        for (const auto& d : documents) out.emplace_back(model.transform(d.tokens).toDense());
      });
      break;
    }
  }
  return out;
}

std::pair<std::string, std::shared_ptr<const SentimentModel>> ExperimentRunner::Impl::sentiment_model(
    const ExperimentConfig& cfg, const std::vector<std::size_t>& train, std::size_t fold) {
  const auto mode = cfg.effective_source_mode();
  const bool selective = mode == SourceMode::high_similarity || mode == SourceMode::high_similarity_plus_manual;
  auto tc = cfg.sentiment_train;
  tc.seed = derive_seed(cfg.seed, kSentiment, 0);

  std::ostringstream key;
  key << std::setprecision(17) << to_string(mode) << '|' << (selective ? cfg.similarity_threshold : 0.0) << '|'
      << (cfg.uses_manual_labels() ? fold : 0) << '|' << cfg.sentiment_model.hidden << '|'
      << cfg.sentiment_model.dropout_rate << '|' << train_key(tc);
  if (auto it = sentiment_models.find(key.str()); it != sentiment_models.end()) return {it->first, it->second};

  LabeledDomainSet set = stage("select-source", std::nullopt, [&] {
    if (!selective) return source;
    auto it = selections.find(cfg.similarity_threshold);
    if (it == selections.end()) {
      auto result = select_source(source, vectors, SimilarityConfig{cfg.similarity_threshold});
      it = selections.emplace(cfg.similarity_threshold, std::move(result.selected)).first;
    }
    return it->second;
  });
  if (cfg.uses_manual_labels()) {
    set = stage("augment", fold, [&] {
      std::unordered_set<std::string> train_ids;
      for (std::size_t i : train) train_ids.insert(users[i].user_id);
      LabeledDomainSet allowed;
      for (const auto& item : manual.items)
        if (train_ids.count(item.user_id)) allowed.items.push_back(item);
      if (allowed.empty()) spdlog::warn("fold D{}: no manual labels from training users", fold);
      return augment_with_manual(set, allowed);
    });
  }
  auto trained = stage("sentiment-train", cfg.uses_manual_labels() ? std::optional<std::size_t>(fold) : std::nullopt,
                       [&] { return train_sentiment(set, cfg.sentiment_model, tc); });
  if (!trained.history.empty()) {
    const auto& last = trained.history.back();
    spdlog::info("sentiment model on {} items: held-out accuracy {:.4f} after {} epochs", set.size(),
                 last.heldout_accuracy, last.epoch);
  }
  auto model = std::make_shared<const SentimentModel>(std::move(trained.model));
  sentiment_models.emplace(key.str(), model);
  return {key.str(), model};
}

FoldResult ExperimentRunner::Impl::run_fold(const ExperimentConfig& cfg, const FoldPlan& plan, std::size_t f,
                                            const std::vector<std::size_t>& epochs) {
  const std::size_t fold_no = f + 1;
  const auto& test = plan.folds[f];
  std::vector<std::size_t> train;
  {
    std::vector<char> in_test(users.size(), 0);
    for (std::size_t i : test) in_test[i] = 1;
    for (std::size_t i = 0; i < users.size(); ++i)
      if (!in_test[i]) train.push_back(i);
  }

  FoldResult result;
  result.fold = fold_no;
  result.test_size = test.size();
  for (std::size_t i : test) result.test_ids.push_back(users[i].user_id);
  result.accuracy.assign(epochs.size(), 0.0);

  const auto base = base_representation(cfg, train, fold_no);
  std::shared_ptr<const SentimentModel> sentiment;
  std::string model_key;
  if (cfg.uses_sentiment_model()) std::tie(model_key, sentiment) = sentiment_model(cfg, train, fold_no);

  auto gender_cfg = cfg.gender_train;
  gender_cfg.epochs = epochs.back();
  gender_cfg.seed = derive_seed(cfg.seed, kGender, fold_no);
  auto resample_cfg = cfg.resample;
  resample_cfg.seed = derive_seed(cfg.seed, kSmote, fold_no);
  auto grid_slot = [&](std::size_t epoch) -> std::optional<std::size_t> {
    auto it = std::lower_bound(epochs.begin(), epochs.end(), epoch);
    if (it == epochs.end() || *it != epoch) return std::nullopt;
    return static_cast<std::size_t>(it - epochs.begin());
  };

  if (cfg.sentiment_mode == SentimentMode::finetuned_lstm) {
    std::vector<FinetuneSample> train_samples, test_samples;
    for (std::size_t i : train) train_samples.push_back({users[i].user_id, base[i], matrices[i], users[i].gender});
    for (std::size_t i : test) test_samples.push_back({users[i].user_id, base[i], matrices[i], users[i].gender});
    result.train_size = train_samples.size();
    if (cfg.smote) {
      stage("smote", fold_no, [&] {
        std::vector<int> labels;
        std::vector<Eigen::VectorXd> vs;
        std::vector<DocMatrix> ms;
        for (const auto& s : train_samples) {
          labels.push_back(static_cast<int>(s.label));
          vs.push_back(s.doc_vector);
          ms.push_back(s.matrix);
        }
        const auto plan_s = plan_smote(labels, resample_cfg, [&](std::size_t a, std::size_t b) {
          return (vs[a] - vs[b]).norm();
        });
        std::size_t n = 0;
        for (const auto& s : plan_s.samples) {
          const std::string id = "synthetic-" + std::to_string(n++);
          train_samples.push_back(
              {id, synthesize(s, vs), synthesize(s, ms, id), static_cast<Gender>(plan_s.minority_label)});
        }
        result.synthetic = plan_s.samples.size();
      });
    }
    const double lstm_lr = cfg.finetune_lstm_learning_rate.value_or(cfg.gender_train.learning_rate);
    stage("gender-train", fold_no, [&] {
      auto model = build_finetune_model(*sentiment, static_cast<std::size_t>(base.front().size()), cfg.classifier);
      train_finetune(std::move(model), train_samples, cfg.classifier, gender_cfg, lstm_lr,
                     [&](std::size_t epoch, const FinetuneModel& m) {
                       const auto slot = grid_slot(epoch);
                       if (!slot) return;
                       const auto preds = predict_finetune(m, test_samples);
                       std::size_t correct = 0;
                       for (std::size_t j = 0; j < preds.size(); ++j)
                         if (preds[j].label == test_samples[j].label) ++correct;
                       result.accuracy[*slot] = static_cast<double>(correct) / static_cast<double>(preds.size());
                     });
    });
    return result;
  }

  // Sentiment features for every user, cached per trained model.
  const std::vector<nn::Vector>* reps = nullptr;
  const std::vector<PolarityFeatures>* pols = nullptr;
  if (cfg.sentiment_mode == SentimentMode::frozen_lstm || cfg.sentiment_mode == SentimentMode::frozen_dense) {
    const auto layer = cfg.sentiment_mode == SentimentMode::frozen_lstm ? RepresentationLayer::frozen_lstm
                                                                        : RepresentationLayer::frozen_dense;
    const std::string key = model_key + '|' + to_string(layer);
    auto it = representations.find(key);
    if (it == representations.end()) {
      std::vector<nn::Vector> values;
      stage("extract", fold_no, [&] {
        for (const auto& m : matrices) values.push_back(extract_representation(*sentiment, m, layer).values);
      });
      it = representations.emplace(key, std::move(values)).first;
    }
    reps = &it->second;
  } else if (cfg.sentiment_mode == SentimentMode::polarity_features) {
    auto it = polarities.find(model_key);
    if (it == polarities.end()) {
      std::vector<PolarityFeatures> values;
      stage("extract", fold_no, [&] {
        for (const auto& u : users) values.push_back(polarity_features(*sentiment, u, table, pipeline.r));
      });
      it = polarities.emplace(model_key, std::move(values)).first;
    }
    pols = &it->second;
  }

  auto features_of = [&](std::size_t i) {
    DocVector v{users[i].user_id, base[i]};
    FeatureVector fv;
    if (reps)
      fv = concat_features(v, SentimentRepresentation{(*reps)[i], cfg.sentiment_mode == SentimentMode::frozen_lstm
                                                                       ? RepresentationLayer::frozen_lstm
                                                                       : RepresentationLayer::frozen_dense});
    else if (pols)
      fv = concat_features(v, (*pols)[i]);
    else
      fv = concat_features(v);
    fv.label = users[i].gender;
    return fv;
  };
  std::vector<FeatureVector> train_features, test_features;
  for (std::size_t i : train) train_features.push_back(features_of(i));
  for (std::size_t i : test) test_features.push_back(features_of(i));
  result.train_size = train_features.size();

  if (cfg.smote) {
    stage("smote", fold_no, [&] {
      std::vector<Eigen::VectorXd> xs;
      std::vector<int> labels;
      for (const auto& fv : train_features) {
        xs.push_back(fv.values);
        labels.push_back(static_cast<int>(fv.label));
      }
      auto res = smote(xs, labels, resample_cfg);
      for (std::size_t j = res.original_count; j < res.samples.size(); ++j) {
        FeatureVector fv;
        fv.user_id = "synthetic-" + std::to_string(j - res.original_count);
        fv.label = static_cast<Gender>(res.labels[j]);
        fv.layout = train_features.front().layout;
        fv.values = std::move(res.samples[j]);
        train_features.push_back(std::move(fv));
      }
      result.synthetic = res.samples.size() - res.original_count;
    });
  }

  stage("gender-train", fold_no, [&] {
    train_gender(train_features, cfg.classifier, gender_cfg, [&](std::size_t epoch, const GenderModel& m) {
      if (const auto slot = grid_slot(epoch)) result.accuracy[*slot] = accuracy(m, test_features);
    });
  });
  return result;
}

ExperimentRunner::ExperimentRunner(ExperimentData data, const PipelineConfig& pipeline)
    : impl_(std::make_unique<Impl>(std::move(data), pipeline)) {}
ExperimentRunner::~ExperimentRunner() = default;
ExperimentRunner::ExperimentRunner(ExperimentRunner&&) noexcept = default;

const EmbeddingTable& ExperimentRunner::embeddings() const { return impl_->table; }
const std::vector<VirtualDocument>& ExperimentRunner::documents() const { return impl_->documents; }
const std::vector<DocVector>& ExperimentRunner::doc_vectors() const { return impl_->vectors; }
const std::vector<DocMatrix>& ExperimentRunner::doc_matrices() const { return impl_->matrices; }

std::vector<int> ExperimentRunner::labels() const {
  std::vector<int> out;
  for (const auto& u : impl_->users) out.push_back(static_cast<int>(u.gender));
  return out;
}

EvalReport ExperimentRunner::run(const ExperimentConfig& config) {
  config.validate();
  if (!config.uses_sentiment_model() && config.source_mode)
    spdlog::info("sentiment mode is none: source mode {} ignored", to_string(*config.source_mode));

  std::vector<std::size_t> epochs = config.epochs;
  std::sort(epochs.begin(), epochs.end());
  epochs.erase(std::unique(epochs.begin(), epochs.end()), epochs.end());

  EvalReport report;
  report.config = config.to_json();
  report.config["pipeline"] = {{"r", impl_->pipeline.r},
                               {"dimension", impl_->table.dimension()},
                               {"vocabulary", impl_->table.size()},
                               {"users", impl_->users.size()}};
  report.config_hash = config_hash(report.config);
  report.seed = config.seed;
  report.epochs = epochs;

  const auto plan = stage("folds", std::nullopt, [&] {
    return stratified_kfold(impl_->users, config.folds, derive_seed(config.seed, kFolds, 0));
  });
  for (std::size_t f = 0; f < plan.size(); ++f) {
    report.folds.push_back(impl_->run_fold(config, plan, f, epochs));
    spdlog::info("fold D{}: accuracy {:.4f} at {} epochs", f + 1, report.folds.back().accuracy.back(), epochs.back());
  }
  report.mean.assign(epochs.size(), 0.0);
  for (std::size_t e = 0; e < epochs.size(); ++e) {
    double sum = 0.0;
    for (const auto& f : report.folds) sum += f.accuracy[e];
    report.mean[e] = sum / static_cast<double>(report.folds.size());
  }
  return report;
}

EvalReport run_experiment(const ExperimentConfig& config, ExperimentData data, const PipelineConfig& pipeline) {
  ExperimentRunner runner(std::move(data), pipeline);
  return runner.run(config);
}

std::vector<ExperimentConfig> grid_configs(const ExperimentConfig& base, bool include_manual) {
  std::vector<ExperimentConfig> out;
  auto baseline = base;
  baseline.sentiment_mode = SentimentMode::none;
  baseline.source_mode.reset();
  out.push_back(baseline);
  for (auto [name, source] : kSourceModes) {
    if (!include_manual && (source == SourceMode::entire_plus_manual ||
                            source == SourceMode::high_similarity_plus_manual))
      continue;
    for (auto mode : {SentimentMode::frozen_lstm, SentimentMode::frozen_dense, SentimentMode::finetuned_lstm,
                      SentimentMode::polarity_features}) {
      auto c = base;
      c.sentiment_mode = mode;
      c.source_mode = source;
      out.push_back(c);
    }
  }
  return out;
}

}  // namespace srl
