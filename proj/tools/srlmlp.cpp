#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <functional>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <map>
#include <optional>
#include <set>
#include <string>

#include "srl/corpus.hpp"
#include "srl/domainsel.hpp"
#include "srl/embed.hpp"
#include "srl/error.hpp"
#include "srl/evaluation.hpp"
#include "srl/gender.hpp"
#include "srl/resample.hpp"
#include "srl/sentiment.hpp"
#include "srl/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

// key=value lines; '#' or ';' start a comment line. Keys may carry a leading
// "--" and use '_' or '-' interchangeably.
std::map<std::string, std::string> read_config_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw srl::ConfigError("cannot open config file " + path.string());
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t no = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++no;
    line = trim(line);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw srl::ConfigError(path.string() + ":" + std::to_string(no) + ": expected key=value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.rfind("--", 0) == 0) key = key.substr(2);
    std::replace(key.begin(), key.end(), '_', '-');
    if (key.empty()) throw srl::ConfigError(path.string() + ":" + std::to_string(no) + ": empty key");
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    out[key] = value;
  }
  return out;
}

// Fills options the command line left unset from the config file.
// Required options are checked after the config file has been merged in.
std::vector<std::pair<CLI::App*, CLI::Option*>> required_options;

CLI::Option* require(CLI::App* app, CLI::Option* opt) {
  required_options.emplace_back(app, opt);
  return opt;
}

void check_required(CLI::App* sub) {
  for (auto [app, opt] : required_options)
    if (app == sub && opt->count() == 0) throw CLI::RequiredError(opt->get_name());
}

void apply_config(CLI::App& app, CLI::App* sub, const std::map<std::string, std::string>& config) {
  std::set<std::string> known;
  auto collect = [&](CLI::App* a) {
    for (const auto* opt : a->get_options())
      for (const auto& name : opt->get_lnames()) known.insert(name);
  };
  collect(&app);
  for (auto* s : app.get_subcommands({})) collect(s);
  for (const auto& [key, value] : config) {
    if (!known.count(key)) spdlog::warn("config key '{}' matches no option", key);
    if (key == "config") continue;
    for (CLI::App* a : {sub, &app}) {
      if (!a) continue;
      CLI::Option* opt = nullptr;
      try {
        opt = a->get_option("--" + key);
      } catch (const CLI::OptionNotFound&) {
        continue;
      }
      if (opt->count() == 0) {
        opt->add_result(value);
        opt->run_callback();
      }
      break;
    }
  }
}

srl::CleaningRules rules_from(const std::optional<fs::path>& stopwords) {
  srl::CleaningRules rules;
  if (stopwords) rules.stopwords = srl::load_stopwords(*stopwords);
  return rules;
}

void write_or_print(const std::optional<fs::path>& out, const std::function<void(std::ostream&)>& fn) {
  if (!out) {
    fn(std::cout);
    return;
  }
  if (out->has_parent_path()) fs::create_directories(out->parent_path());
  std::ofstream f(*out, std::ios::binary);
  if (!f) throw srl::DataError("cannot write " + out->string());
  fn(f);
}

struct Inputs {
  std::optional<fs::path> users, reviews, manual, stopwords, embeddings;
  void add(CLI::App* app, bool users_req, bool reviews_req) {
    auto* u = app->add_option("--users", users, "user records (jsonl)");
    auto* r = app->add_option("--reviews", reviews, "source reviews (jsonl)");
    if (users_req) require(app, u);
    if (reviews_req) require(app, r);
    app->add_option("--manual", manual, "manually labeled target posts (jsonl)");
    app->add_option("--stopwords", stopwords, "stopword list");
  }
};

struct EmbedOptions {
  srl::SkipGramConfig config;
  void add(CLI::App* app) {
    app->add_option("--dim", config.dimension, "embedding dimension")->check(CLI::PositiveNumber);
    app->add_option("--window", config.window)->check(CLI::PositiveNumber);
    app->add_option("--negatives", config.negatives);
    app->add_option("--embed-epochs", config.epochs)->check(CLI::PositiveNumber);
    app->add_option("--min-count", config.min_count);
    app->add_option("--embed-lr", config.learning_rate)->check(CLI::PositiveNumber);
  }
};

struct SentimentOptions {
  srl::SentimentModelConfig model;
  srl::nn::TrainConfig train{30, 32, 1e-3, srl::nn::OptimizerKind::adam, 1, std::nullopt};
  std::string optimizer = "adam";
  void add(CLI::App* app) {
    app->add_option("--hidden", model.hidden, "LSTM hidden size");
    app->add_option("--lstm-dropout", model.dropout_rate);
    app->add_option("--sentiment-epochs", train.epochs);
    app->add_option("--sentiment-batch-size", train.batch_size);
    app->add_option("--sentiment-lr", train.learning_rate);
    app->add_option("--sentiment-optimizer", optimizer);
    app->add_option("--patience", train.patience, "early-stop patience on held-out loss");
  }
  void finish() { train.optimizer = srl::nn::parse_optimizer(optimizer); }
};

struct GenderOptions {
  srl::ClassifierConfig classifier;
  srl::nn::TrainConfig train;
  std::string kind = "mlp";
  std::string optimizer = "adam";
  bool no_standardize = false;
  void add(CLI::App* app) {
    app->add_option("--classifier", kind, "mlp or logistic_regression");
    app->add_option("--batch-size", train.batch_size);
    app->add_option("--lr", train.learning_rate);
    app->add_option("--optimizer", optimizer);
    app->add_option("--mlp-dropout", classifier.dropout);
    app->add_flag("--no-standardize", no_standardize, "feed raw features to the classifier");
  }
  void finish() {
    classifier.kind = srl::parse_classifier(kind);
    train.optimizer = srl::nn::parse_optimizer(optimizer);
    classifier.standardize = !no_standardize;
  }
};

struct ResampleOptions {
  srl::ResampleConfig config;
  std::string variant = "mean_offset";
  void add(CLI::App* app) {
    app->add_option("--smote-k", config.k);
    app->add_option("--smote-ratio", config.target_ratio);
    app->add_option("--smote-variant", variant, "mean_offset or classic");
  }
  void finish() { config.variant = srl::parse_smote_variant(variant); }
};

srl::EmbeddingTable embeddings_for(const Inputs& in, const EmbedOptions& embed,
                                   const std::vector<srl::UserRecord>& users,
                                   const std::vector<srl::SourceReview>& reviews) {
  if (in.embeddings) return srl::load_embeddings(*in.embeddings);
  std::vector<srl::Tokens> sentences;
  for (const auto& u : users)
    for (const auto& p : u.posts) sentences.push_back(p);
  for (const auto& r : reviews) sentences.push_back(r.tokens);
  return srl::train_skipgram(sentences, embed.config);
}

std::vector<srl::DocVector> user_vectors(const std::vector<srl::UserRecord>& users, const srl::CleaningRules& rules,
                                         const srl::EmbeddingTable& table) {
  std::vector<srl::DocVector> out;
  for (const auto& doc : srl::build_virtual_documents(users, rules).documents) {
    try {
      out.push_back(srl::doc_vector(doc, table));
    } catch (const srl::OutOfVocabularyError&) {
      spdlog::warn("user {} has no in-vocabulary token", doc.user_id);
    }
  }
  return out;
}

int exit_code_for(const srl::StageError& e) {
  switch (e.cause()) {
    case srl::StageError::Cause::config: return kExitConfig;
    case srl::StageError::Cause::data: return kExitData;
    default: return kExitFailure;
  }
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("srlmlp"));
  CLI::App app{"srlmlp: sentiment representation transfer for gender classification"};
  app.require_subcommand(1);
  app.fallthrough();
  std::optional<fs::path> config_path;
  std::uint64_t seed = 1;
  std::string log_level = "info";
  app.add_option("--config", config_path, "flat key=value file; command-line flags win");
  app.add_option("--seed", seed, "seed for every random stream");
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off");

  Inputs in;
  EmbedOptions embed;
  SentimentOptions sent;
  GenderOptions gender;
  ResampleOptions resample;
  std::size_t r = 500;
  double z = 0.25;
  std::optional<fs::path> out_path;
  fs::path out_dir = ".";

  // prepare
  auto* prepare = app.add_subcommand("prepare", "clean tokens and build virtual documents");
  in.add(prepare, true, false);
  require(prepare, prepare->add_option("--out-dir", out_dir));

  // embed
  auto* embed_cmd = app.add_subcommand("embed", "train skip-gram word vectors on posts and reviews");
  in.add(embed_cmd, true, true);
  embed.add(embed_cmd);
  require(embed_cmd, embed_cmd->add_option("--out", out_path, "embedding text file"));

  // select-source
  auto* select = app.add_subcommand("select-source", "keep reviews similar to the target users");
  in.add(select, true, true);
  require(select, select->add_option("--embeddings", in.embeddings));
  select->add_option("--z", z, "average-similarity threshold");
  select->add_option("--out", out_path, "selected reviews (jsonl)");

  // sentiment-train
  std::optional<fs::path> model_path;
  auto* sent_cmd = app.add_subcommand("sentiment-train", "train the LSTM sentiment model");
  require(sent_cmd, sent_cmd->add_option("--reviews", in.reviews, "training reviews (jsonl)"));
  sent_cmd->add_option("--manual", in.manual);
  sent_cmd->add_option("--stopwords", in.stopwords);
  require(sent_cmd, sent_cmd->add_option("--embeddings", in.embeddings));
  sent_cmd->add_option("--r", r, "document matrix width")->check(CLI::PositiveNumber);
  sent.add(sent_cmd);
  require(sent_cmd, sent_cmd->add_option("--out", model_path, "model checkpoint"));

  // extract
  std::string layer = "frozen_lstm";
  std::string representation = "avg_vector";
  std::size_t keyword_top_n = 500;
  auto* extract = app.add_subcommand("extract", "build classifier features for every user");
  in.add(extract, true, false);
  require(extract, extract->add_option("--embeddings", in.embeddings));
  extract->add_option("--model", model_path, "sentiment checkpoint");
  extract->add_option("--layer", layer, "none, polarity_features, frozen_lstm or frozen_dense");
  extract->add_option("--representation", representation, "avg_vector, tfidf or keyword_tfidf");
  extract->add_option("--keyword-top-n", keyword_top_n);
  extract->add_option("--r", r)->check(CLI::PositiveNumber);
  require(extract, extract->add_option("--out", out_path, "features (jsonl)"));

  // smote
  std::optional<fs::path> features_path;
  auto* smote_cmd = app.add_subcommand("smote", "oversample the minority class of a features file");
  require(smote_cmd, smote_cmd->add_option("--features", features_path));
  resample.add(smote_cmd);
  require(smote_cmd, smote_cmd->add_option("--out", out_path));

  // gender-train
  std::optional<fs::path> test_path;
  std::size_t epochs = 100;
  auto* gender_cmd = app.add_subcommand("gender-train", "train the gender classifier on a features file");
  require(gender_cmd, gender_cmd->add_option("--features", features_path));
  gender_cmd->add_option("--test", test_path, "held-out features to score");
  gender_cmd->add_option("--epochs", epochs)->check(CLI::PositiveNumber);
  gender.add(gender_cmd);
  gender_cmd->add_option("--out", model_path, "model checkpoint");

  // evaluate / grid share the experiment options
  srl::ExperimentConfig exp;
  std::string exp_repr = "avg_vector", exp_sent = "none";
  std::optional<std::string> exp_source;
  std::vector<std::size_t> exp_epochs{60, 80, 100, 150, 200, 250, 300};
  bool smote_on = false, timing = false;
  std::string format = "json";
  std::optional<double> finetune_lr;
  auto add_experiment = [&](CLI::App* a) {
    in.add(a, true, true);
    a->add_option("--embeddings", in.embeddings, "reuse word vectors instead of training");
    embed.add(a);
    sent.add(a);
    gender.add(a);
    resample.add(a);
    a->add_option("--representation", exp_repr);
    a->add_option("--sentiment-mode", exp_sent, "none, polarity_features, frozen_lstm, frozen_dense, finetuned_lstm");
    a->add_option("--source-mode", exp_source,
                  "entire, high_similarity, entire_plus_manual, high_similarity_plus_manual");
    a->add_option("--epochs", exp_epochs, "epoch grid")->delimiter(',');
    a->add_option("--folds", exp.folds);
    a->add_option("--z", z);
    a->add_option("--r", r)->check(CLI::PositiveNumber);
    a->add_option("--keyword-top-n", keyword_top_n);
    a->add_option("--finetune-lr", finetune_lr, "LSTM learning rate while finetuning");
    a->add_flag("--smote", smote_on, "oversample the training folds");
    a->add_flag("--timing", timing, "record wall-clock seconds in the report");
    a->add_option("--format", format, "json, csv or table");
  };
  auto* evaluate = app.add_subcommand("evaluate", "stratified k-fold evaluation of one configuration");
  add_experiment(evaluate);
  evaluate->add_option("--out", out_path, "report file (stdout when absent)");
  auto* grid = app.add_subcommand("grid", "source selection x extraction layer sweep");
  add_experiment(grid);
  grid->add_option("--out-dir", out_dir, "one report per cell");

  // synth-data
  srl::SynthConfig synth;
  auto* synth_cmd = app.add_subcommand("synth-data", "write the bundled synthetic corpus");
  require(synth_cmd, synth_cmd->add_option("--out-dir", out_dir));
  synth_cmd->add_option("--n-users", synth.users);
  synth_cmd->add_option("--n-reviews", synth.reviews);
  synth_cmd->add_option("--correlation", synth.correlation);
  synth_cmd->add_option("--female-fraction", synth.female_fraction);
  synth_cmd->add_option("--posts-per-user", synth.posts_per_user);
  synth_cmd->add_option("--topic-rate", synth.topic_rate);
  synth_cmd->add_option("--topic-purity", synth.topic_purity);
  synth_cmd->add_option("--off-domain-fraction", synth.off_domain_fraction);
  synth_cmd->add_option("--manual-fraction", synth.manual_fraction);
  synth_cmd->add_option("--noise-rate", synth.noise_rate);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    if (config_path) apply_config(app, sub, read_config_file(*config_path));
    check_required(sub);
    spdlog::set_level(spdlog::level::from_str(log_level));

    embed.config.seed = seed;
    sent.train.seed = seed;
    gender.train.seed = seed;
    resample.config.seed = seed;
    synth.seed = seed;
    sent.finish();
    gender.finish();
    resample.finish();
    const auto rules = rules_from(in.stopwords);

    if (sub == prepare) {
      auto users = srl::load_user_records(*in.users);
      auto corpus = srl::build_virtual_documents(users, rules);
      fs::create_directories(out_dir);
      srl::save_user_records(srl::clean_user_records(users, rules), out_dir / "users.jsonl");
      std::ofstream docs(out_dir / "documents.jsonl", std::ios::binary);
      for (const auto& d : corpus.documents)
        docs << json{{"user_id", d.user_id},
                     {"gender", std::string(srl::to_string(d.gender))},
                     {"tokens", d.tokens},
                     {"token_count", d.token_count}}
                    .dump()
             << '\n';
      if (in.reviews)
        srl::save_source_reviews(srl::clean_source_reviews(srl::load_source_reviews(*in.reviews), rules),
                                 out_dir / "reviews.jsonl");
      if (in.manual)
        srl::save_source_reviews(srl::clean_source_reviews(srl::load_manual_labels(*in.manual), rules),
                                 out_dir / "manual.jsonl");
      std::cout << corpus.documents.size() << " documents, " << corpus.dropped_user_ids.size() << " users dropped\n";
    } else if (sub == embed_cmd) {
      const auto users = srl::clean_user_records(srl::load_user_records(*in.users), rules);
      const auto reviews = srl::clean_source_reviews(srl::load_source_reviews(*in.reviews), rules);
      const auto table = embeddings_for(Inputs{}, embed, users, reviews);
      srl::save_embeddings(table, *out_path);
      std::cout << table.size() << " words, dimension " << table.dimension() << '\n';
    } else if (sub == select) {
      const auto table = srl::load_embeddings(*in.embeddings);
      const auto users = srl::load_user_records(*in.users);
      const auto reviews = srl::clean_source_reviews(srl::load_source_reviews(*in.reviews), rules);
      const auto targets = user_vectors(users, rules, table);
      const auto set = srl::make_labeled_set(reviews, table, 1, srl::Provenance::source);
      const auto result = srl::select_source(set, targets, srl::SimilarityConfig{z});
      std::set<std::string> kept;
      for (const auto& item : result.selected.items) kept.insert(item.id);
      std::vector<srl::SourceReview> selected;
      for (const auto& rv : reviews)
        if (kept.count(rv.review_id)) selected.push_back(rv);
      if (out_path) srl::save_source_reviews(selected, *out_path);
      std::cout << "kept " << result.kept << " of " << result.total << " reviews at z=" << z << '\n';
    } else if (sub == sent_cmd) {
      const auto table = srl::load_embeddings(*in.embeddings);
      const auto reviews = srl::clean_source_reviews(srl::load_source_reviews(*in.reviews), rules);
      auto set = srl::make_labeled_set(reviews, table, r, srl::Provenance::source);
      if (in.manual) {
        const auto manual = srl::clean_source_reviews(srl::load_manual_labels(*in.manual), rules);
        set = srl::augment_with_manual(set, srl::make_labeled_set(manual, table, r, srl::Provenance::manual_target));
      }
      const auto trained = srl::train_sentiment(set, sent.model, sent.train);
      for (const auto& e : trained.history)
        std::cout << "epoch " << e.epoch << " loss " << e.train_loss << " held-out loss " << e.heldout_loss
                  << " held-out accuracy " << e.heldout_accuracy << '\n';
      srl::save_model(trained.model, *model_path);
    } else if (sub == extract) {
      const auto table = srl::load_embeddings(*in.embeddings);
      const auto users = srl::clean_user_records(srl::load_user_records(*in.users), rules);
      const auto repr = srl::parse_representation(representation);
      std::optional<srl::SentimentModel> model;
      if (layer != "none") {
        if (!model_path) throw srl::ConfigError("--model is required unless --layer none");
        model = srl::load_sentiment_model(*model_path);
        r = model->width;
      }
      std::vector<srl::VirtualDocument> docs;
      std::vector<srl::UserRecord> kept;
      std::vector<srl::DocVector> vectors;
      for (const auto& u : users) {
        auto d = srl::build_virtual_document(u, rules);
        try {
          vectors.push_back(srl::doc_vector(d, table));
        } catch (const srl::OutOfVocabularyError&) {
          spdlog::warn("user {} skipped: no in-vocabulary token", u.user_id);
          continue;
        }
        docs.push_back(std::move(d));
        kept.push_back(u);
      }
      if (repr != srl::Representation::avg_vector) {
        std::vector<srl::Tokens> toks;
        for (const auto& d : docs) toks.push_back(d.tokens);
        std::vector<std::string> keywords;
        if (repr == srl::Representation::keyword_tfidf) keywords = srl::gender_keywords(docs, keyword_top_n);
        const auto tfidf = srl::TfidfModel::fit(toks, repr == srl::Representation::keyword_tfidf ? &keywords : nullptr);
        for (std::size_t i = 0; i < docs.size(); ++i) vectors[i].values = tfidf.transform(docs[i].tokens).toDense();
      }
      std::vector<srl::FeatureVector> features;
      for (std::size_t i = 0; i < docs.size(); ++i) {
        srl::FeatureVector f;
        if (layer == "none") {
          f = srl::concat_features(vectors[i]);
        } else if (layer == "polarity_features") {
          f = srl::concat_features(vectors[i], srl::polarity_features(*model, kept[i], table, r));
        } else {
          const auto l = srl::parse_representation_layer(layer);
          if (l == srl::RepresentationLayer::finetuned_lstm)
            throw srl::ConfigError("finetuned_lstm features only exist inside evaluate");
          f = srl::concat_features(vectors[i],
                                   srl::extract_representation(*model, srl::doc_matrix(docs[i], table, r), l));
        }
        f.label = docs[i].gender;
        features.push_back(std::move(f));
      }
      srl::save_features(features, *out_path);
      std::cout << features.size() << " feature rows of length " << features.front().values.size() << '\n';
    } else if (sub == smote_cmd) {
      auto features = srl::load_features(*features_path);
      srl::check_uniform_layout(features);
      std::vector<Eigen::VectorXd> xs;
      std::vector<int> labels;
      for (const auto& f : features) {
        xs.push_back(f.values);
        labels.push_back(static_cast<int>(f.label));
      }
      auto res = srl::smote(xs, labels, resample.config);
      const auto layout = features.front().layout;
      for (std::size_t j = res.original_count; j < res.samples.size(); ++j)
        features.push_back({"synthetic-" + std::to_string(j - res.original_count),
                            static_cast<srl::Gender>(res.labels[j]), layout, res.samples[j]});
      srl::save_features(features, *out_path);
      std::cout << res.samples.size() - res.original_count << " synthetic samples added\n";
    } else if (sub == gender_cmd) {
      const auto features = srl::load_features(*features_path);
      auto train = gender.train;
      train.epochs = epochs;
      std::optional<std::vector<srl::FeatureVector>> test;
      if (test_path) test = srl::load_features(*test_path);
      const auto trained = srl::train_gender(features, gender.classifier, train);
      const auto& last = trained.history.back();
      std::cout << "epoch " << last.epoch << " loss " << last.train_loss << " train accuracy " << last.train_accuracy
                << '\n';
      if (test) std::cout << "test accuracy " << srl::accuracy(trained.model, *test) << '\n';
      if (model_path) srl::save_model(trained.model, *model_path);
    } else if (sub == evaluate || sub == grid) {
      exp.representation = srl::parse_representation(exp_repr);
      exp.sentiment_mode = srl::parse_sentiment_mode(exp_sent);
      if (exp_source) exp.source_mode = srl::parse_source_mode(*exp_source);
      exp.smote = smote_on;
      exp.resample = resample.config;
      exp.similarity_threshold = z;
      exp.epochs = exp_epochs;
      exp.seed = seed;
      exp.classifier = gender.classifier;
      exp.gender_train = gender.train;
      exp.sentiment_model = sent.model;
      exp.sentiment_train = sent.train;
      exp.finetune_lstm_learning_rate = finetune_lr;
      exp.keyword_top_n = keyword_top_n;
      exp.validate();
      const auto fmt = srl::parse_report_format(format);

      srl::PipelineConfig pipeline;
      pipeline.embedding = embed.config;
      pipeline.r = r;
      pipeline.embeddings_path = in.embeddings;
      const auto started = std::chrono::steady_clock::now();
      srl::ExperimentRunner runner(srl::load_experiment_data(*in.users, *in.reviews, in.manual, in.stopwords),
                                   pipeline);
      auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
      };
      if (sub == evaluate) {
        auto report = runner.run(exp);
        if (timing) report.seconds = elapsed();
        write_or_print(out_path, [&](std::ostream& os) { srl::emit_report(report, fmt, os); });
      } else {
        const auto ext = fmt == srl::ReportFormat::json ? ".json" : fmt == srl::ReportFormat::csv ? ".csv" : ".txt";
        fs::create_directories(out_dir);
        std::printf("%-28s %-18s %8s %7s\n", "train LSTM on", "added features", "best(%)", "epochs");
        for (const auto& cell : srl::grid_configs(exp, in.manual.has_value())) {
          auto report = runner.run(cell);
          if (timing) report.seconds = elapsed();
          const std::string source = cell.uses_sentiment_model() ? srl::to_string(cell.effective_source_mode()) : "-";
          const std::string name = cell.uses_sentiment_model() ? source + "." + srl::to_string(cell.sentiment_mode)
                                                               : std::string("baseline");
          write_or_print(out_dir / (name + ext), [&](std::ostream& os) { srl::emit_report(report, fmt, os); });
          const auto best = report.best_epoch_index();
          std::printf("%-28s %-18s %8.2f %7zu\n", source.c_str(), srl::to_string(cell.sentiment_mode).c_str(),
                      100.0 * report.mean[best], report.epochs[best]);
          std::fflush(stdout);
        }
      }
    } else if (sub == synth_cmd) {
      const auto data = srl::generate_synthetic(synth);
      srl::write_synthetic(data, out_dir);
      std::cout << data.users.size() << " users, " << data.reviews.size() << " reviews, " << data.manual.size()
                << " manual labels written to " << out_dir.string() << '\n';
    }
  } catch (const srl::StageError& e) {
    spdlog::error("{}", e.what());
    return exit_code_for(e);
  } catch (const srl::ConfigError& e) {
    spdlog::error("config error: {}", e.what());
    return kExitConfig;
  } catch (const CLI::Error& e) {
    spdlog::error("config error: {}", e.what());
    return kExitConfig;
  } catch (const srl::DataError& e) {
    spdlog::error("data error: {}", e.what());
    return kExitData;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitFailure;
  }
  return kExitOk;
}
