#include <gtest/gtest.h>

#include <random>

#include "srl/error.hpp"
#include "srl/finetune.hpp"
#include "srl/sentiment.hpp"
#include "srl/synth.hpp"
#include "test_util.hpp"

namespace srl {
namespace {

constexpr std::size_t kDim = 12;
constexpr std::size_t kWidth = 40;

struct Fixture {
  SynthData data;
  EmbeddingTable table;
  LabeledDomainSet reviews;
  LabeledDomainSet heldout;
};

const Fixture& fixture() {
  static const Fixture f = [] {
    Fixture out;
    SynthConfig c;
    c.users = 120;
    c.reviews = 700;
    c.off_domain_fraction = 0.0;
    c.seed = 5;
    out.data = generate_synthetic(c);
    CleaningRules rules;
    rules.stopwords = {out.data.stopwords.begin(), out.data.stopwords.end()};
    out.data.users = clean_user_records(out.data.users, rules);
    out.data.reviews = clean_source_reviews(out.data.reviews, rules);
    std::vector<Tokens> docs;
    for (const auto& r : out.data.reviews) docs.push_back(r.tokens);
    for (const auto& u : out.data.users) docs.insert(docs.end(), u.posts.begin(), u.posts.end());
    SkipGramConfig sg;
    sg.dimension = kDim;
    sg.min_count = 1;
    out.table = train_skipgram(docs, sg);
    auto all = make_labeled_set(out.data.reviews, out.table, kWidth, Provenance::source);
    out.reviews.items.assign(all.items.begin(), all.items.begin() + 500);
    out.heldout.items.assign(all.items.begin() + 500, all.items.end());
    return out;
  }();
  return f;
}

nn::TrainConfig quick(std::size_t epochs = 30) {
  nn::TrainConfig t;
  t.epochs = epochs;
  t.batch_size = 32;
  t.learning_rate = 1e-2;
  t.seed = 3;
  return t;
}

SentimentModelConfig small() { return {12, 0.4}; }

const SentimentTraining& trained() {
  static const SentimentTraining t = train_sentiment(fixture().reviews, small(), quick());
  return t;
}

TEST(SentimentTraining, Errors) {
  auto t = quick();
  t.epochs = 0;
  EXPECT_THROW(train_sentiment(fixture().reviews, small(), t), ConfigError);
  LabeledDomainSet one;
  for (const auto& it : fixture().reviews.items)
    if (it.polarity == Polarity::positive) one.items.push_back(it);
  EXPECT_THROW(train_sentiment(one, small(), quick(1)), DataError);
  EXPECT_THROW(train_sentiment({}, small(), quick(1)), DataError);
}

TEST(SentimentTraining, Deterministic) {
  LabeledDomainSet part;
  part.items.assign(fixture().reviews.items.begin(), fixture().reviews.items.begin() + 80);
  auto a = train_sentiment(part, small(), quick(2));
  auto b = train_sentiment(part, small(), quick(2));
  EXPECT_EQ(nn::parameter_checksum(a.model.params()), nn::parameter_checksum(b.model.params()));
  auto t = quick(2);
  t.seed = 4;
  auto c = train_sentiment(part, small(), t);
  EXPECT_NE(nn::parameter_checksum(a.model.params()), nn::parameter_checksum(c.model.params()));
  ASSERT_EQ(a.history.size(), 2u);
  EXPECT_EQ(a.history[1].epoch, 2u);
}

TEST(SentimentTraining, LearnsOrderBasedPolarity) {
  const auto& t = trained();
  EXPECT_GE(t.history.back().heldout_accuracy, 0.95);
  std::size_t correct = 0;
  for (const auto& it : fixture().heldout.items)
    correct += (predict_polarity(t.model, it.matrix) > 0.5) == (it.polarity == Polarity::positive);
  EXPECT_GE(static_cast<double>(correct) / static_cast<double>(fixture().heldout.size()), 0.95);
}

TEST(SentimentTraining, LinearProbeOnHiddenState) {
  const auto& m = trained().model;
  auto feats = [&](const LabeledDomainSet& s) {
    std::vector<FeatureVector> out;
    for (const auto& it : s.items) {
      const auto h = extract_representation(m, it.matrix, RepresentationLayer::frozen_lstm);
      FeatureVector f = concat_features(DocVector{it.id, h.values});
      f.label = it.polarity == Polarity::positive ? Gender::female : Gender::male;
      out.push_back(std::move(f));
    }
    return out;
  };
  ClassifierConfig lr;
  lr.kind = ClassifierKind::logistic_regression;
  auto t = quick(40);
  const auto probe = train_gender(feats(fixture().reviews), lr, t);
  EXPECT_GE(accuracy(probe.model, feats(fixture().heldout)), 0.95);
}

TEST(SentimentModel, ZeroParametersGiveHalf) {
  SentimentModel m(kDim, kWidth, small());
  m.lstm.input_weights.setZero();
  m.lstm.recurrent_weights.setZero();
  m.lstm.bias.setZero();
  m.head.weights.setZero();
  m.head.bias.setZero();
  EXPECT_DOUBLE_EQ(predict_polarity(m, fixture().reviews.items[0].matrix), 0.5);
  EXPECT_THROW(SentimentModel(kDim, 0, small()), ConfigError);
}

TEST(SentimentModel, ProbabilityRangeAndPadding) {
  const auto& m = trained().model;
  for (const auto& it : fixture().heldout.items) {
    const double p = predict_polarity(m, it.matrix);
    EXPECT_GT(p, 0.0);
    EXPECT_LT(p, 1.0);
  }
  // The stored matrix holds only the effective columns; explicit zero padding
  // must not change the answer.
  const auto& doc = fixture().heldout.items[0].matrix;
  DocMatrix padded = doc;
  padded.columns = doc.dense();
  const auto a = m.lstm.forward(doc.columns, doc.effective_length()).final_hidden();
  const auto b = m.lstm.forward(padded.columns, doc.effective_length()).final_hidden();
  EXPECT_EQ(nn::Vector(a), nn::Vector(b));
  DocMatrix wrong = doc;
  wrong.width = kWidth + 1;
  EXPECT_THROW(predict_polarity(m, wrong), ShapeError);
}

TEST(Extraction, FrozenAndRepeatable) {
  const auto& m = trained().model;
  auto copy = m;
  const auto before = nn::parameter_checksum(copy.params());
  const auto& doc = fixture().heldout.items[3].matrix;
  const auto h1 = extract_representation(m, doc, RepresentationLayer::frozen_lstm);
  const auto h2 = extract_representation(m, doc, RepresentationLayer::frozen_lstm);
  EXPECT_EQ(h1.values, h2.values);
  EXPECT_EQ(h1.values.size(), 12);
  EXPECT_EQ(h1.layer_source, RepresentationLayer::frozen_lstm);
  copy = m;
  EXPECT_EQ(nn::parameter_checksum(copy.params()), before);

  // Independent recurrence with the same weights.
  const auto H = static_cast<Eigen::Index>(m.hidden_size());
  nn::Vector h = nn::Vector::Zero(H), c = nn::Vector::Zero(H);
  auto sig = [](const nn::Vector& x) { return nn::Vector((1.0 + (-x.array()).exp()).inverse()); };
  for (Eigen::Index t = 0; t < doc.columns.cols(); ++t) {
    const nn::Vector z = m.lstm.input_weights * doc.columns.col(t) + m.lstm.recurrent_weights * h + m.lstm.bias;
    const nn::Vector i = sig(z.segment(0, H)), f = sig(z.segment(H, H)), o = sig(z.segment(2 * H, H));
    const nn::Vector g = z.segment(3 * H, H).array().tanh();
    c = f.cwiseProduct(c) + i.cwiseProduct(g);
    h = o.cwiseProduct(nn::Vector(c.array().tanh()));
  }
  EXPECT_LT((h1.values - h).cwiseAbs().maxCoeff(), 1e-12);

  const auto dense = extract_representation(m, doc, RepresentationLayer::frozen_dense);
  ASSERT_EQ(dense.values.size(), 1);
  EXPECT_NEAR(dense.values(0), m.head.weights.row(0).dot(h) + m.head.bias(0), 1e-12);
  EXPECT_THROW(extract_representation(m, doc, RepresentationLayer::finetuned_lstm), ConfigError);

  SentimentModel untrained(kDim, kWidth, small());
  nn::Rng rng(1);
  untrained.init(rng);
  EXPECT_THROW(extract_representation(untrained, doc, RepresentationLayer::frozen_lstm), ConfigError);
}

TEST(Polarity, HandSetModelCountsPosts) {
  // d = 1, H = 1. h = o·tanh(i·g) with input weights only on the candidate
  // gate, so the sign of the single token value sets the sign of h.
  EmbeddingTable table({"good", "bad"}, (Eigen::MatrixXd(1, 2) << 1.0, -1.0).finished());
  SentimentModel m(1, 4, {1, 0.0});
  m.lstm.input_weights << 0, 0, 0, 5;
  m.lstm.recurrent_weights.setZero();
  m.lstm.bias << 10, 0, 10, 0;
  m.head.weights << 10;
  m.head.bias << 0;
  m.trained = true;
  UserRecord u;
  u.user_id = "u";
  u.posts = {{"good"}, {"good"}, {"bad"}, {"good"}, {"zzz"}};
  const auto f = polarity_features(m, u, table, 4);
  EXPECT_EQ(f.posts_scored, 4u);
  EXPECT_DOUBLE_EQ(f.positive_rate, 0.75);
  EXPECT_GT(f.doc_polarity, 0.5);
  UserRecord oov{"x", Gender::male, {{"zzz"}, {"yyy"}}};
  EXPECT_THROW(polarity_features(m, oov, table, 4), OutOfVocabularyError);
}

TEST(SentimentModel, SaveLoadBitwise) {
  test::TempDir dir;
  const auto& m = trained().model;
  save_model(m, dir / "s.ckpt");
  auto back = load_sentiment_model(dir / "s.ckpt");
  auto copy = m;
  EXPECT_EQ(nn::parameter_checksum(back.params()), nn::parameter_checksum(copy.params()));
  EXPECT_EQ(back.width, m.width);
  EXPECT_TRUE(back.trained);
  for (const auto& it : fixture().heldout.items)
    EXPECT_EQ(predict_polarity(back, it.matrix), predict_polarity(m, it.matrix));
}

TEST(SentimentModel, GradientMatchesFiniteDifferences) {
  SentimentModel m(kDim, kWidth, {5, 0.0});
  nn::Rng rng(2);
  m.init(rng);
  const auto& doc = fixture().reviews.items[1].matrix;
  auto params = m.params();
  EXPECT_LT(nn::gradient_check(
                params, [&] { return SentimentModel::loss(m.forward(doc, nn::Mode::inference), 1); },
                [&] { m.backward(m.forward(doc, nn::Mode::inference), 1); }),
            1e-4);
}

std::vector<FinetuneSample> finetune_samples(const SentimentModel& m) {
  std::vector<FinetuneSample> out;
  for (const auto& u : fixture().data.users) {
    const auto doc = build_virtual_document(u, {});
    FinetuneSample s;
    s.user_id = u.user_id;
    s.doc_vector = doc_vector(doc, fixture().table).values;
    s.matrix = doc_matrix(doc, fixture().table, m.width);
    s.label = u.gender;
    out.push_back(std::move(s));
  }
  return out;
}

TEST(Finetune, ZeroLstmRateMatchesFrozenPipeline) {
  const auto& m = trained().model;
  const auto samples = finetune_samples(m);
  ClassifierConfig cls;
  auto t = quick(5);
  auto ft = train_finetune(build_finetune_model(m, kDim, cls), samples, cls, t, 0.0);
  EXPECT_EQ(nn::parameter_checksum(ft.model.lstm.params()), nn::parameter_checksum(SentimentModel(m).lstm.params()));

  std::vector<FeatureVector> feats;
  for (const auto& s : samples) {
    auto f = concat_features(DocVector{s.user_id, s.doc_vector},
                             extract_representation(m, s.matrix, RepresentationLayer::frozen_lstm));
    f.label = s.label;
    feats.push_back(std::move(f));
  }
  const auto frozen = train_gender(feats, cls, t);
  const auto a = predict_finetune(ft.model, samples);
  const auto b = predict_gender(frozen.model, feats);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_NEAR(a[i].probabilities[1], b[i].probabilities[1], 1e-9);
    EXPECT_EQ(a[i].label, b[i].label);
  }
}

TEST(Finetune, ParameterCountAndLstmUpdates) {
  const auto& m = trained().model;
  ClassifierConfig cls;
  auto model = build_finetune_model(m, kDim, cls);
  auto copy = m;
  const auto mlp_count = nn::parameter_count(make_classifier(kDim + 12, cls).params());
  EXPECT_EQ(nn::parameter_count(model.params()), mlp_count + nn::parameter_count(copy.lstm.params()));
  EXPECT_EQ(model.doc_dim(), kDim);

  const auto samples = finetune_samples(m);
  auto t = quick(1);
  t.batch_size = samples.size();
  const auto ft = train_finetune(model, samples, cls, t, 1e-2);
  auto tuned = ft.model.lstm;
  EXPECT_NE(nn::parameter_checksum(tuned.params()), nn::parameter_checksum(copy.lstm.params()));

  SentimentModel untrained(kDim, kWidth, small());
  EXPECT_THROW(build_finetune_model(untrained, kDim, cls), ConfigError);
}

}  // namespace
}  // namespace srl
