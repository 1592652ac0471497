#include "srl/synth.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <cctype>

#include "srl/error.hpp"

namespace srl {
namespace {

constexpr std::size_t kFiller = 150;
constexpr std::size_t kOffDomain = 100;
constexpr std::size_t kTopics = 15;
constexpr std::size_t kMarkers = 16;

std::string numbered(const char* prefix, std::size_t i, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%0*zu", prefix, width, i);
  return buf;
}

const std::string kNegator = "not";
const std::vector<std::string> kStopwords{"the", "a", "of", "and", "is"};
const std::vector<std::string> kSymbols{"!!", "...", "2019", "??", "@@"};

}  // namespace

double positive_bias(double correlation, double female_fraction, std::size_t posts) {
  if (!(correlation >= 0.0 && correlation < 1.0)) throw ConfigError("correlation must lie in [0, 1)");
  if (!(female_fraction > 0.0 && female_fraction < 1.0)) throw ConfigError("female_fraction must lie in (0, 1)");
  if (posts == 0) throw ConfigError("posts_per_user must be >= 1");
  // rate = Binomial(a, 1/2 ± b) / a. With s = p(1-p):
  //   cov(g, rate) = 2 s b,  var(rate) = 4 s b² + (1/4 - b²) / a
  //   ρ² var(rate) = 4 s b²  ⇒  b² = (ρ²/(4a)) / (4s(1-ρ²) + ρ²/a)
  const double s = female_fraction * (1.0 - female_fraction);
  const double rho2 = correlation * correlation;
  const double a = static_cast<double>(posts);
  const double b2 = (rho2 / (4.0 * a)) / (4.0 * s * (1.0 - rho2) + rho2 / a);
  const double b = std::sqrt(b2);
  if (b >= 0.5) throw ConfigError("requested correlation is not reachable with this many posts");
  return b;
}

bool is_sentiment_word(const std::string& t) {
  return t.size() == 3 && t[0] == 's' && std::isdigit(static_cast<unsigned char>(t[1])) &&
         std::isdigit(static_cast<unsigned char>(t[2]));
}

MarkerCount count_markers(const Tokens& tokens) {
  MarkerCount c;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (!is_sentiment_word(tokens[i])) continue;
    if (i > 0 && tokens[i - 1] == kNegator)
      ++c.negative;
    else
      ++c.positive;
  }
  return c;
}

SynthData generate_synthetic(const SynthConfig& c) {
  if (c.users < 2) throw ConfigError("need at least two users");
  if (c.post_filler_min > c.post_filler_max || c.review_filler_min > c.review_filler_max)
    throw ConfigError("filler length range is empty");
  if (c.review_max_phrases % 2 == 0) throw ConfigError("review_max_phrases must be odd");
  if (c.post_filler_min < 1 || c.review_filler_min < c.review_max_phrases)
    throw ConfigError("too few filler words to separate the sentiment phrases");
  const double bias = positive_bias(c.correlation, c.female_fraction, c.posts_per_user);
  std::mt19937_64 rng(c.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> filler(0, kFiller - 1);
  std::uniform_int_distribution<std::size_t> off_domain(0, kOffDomain - 1);
  std::uniform_int_distribution<std::size_t> topic(0, kTopics - 1);
  std::uniform_int_distribution<std::size_t> marker(0, kMarkers - 1);
  std::uniform_int_distribution<std::size_t> post_len(c.post_filler_min, c.post_filler_max);
  std::uniform_int_distribution<std::size_t> review_len(c.review_filler_min, c.review_filler_max);
  std::uniform_int_distribution<std::size_t> phrase_count(0, c.review_max_phrases / 2);

  // Fillers plus k sentiment phrases, each phrase in its own gap before a
  // filler, so phrases never touch each other or the end of the text.
  auto compose = [&](Tokens fillers, const std::vector<bool>& phrases) {
    std::vector<std::size_t> gaps(fillers.size());
    std::iota(gaps.begin(), gaps.end(), 0);
    std::shuffle(gaps.begin(), gaps.end(), rng);
    gaps.resize(phrases.size());
    std::vector<std::vector<std::string>> at(fillers.size() + 1);
    for (std::size_t k = 0; k < phrases.size(); ++k) {
      const auto word = numbered("s", marker(rng), 2);
      at[gaps[k]] = phrases[k] ? std::vector<std::string>{word, kNegator} : std::vector<std::string>{kNegator, word};
    }
    Tokens out;
    for (std::size_t g = 0; g <= fillers.size(); ++g) {
      out.insert(out.end(), at[g].begin(), at[g].end());
      if (g < fillers.size()) out.push_back(std::move(fillers[g]));
    }
    return out;
  };
  auto insert_at_random = [&](Tokens& toks, std::string t) {
    std::uniform_int_distribution<std::size_t> pos(0, toks.size());
    toks.insert(toks.begin() + static_cast<std::ptrdiff_t>(pos(rng)), std::move(t));
  };

  SynthData out;
  out.stopwords = kStopwords;

  // Genders: exactly round(n · female_fraction) female users, shuffled.
  const auto n_female = static_cast<std::size_t>(std::llround(c.female_fraction * static_cast<double>(c.users)));
  std::vector<Gender> genders(c.users, Gender::male);
  std::fill(genders.begin(), genders.begin() + static_cast<std::ptrdiff_t>(n_female), Gender::female);
  std::shuffle(genders.begin(), genders.end(), rng);

  for (std::size_t u = 0; u < c.users; ++u) {
    UserRecord rec;
    rec.user_id = numbered("u", u, 5);
    rec.gender = genders[u];
    const bool female = rec.gender == Gender::female;
    const double p_pos = female ? 0.5 + bias : 0.5 - bias;
    std::vector<bool> post_positive;
    for (std::size_t j = 0; j < c.posts_per_user; ++j) {
      Tokens post;
      const auto n = post_len(rng);
      for (std::size_t k = 0; k < n; ++k) {
        if (unit(rng) < c.topic_rate) {
          const bool own = unit(rng) < c.topic_purity;
          const bool as_female = own ? female : !female;
          post.push_back(numbered(as_female ? "f" : "m", topic(rng), 2));
        } else {
          post.push_back(numbered("w", filler(rng), 3));
        }
      }
      post_positive.push_back(unit(rng) < p_pos);
      post = compose(std::move(post), {post_positive.back()});
      if (unit(rng) < c.noise_rate) {
        const double kind = unit(rng);
        std::string noise;
        if (kind < 1.0 / 3) {
          noise = kStopwords[std::uniform_int_distribution<std::size_t>(0, kStopwords.size() - 1)(rng)];
        } else if (kind < 2.0 / 3) {
          noise = "http://t.cn/" + numbered("", filler(rng), 4);
        } else {
          noise = kSymbols[std::uniform_int_distribution<std::size_t>(0, kSymbols.size() - 1)(rng)];
        }
        insert_at_random(post, std::move(noise));
      }
      rec.posts.push_back(std::move(post));
    }
    if (unit(rng) < c.manual_fraction) {
      const auto j = std::uniform_int_distribution<std::size_t>(0, rec.posts.size() - 1)(rng);
      SourceReview m;
      m.review_id = "manual-" + rec.user_id + "-" + std::to_string(j);
      m.user_id = rec.user_id;
      m.tokens = rec.posts[j];
      m.polarity = post_positive[j] ? Polarity::positive : Polarity::negative;
      out.manual.push_back(std::move(m));
    }
    out.users.push_back(std::move(rec));
  }

  for (std::size_t i = 0; i < c.reviews; ++i) {
    SourceReview r;
    r.review_id = numbered("r", i, 5);
    const bool off = unit(rng) < c.off_domain_fraction;
    const auto n = review_len(rng);
    Tokens fillers;
    for (std::size_t k = 0; k < n; ++k)
      fillers.push_back(off ? numbered("x", off_domain(rng), 3) : numbered("w", filler(rng), 3));
    // An odd number of phrases with independent polarities; the majority
    // decides the label.
    const std::size_t k = 2 * phrase_count(rng) + 1;
    std::vector<bool> phrases;
    std::size_t n_pos = 0;
    for (std::size_t p = 0; p < k; ++p) {
      phrases.push_back(unit(rng) < 0.5);
      n_pos += phrases.back();
    }
    const bool positive = 2 * n_pos > k;
    r.tokens = compose(std::move(fillers), phrases);
    r.polarity = positive ? Polarity::positive : Polarity::negative;
    out.reviews.push_back(std::move(r));
  }
  return out;
}

void write_synthetic(const SynthData& data, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  save_user_records(data.users, dir / "users.jsonl");
  save_source_reviews(data.reviews, dir / "reviews.jsonl");
  save_source_reviews(data.manual, dir / "manual.jsonl");
  std::ofstream sw(dir / "stopwords.txt");
  if (!sw) throw DataError("cannot write " + (dir / "stopwords.txt").string());
  sw << "# synthetic stopword list\n";
  for (const auto& s : data.stopwords) sw << s << '\n';
}

}  // namespace srl
