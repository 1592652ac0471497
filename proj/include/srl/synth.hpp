#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "srl/corpus.hpp"

namespace srl {

// Desk-scale stand-in for the micro-blog / review corpora.
//
// Every post and review carries sentiment phrases: "sNN not" reads positive,
// "not sNN" negative. Both polarities use the same tokens, so only word order
// tells them apart. A review holds an odd number of phrases of random
// polarity and is labeled by the majority. Each post holds one phrase, positive with probability
// 1/2 + bias for female users and 1/2 - bias for male users; the bias is
// solved so that corr(gender, share of positive posts) equals `correlation`.
// Filler words are shared between genders; a fraction `topic_rate` of them is
// replaced by gender topic words (own gender with probability topic_purity).
struct SynthConfig {
  std::size_t users = 1000;
  std::size_t reviews = 2000;
  double correlation = 0.6;
  double female_fraction = 0.25;
  std::size_t posts_per_user = 6;
  std::size_t post_filler_min = 3;
  std::size_t post_filler_max = 7;
  std::size_t review_filler_min = 5;
  std::size_t review_filler_max = 10;
  std::size_t review_max_phrases = 5;  // odd
  double topic_rate = 0.15;
  double topic_purity = 0.8;
  double off_domain_fraction = 0.3;  // reviews drawn from an unrelated vocabulary
  double manual_fraction = 0.1;      // users contributing one hand-labeled post
  double noise_rate = 0.2;           // per post: add a stopword, link or symbol token
  std::uint64_t seed = 7;
};

struct SynthData {
  std::vector<UserRecord> users;
  std::vector<SourceReview> reviews;
  std::vector<SourceReview> manual;
  std::vector<std::string> stopwords;
};

// Per-post positive-probability offset that yields the requested
// gender/positive-rate correlation for `posts` posts per user.
double positive_bias(double correlation, double female_fraction, std::size_t posts);

SynthData generate_synthetic(const SynthConfig& config);

// Writes users.jsonl, reviews.jsonl, manual.jsonl and stopwords.txt.
void write_synthetic(const SynthData& data, const std::filesystem::path& dir);

// Sentiment words are s00..s15. "not" directly before one makes a negative
// phrase; anywhere else the word reads positive.
bool is_sentiment_word(const std::string& token);

struct MarkerCount {
  std::size_t positive = 0;
  std::size_t negative = 0;
};
MarkerCount count_markers(const Tokens& tokens);

}  // namespace srl
