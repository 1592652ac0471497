#include "srl/corpus.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <json.hpp>

#include "srl/error.hpp"

namespace srl {
namespace {

using nlohmann::json;

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

bool is_blank(std::string_view line) {
  return std::all_of(line.begin(), line.end(),
                     [](unsigned char c) { return std::isspace(c) != 0; });
}

// Calls fn(json, line_number) for every non-blank line.
template <typename Fn>
void for_each_json_line(const std::filesystem::path& path, Fn&& fn) {
  auto in = open_input(path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("malformed JSON: ") + e.what(), line_no);
    }
    if (!j.is_object()) throw ParseError("expected a JSON object", line_no);
    fn(j, line_no);
  }
}

const json& require(const json& j, const char* key, std::size_t line) {
  auto it = j.find(key);
  if (it == j.end()) throw SchemaError(std::string("missing field '") + key + "'", line);
  return *it;
}

std::string require_string(const json& j, const char* key, std::size_t line) {
  const auto& v = require(j, key, line);
  if (!v.is_string()) throw SchemaError(std::string("field '") + key + "' must be a string", line);
  return v.get<std::string>();
}

Tokens parse_tokens(const json& v, const char* key, std::size_t line) {
  if (!v.is_array()) throw SchemaError(std::string("field '") + key + "' must be an array", line);
  Tokens out;
  out.reserve(v.size());
  for (const auto& t : v) {
    if (!t.is_string()) throw SchemaError(std::string("tokens in '") + key + "' must be strings", line);
    out.push_back(t.get<std::string>());
  }
  return out;
}

SourceReview parse_review(const json& j, std::size_t line, bool need_user) {
  SourceReview r;
  r.review_id = require_string(j, "review_id", line);
  const auto pol = require_string(j, "polarity", line);
  if (pol == "positive") {
    r.polarity = Polarity::positive;
  } else if (pol == "negative") {
    r.polarity = Polarity::negative;
  } else {
    throw SchemaError("unknown polarity '" + pol + "'", line);
  }
  r.tokens = parse_tokens(require(j, "tokens", line), "tokens", line);
  if (r.tokens.empty()) throw EmptyContentError("review '" + r.review_id + "' has no tokens", line);
  if (need_user) {
    r.user_id = require_string(j, "user_id", line);
  } else if (auto it = j.find("user_id"); it != j.end() && it->is_string()) {
    r.user_id = it->get<std::string>();
  }
  return r;
}

std::vector<SourceReview> load_reviews(const std::filesystem::path& path, bool need_user) {
  std::vector<SourceReview> out;
  std::unordered_set<std::string> seen;
  for_each_json_line(path, [&](const json& j, std::size_t line) {
    auto r = parse_review(j, line, need_user);
    if (!seen.insert(r.review_id).second)
      throw DuplicateKeyError("duplicate review_id '" + r.review_id + "' at line " +
                              std::to_string(line));
    out.push_back(std::move(r));
  });
  if (out.empty()) spdlog::warn("{}: empty, no reviews loaded", path.string());
  return out;
}

// Minimal UTF-8 decoder; malformed sequences decode to U+FFFD.
std::vector<char32_t> decode_utf8(std::string_view s) {
  std::vector<char32_t> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    int extra = 0;
    char32_t cp = 0;
    if (c < 0x80) {
      cp = c;
    } else if ((c & 0xE0) == 0xC0) {
      cp = c & 0x1F;
      extra = 1;
    } else if ((c & 0xF0) == 0xE0) {
      cp = c & 0x0F;
      extra = 2;
    } else if ((c & 0xF8) == 0xF0) {
      cp = c & 0x07;
      extra = 3;
    } else {
      out.push_back(0xFFFD);
      ++i;
      continue;
    }
    bool ok = true;
    for (int k = 1; k <= extra; ++k) {
      if (i + k >= s.size()) {
        ok = false;
        break;
      }
      const auto cc = static_cast<unsigned char>(s[i + k]);
      if ((cc & 0xC0) != 0x80) {
        ok = false;
        break;
      }
      cp = (cp << 6) | (cc & 0x3F);
    }
    if (!ok) {
      out.push_back(0xFFFD);
      ++i;
      continue;
    }
    out.push_back(cp);
    i += static_cast<std::size_t>(extra) + 1;
  }
  return out;
}

bool in(char32_t cp, char32_t lo, char32_t hi) { return cp >= lo && cp <= hi; }

// Letters and ideographs. Non-ASCII code points count as word characters
// unless they sit in a punctuation, symbol, digit, or private-use block.
bool is_word_codepoint(char32_t cp) {
  if (cp < 0x80) return (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z');
  if (cp == 0xFFFD) return false;
  if (in(cp, 0x80, 0xBF) || cp == 0xD7 || cp == 0xF7) return false;
  if (in(cp, 0x2000, 0x2BFF)) return false;  // punctuation, arrows, math, box drawing
  if (in(cp, 0x3000, 0x303F)) return false;  // CJK symbols and punctuation
  if (in(cp, 0xE000, 0xF8FF)) return false;  // private use
  if (in(cp, 0xFE30, 0xFE6F)) return false;  // CJK compatibility / small forms
  if (in(cp, 0xFF00, 0xFF20) || in(cp, 0xFF3B, 0xFF40) || in(cp, 0xFF5B, 0xFF65))
    return false;  // fullwidth punctuation and digits
  if (in(cp, 0x1F000, 0x1FAFF)) return false;  // emoji and pictographs
  return true;
}

}  // namespace

std::string_view to_string(Gender g) { return g == Gender::male ? "male" : "female"; }
std::string_view to_string(Polarity p) {
  return p == Polarity::positive ? "positive" : "negative";
}

Gender parse_gender(std::string_view s) {
  if (s == "male") return Gender::male;
  if (s == "female") return Gender::female;
  throw ConfigError("unknown gender '" + std::string(s) + "'");
}

Polarity parse_polarity(std::string_view s) {
  if (s == "positive") return Polarity::positive;
  if (s == "negative") return Polarity::negative;
  throw ConfigError("unknown polarity '" + std::string(s) + "'");
}

std::vector<UserRecord> load_user_records(const std::filesystem::path& path) {
  std::vector<UserRecord> out;
  std::unordered_set<std::string> seen;
  for_each_json_line(path, [&](const json& j, std::size_t line) {
    UserRecord r;
    r.user_id = require_string(j, "user_id", line);
    const auto g = require_string(j, "gender", line);
    if (g == "male") {
      r.gender = Gender::male;
    } else if (g == "female") {
      r.gender = Gender::female;
    } else {
      throw SchemaError("unknown gender '" + g + "'", line);
    }
    const auto& posts = require(j, "posts", line);
    if (!posts.is_array()) throw SchemaError("field 'posts' must be an array", line);
    for (const auto& p : posts) {
      auto toks = parse_tokens(p, "posts", line);
      if (!toks.empty()) r.posts.push_back(std::move(toks));
    }
    if (r.posts.empty())
      throw EmptyContentError("user '" + r.user_id + "' has no non-empty posts", line);
    if (!seen.insert(r.user_id).second)
      throw DuplicateKeyError("duplicate user_id '" + r.user_id + "' at line " +
                              std::to_string(line));
    out.push_back(std::move(r));
  });
  if (out.empty()) spdlog::warn("{}: empty, no user records loaded", path.string());
  return out;
}

std::vector<SourceReview> load_source_reviews(const std::filesystem::path& path) {
  return load_reviews(path, false);
}

std::vector<SourceReview> load_manual_labels(const std::filesystem::path& path) {
  return load_reviews(path, true);
}

void save_user_records(const std::vector<UserRecord>& records,
                       const std::filesystem::path& path) {
  auto out = open_output(path);
  for (const auto& r : records) {
    json j;
    j["user_id"] = r.user_id;
    j["gender"] = std::string(to_string(r.gender));
    j["posts"] = r.posts;
    out << j.dump() << '\n';
  }
}

void save_source_reviews(const std::vector<SourceReview>& reviews,
                         const std::filesystem::path& path) {
  auto out = open_output(path);
  for (const auto& r : reviews) {
    json j;
    j["review_id"] = r.review_id;
    j["polarity"] = std::string(to_string(r.polarity));
    j["tokens"] = r.tokens;
    if (!r.user_id.empty()) j["user_id"] = r.user_id;
    out << j.dump() << '\n';
  }
}

std::unordered_set<std::string> load_stopwords(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::unordered_set<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r\n");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto last = line.find_last_not_of(" \t\r\n");
    out.insert(line.substr(first, last - first + 1));
  }
  return out;
}

bool is_link_token(std::string_view token) {
  if (token.size() < 4) return false;
  for (std::size_t i = 0; i < 4; ++i) {
    if (std::tolower(static_cast<unsigned char>(token[i])) != "http"[i]) return false;
  }
  return true;
}

bool has_word_character(std::string_view utf8_token) {
  const auto cps = decode_utf8(utf8_token);
  return std::any_of(cps.begin(), cps.end(), is_word_codepoint);
}

Tokens clean_tokens(const Tokens& tokens, const CleaningRules& rules) {
  Tokens out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) {
    if (rules.stopwords.contains(t)) continue;
    if (rules.drop_links && is_link_token(t)) continue;
    if (rules.drop_non_word && !has_word_character(t)) continue;
    out.push_back(t);
  }
  return out;
}

VirtualDocument build_virtual_document(const UserRecord& record,
                                       const CleaningRules& rules) {
  VirtualDocument doc;
  doc.user_id = record.user_id;
  doc.gender = record.gender;
  for (const auto& post : record.posts) {
    auto cleaned = clean_tokens(post, rules);
    doc.tokens.insert(doc.tokens.end(), std::make_move_iterator(cleaned.begin()),
                      std::make_move_iterator(cleaned.end()));
  }
  doc.token_count = doc.tokens.size();
  if (doc.tokens.empty()) throw EmptyDocumentError(record.user_id);
  return doc;
}

PreparedCorpus build_virtual_documents(const std::vector<UserRecord>& records,
                                       const CleaningRules& rules) {
  PreparedCorpus out;
  out.documents.reserve(records.size());
  for (const auto& r : records) {
    try {
      out.documents.push_back(build_virtual_document(r, rules));
    } catch (const EmptyDocumentError& e) {
      spdlog::warn("dropping user '{}': empty after cleaning", e.user_id());
      out.dropped_user_ids.push_back(e.user_id());
    }
  }
  return out;
}

std::vector<UserRecord> clean_user_records(const std::vector<UserRecord>& records,
                                           const CleaningRules& rules) {
  std::vector<UserRecord> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    UserRecord c{r.user_id, r.gender, {}};
    for (const auto& p : r.posts) {
      auto cleaned = clean_tokens(p, rules);
      if (!cleaned.empty()) c.posts.push_back(std::move(cleaned));
    }
    if (c.posts.empty()) {
      spdlog::warn("dropping user '{}': empty after cleaning", r.user_id);
      continue;
    }
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<SourceReview> clean_source_reviews(const std::vector<SourceReview>& reviews,
                                               const CleaningRules& rules) {
  std::vector<SourceReview> out;
  out.reserve(reviews.size());
  for (const auto& r : reviews) {
    auto c = r;
    c.tokens = clean_tokens(r.tokens, rules);
    if (c.tokens.empty()) {
      spdlog::warn("dropping review '{}': empty after cleaning", r.review_id);
      continue;
    }
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace srl
