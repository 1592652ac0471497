#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace srl {

using Tokens = std::vector<std::string>;

// Declaration order fixes the class index: male = 0, female = 1.
enum class Gender { male = 0, female = 1 };
enum class Polarity { negative = 0, positive = 1 };

std::string_view to_string(Gender g);
std::string_view to_string(Polarity p);
Gender parse_gender(std::string_view s);      // throws ConfigError
Polarity parse_polarity(std::string_view s);  // throws ConfigError

struct UserRecord {
  std::string user_id;
  Gender gender = Gender::male;
  std::vector<Tokens> posts;
};

// Source-domain review. Manually labeled target posts share this shape and
// carry the id of the user they were taken from in `user_id`.
struct SourceReview {
  std::string review_id;
  Tokens tokens;
  Polarity polarity = Polarity::negative;
  std::string user_id;
};

struct VirtualDocument {
  std::string user_id;
  Gender gender = Gender::male;
  Tokens tokens;
  std::size_t token_count = 0;
};

struct CleaningRules {
  std::unordered_set<std::string> stopwords;
  bool drop_links = true;     // tokens starting with "http"
  bool drop_non_word = true;  // tokens with no letter or ideograph
};

std::vector<UserRecord> load_user_records(const std::filesystem::path& path);
std::vector<SourceReview> load_source_reviews(const std::filesystem::path& path);
// Same schema as source reviews plus a required "user_id" field.
std::vector<SourceReview> load_manual_labels(const std::filesystem::path& path);

void save_user_records(const std::vector<UserRecord>& records,
                       const std::filesystem::path& path);
void save_source_reviews(const std::vector<SourceReview>& reviews,
                         const std::filesystem::path& path);

// One token per line, '#' comment lines and blank lines ignored.
std::unordered_set<std::string> load_stopwords(const std::filesystem::path& path);

bool is_link_token(std::string_view token);
bool has_word_character(std::string_view utf8_token);

Tokens clean_tokens(const Tokens& tokens, const CleaningRules& rules);

// Throws EmptyDocumentError when cleaning removes every token.
VirtualDocument build_virtual_document(const UserRecord& record,
                                       const CleaningRules& rules);

struct PreparedCorpus {
  std::vector<VirtualDocument> documents;
  std::vector<std::string> dropped_user_ids;
};

// Builds virtual documents for every record, dropping (and logging) users
// whose documents end up empty.
PreparedCorpus build_virtual_documents(const std::vector<UserRecord>& records,
                                       const CleaningRules& rules);

// Cleans every post in place and drops posts/users that become empty.
std::vector<UserRecord> clean_user_records(const std::vector<UserRecord>& records,
                                           const CleaningRules& rules);
std::vector<SourceReview> clean_source_reviews(
    const std::vector<SourceReview>& reviews, const CleaningRules& rules);

}  // namespace srl
