#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "srl/corpus.hpp"

namespace srl {

// Word vectors stored column-wise: vectors().col(i) belongs to tokens()[i].
class EmbeddingTable {
 public:
  explicit EmbeddingTable(std::size_t dimension = 0) : dimension_(dimension) {}
  EmbeddingTable(std::vector<std::string> tokens, Eigen::MatrixXd vectors);

  std::size_t dimension() const { return dimension_; }
  std::size_t size() const { return tokens_.size(); }
  bool empty() const { return tokens_.empty(); }

  std::optional<std::size_t> find(const std::string& token) const;
  bool contains(const std::string& token) const { return find(token).has_value(); }
  auto vector(std::size_t index) const { return vectors_.col(static_cast<Eigen::Index>(index)); }

  const std::vector<std::string>& tokens() const { return tokens_; }
  const Eigen::MatrixXd& vectors() const { return vectors_; }

  friend bool operator==(const EmbeddingTable& a, const EmbeddingTable& b) {
    return a.dimension_ == b.dimension_ && a.tokens_ == b.tokens_ && a.vectors_ == b.vectors_;
  }

 private:
  std::size_t dimension_;
  std::vector<std::string> tokens_;
  Eigen::MatrixXd vectors_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct SkipGramConfig {
  std::size_t dimension = 100;
  std::size_t window = 5;
  std::size_t negatives = 5;
  std::size_t epochs = 5;
  std::size_t min_count = 2;
  std::uint64_t seed = 1;
  double learning_rate = 0.025;
};

// Skip-gram with negative sampling (unigram^0.75 noise distribution, linear
// learning-rate decay, randomly shrunk windows). Single-threaded and
// deterministic for a given seed and document order.
EmbeddingTable train_skipgram(const std::vector<Tokens>& documents, const SkipGramConfig& config);

// Text format: "<vocab_size> <d>" header, then "<token> <f1> ... <fd>" lines.
// Values are written with max_digits10 precision so a round trip is exact.
void save_embeddings(const EmbeddingTable& table, const std::filesystem::path& path);
EmbeddingTable load_embeddings(const std::filesystem::path& path);

struct DocVector {
  std::string id;
  Eigen::VectorXd values;
};

// d × r document matrix. Only the first effective_length columns are stored;
// columns at index >= effective_length are implicit zero padding.
struct DocMatrix {
  std::string id;
  Eigen::MatrixXd columns;
  std::size_t width = 0;

  std::size_t rows() const { return static_cast<std::size_t>(columns.rows()); }
  std::size_t effective_length() const { return static_cast<std::size_t>(columns.cols()); }
  Eigen::MatrixXd dense() const;
  // Column-major flattening of dense(), length d·r.
  Eigen::VectorXd flatten() const;
  static DocMatrix from_flat(std::string id, const Eigen::VectorXd& flat, std::size_t rows,
                             std::size_t width, std::size_t effective_length);
};

// Mean of the in-vocabulary word vectors; OOV tokens are skipped.
// Throws OutOfVocabularyError if no token is in the table.
DocVector doc_vector(const std::string& id, const Tokens& tokens, const EmbeddingTable& table);
DocVector doc_vector(const VirtualDocument& doc, const EmbeddingTable& table);

// First min(#in-vocab, r) in-vocabulary vectors, in order.
DocMatrix doc_matrix(const std::string& id, const Tokens& tokens, const EmbeddingTable& table,
                     std::size_t r);
DocMatrix doc_matrix(const VirtualDocument& doc, const EmbeddingTable& table, std::size_t r);

using SparseVector = Eigen::SparseVector<double>;

// tf = raw count, idf = ln(N / df), each document L2-normalised. Terms are
// indexed by lexicographic order of the fitted vocabulary.
class TfidfModel {
 public:
  // When `restrict_to` is given only those terms form the vocabulary.
  static TfidfModel fit(const std::vector<Tokens>& documents,
                        const std::vector<std::string>* restrict_to = nullptr);

  SparseVector transform(const Tokens& tokens) const;
  std::size_t dimension() const { return vocabulary_.size(); }
  const std::vector<std::string>& vocabulary() const { return vocabulary_; }
  const Eigen::VectorXd& idf() const { return idf_; }

 private:
  std::vector<std::string> vocabulary_;
  std::unordered_map<std::string, Eigen::Index> index_;
  Eigen::VectorXd idf_;
};

std::vector<SparseVector> tfidf_representation(const std::vector<Tokens>& documents);

// (top-n male tokens ∪ top-n female tokens) minus their intersection, sorted.
// Frequency ties are broken lexicographically.
std::vector<std::string> gender_keywords(const std::vector<VirtualDocument>& documents,
                                         std::size_t top_n);

}  // namespace srl
