#include "srl/embed.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "srl/error.hpp"

namespace srl {

EmbeddingTable::EmbeddingTable(std::vector<std::string> tokens, Eigen::MatrixXd vectors)
    : dimension_(static_cast<std::size_t>(vectors.rows())),
      tokens_(std::move(tokens)),
      vectors_(std::move(vectors)) {
  if (static_cast<std::size_t>(vectors_.cols()) != tokens_.size())
    throw ShapeError("embedding table: token count does not match vector count");
  if (!vectors_.allFinite()) throw DataError("embedding table contains NaN/Inf");
  index_.reserve(tokens_.size());
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], i).second)
      throw DuplicateKeyError("duplicate embedding token '" + tokens_[i] + "'");
  }
}

std::optional<std::size_t> EmbeddingTable::find(const std::string& token) const {
  auto it = index_.find(token);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

namespace {

double sigmoid(double x) {
  if (x > 30) return 1.0;
  if (x < -30) return 0.0;
  return 1.0 / (1.0 + std::exp(-x));
}

}  // namespace

EmbeddingTable train_skipgram(const std::vector<Tokens>& documents, const SkipGramConfig& config) {
  if (documents.empty()) throw DataError("skip-gram: empty corpus");
  if (config.dimension == 0) throw ConfigError("skip-gram: dimension must be >= 1");
  if (config.epochs == 0) throw ConfigError("skip-gram: epochs must be >= 1");

  std::unordered_map<std::string, std::size_t> counts;
  for (const auto& doc : documents)
    for (const auto& t : doc) ++counts[t];

  std::vector<std::pair<std::string, std::size_t>> vocab;
  for (const auto& [tok, n] : counts)
    if (n >= config.min_count) vocab.emplace_back(tok, n);
  if (vocab.empty())
    throw DataError("skip-gram: no token reaches min_count " + std::to_string(config.min_count));
  std::sort(vocab.begin(), vocab.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });

  std::unordered_map<std::string, int> ids;
  std::vector<std::string> tokens;
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    ids.emplace(vocab[i].first, static_cast<int>(i));
    tokens.push_back(vocab[i].first);
  }

  std::vector<std::vector<int>> corpus;
  corpus.reserve(documents.size());
  std::size_t total_words = 0;
  for (const auto& doc : documents) {
    std::vector<int> ids_doc;
    for (const auto& t : doc)
      if (auto it = ids.find(t); it != ids.end()) ids_doc.push_back(it->second);
    total_words += ids_doc.size();
    corpus.push_back(std::move(ids_doc));
  }

  // Noise distribution table.
  const std::size_t table_size = std::max<std::size_t>(1'000'000 / 10, vocab.size() * 100);
  std::vector<int> noise(table_size);
  {
    double norm = 0;
    for (const auto& v : vocab) norm += std::pow(static_cast<double>(v.second), 0.75);
    std::size_t w = 0;
    double cum = std::pow(static_cast<double>(vocab[0].second), 0.75) / norm;
    for (std::size_t a = 0; a < table_size; ++a) {
      noise[a] = static_cast<int>(w);
      if (static_cast<double>(a + 1) / static_cast<double>(table_size) > cum && w + 1 < vocab.size()) {
        ++w;
        cum += std::pow(static_cast<double>(vocab[w].second), 0.75) / norm;
      }
    }
  }

  const auto d = static_cast<Eigen::Index>(config.dimension);
  const auto V = static_cast<Eigen::Index>(vocab.size());
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> init(-0.5 / static_cast<double>(d),
                                              0.5 / static_cast<double>(d));
  Eigen::MatrixXd input(d, V);
  for (Eigen::Index j = 0; j < V; ++j)
    for (Eigen::Index i = 0; i < d; ++i) input(i, j) = init(rng);
  Eigen::MatrixXd output = Eigen::MatrixXd::Zero(d, V);

  std::uniform_int_distribution<std::size_t> pick_noise(0, table_size - 1);
  std::uniform_int_distribution<std::size_t> shrink(0, std::max<std::size_t>(config.window, 1) - 1);
  const double total = static_cast<double>(std::max<std::size_t>(total_words * config.epochs, 1));
  const double min_lr = config.learning_rate * 1e-4;
  std::size_t processed = 0;
  Eigen::VectorXd grad(d);

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    for (const auto& doc : corpus) {
      const auto n = static_cast<std::ptrdiff_t>(doc.size());
      for (std::ptrdiff_t pos = 0; pos < n; ++pos, ++processed) {
        const double lr = std::max(min_lr, config.learning_rate * (1.0 - processed / total));
        const auto span = static_cast<std::ptrdiff_t>(config.window - shrink(rng));
        const int center = doc[static_cast<std::size_t>(pos)];
        for (std::ptrdiff_t c = pos - span; c <= pos + span; ++c) {
          if (c == pos || c < 0 || c >= n) continue;
          const int context = doc[static_cast<std::size_t>(c)];
          auto in_vec = input.col(context);
          grad.setZero();
          for (std::size_t s = 0; s <= config.negatives; ++s) {
            int target;
            double label;
            if (s == 0) {
              target = center;
              label = 1.0;
            } else {
              target = noise[pick_noise(rng)];
              if (target == center) continue;
              label = 0.0;
            }
            auto out_vec = output.col(target);
            const double g = (label - sigmoid(in_vec.dot(out_vec))) * lr;
            grad.noalias() += g * out_vec;
            out_vec.noalias() += g * in_vec;
          }
          in_vec += grad;
        }
      }
    }
  }
  return EmbeddingTable(std::move(tokens), std::move(input));
}

void save_embeddings(const EmbeddingTable& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << table.size() << ' ' << table.dimension() << '\n';
  char buf[64];
  for (std::size_t i = 0; i < table.size(); ++i) {
    out << table.tokens()[i];
    const auto v = table.vector(i);
    for (Eigen::Index k = 0; k < v.size(); ++k) {
      std::snprintf(buf, sizeof buf, " %.17g", v(k));
      out << buf;
    }
    out << '\n';
  }
}

EmbeddingTable load_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path.string() + ": missing header");
  std::size_t vocab_size = 0, dim = 0;
  {
    std::istringstream hs(line);
    if (!(hs >> vocab_size >> dim) || dim == 0)
      throw FormatError(path.string() + ": line 1: expected '<vocab_size> <d>'");
  }
  std::vector<std::string> tokens;
  std::vector<double> values;
  tokens.reserve(vocab_size);
  values.reserve(vocab_size * dim);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto sp = line.find(' ');
    if (sp == std::string::npos || sp == 0)
      throw FormatError(path.string() + ": line " + std::to_string(line_no) + ": missing vector");
    tokens.push_back(line.substr(0, sp));
    const char* p = line.data() + sp;
    const char* end = line.data() + line.size();
    std::size_t n = 0;
    while (p < end) {
      while (p < end && *p == ' ') ++p;
      if (p == end) break;
      double x;
      auto [next, ec] = std::from_chars(p, end, x);
      if (ec != std::errc() || !std::isfinite(x))
        throw FormatError(path.string() + ": line " + std::to_string(line_no) + ": bad number");
      values.push_back(x);
      ++n;
      p = next;
    }
    if (n != dim)
      throw FormatError(path.string() + ": line " + std::to_string(line_no) + ": expected " +
                        std::to_string(dim) + " values, got " + std::to_string(n));
  }
  if (tokens.size() != vocab_size)
    throw FormatError(path.string() + ": header declares " + std::to_string(vocab_size) +
                      " entries, found " + std::to_string(tokens.size()));
  Eigen::MatrixXd m = Eigen::Map<Eigen::MatrixXd>(values.data(), static_cast<Eigen::Index>(dim),
                                                  static_cast<Eigen::Index>(tokens.size()));
  return EmbeddingTable(std::move(tokens), std::move(m));
}

Eigen::MatrixXd DocMatrix::dense() const {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(columns.rows(), static_cast<Eigen::Index>(width));
  m.leftCols(columns.cols()) = columns;
  return m;
}

Eigen::VectorXd DocMatrix::flatten() const {
  Eigen::MatrixXd m = dense();
  return Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
}

DocMatrix DocMatrix::from_flat(std::string id, const Eigen::VectorXd& flat, std::size_t rows,
                               std::size_t width, std::size_t effective_length) {
  if (static_cast<std::size_t>(flat.size()) != rows * width)
    throw ShapeError("DocMatrix::from_flat: size mismatch");
  if (effective_length > width) throw ShapeError("DocMatrix::from_flat: effective length > width");
  DocMatrix out;
  out.id = std::move(id);
  out.width = width;
  out.columns = Eigen::Map<const Eigen::MatrixXd>(flat.data(), static_cast<Eigen::Index>(rows),
                                                  static_cast<Eigen::Index>(effective_length));
  return out;
}

DocVector doc_vector(const std::string& id, const Tokens& tokens, const EmbeddingTable& table) {
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(table.dimension()));
  std::size_t n = 0;
  for (const auto& t : tokens) {
    if (auto i = table.find(t)) {
      sum += table.vector(*i);
      ++n;
    }
  }
  if (n == 0) throw OutOfVocabularyError("document '" + id + "' has no in-vocabulary tokens");
  return {id, sum / static_cast<double>(n)};
}

DocVector doc_vector(const VirtualDocument& doc, const EmbeddingTable& table) {
  return doc_vector(doc.user_id, doc.tokens, table);
}

DocMatrix doc_matrix(const std::string& id, const Tokens& tokens, const EmbeddingTable& table,
                     std::size_t r) {
  if (r == 0) throw ConfigError("doc_matrix: r must be >= 1");
  std::vector<std::size_t> cols;
  for (const auto& t : tokens) {
    if (cols.size() == r) break;
    if (auto i = table.find(t)) cols.push_back(*i);
  }
  if (cols.empty()) throw OutOfVocabularyError("document '" + id + "' has no in-vocabulary tokens");
  DocMatrix m;
  m.id = id;
  m.width = r;
  m.columns.resize(static_cast<Eigen::Index>(table.dimension()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) m.columns.col(static_cast<Eigen::Index>(j)) = table.vector(cols[j]);
  return m;
}

DocMatrix doc_matrix(const VirtualDocument& doc, const EmbeddingTable& table, std::size_t r) {
  return doc_matrix(doc.user_id, doc.tokens, table, r);
}

TfidfModel TfidfModel::fit(const std::vector<Tokens>& documents,
                           const std::vector<std::string>* restrict_to) {
  if (documents.empty()) throw DataError("tf-idf: no documents");
  std::map<std::string, std::size_t> df;
  for (const auto& doc : documents) {
    std::vector<std::string> uniq(doc.begin(), doc.end());
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    for (auto& t : uniq) ++df[t];
  }
  if (restrict_to) {
    std::map<std::string, std::size_t> kept;
    for (const auto& t : *restrict_to)
      if (auto it = df.find(t); it != df.end()) kept.insert(*it);
    df = std::move(kept);
  }
  TfidfModel m;
  m.idf_.resize(static_cast<Eigen::Index>(df.size()));
  const double N = static_cast<double>(documents.size());
  Eigen::Index k = 0;
  for (const auto& [term, count] : df) {
    m.vocabulary_.push_back(term);
    m.index_.emplace(term, k);
    m.idf_(k++) = std::log(N / static_cast<double>(count));
  }
  if (m.idf_.size() == 0 || m.idf_.cwiseAbs().maxCoeff() == 0.0)
    spdlog::warn("tf-idf: every idf weight is zero; all document vectors will be zero");
  return m;
}

SparseVector TfidfModel::transform(const Tokens& tokens) const {
  std::map<Eigen::Index, double> tf;
  for (const auto& t : tokens)
    if (auto it = index_.find(t); it != index_.end()) tf[it->second] += 1.0;
  SparseVector v(static_cast<Eigen::Index>(vocabulary_.size()));
  for (const auto& [i, count] : tf) {
    const double w = count * idf_(i);
    if (w != 0.0) v.insert(i) = w;
  }
  const double norm = v.norm();
  if (norm > 0) v /= norm;
  return v;
}

std::vector<SparseVector> tfidf_representation(const std::vector<Tokens>& documents) {
  const auto model = TfidfModel::fit(documents);
  std::vector<SparseVector> out;
  out.reserve(documents.size());
  for (const auto& d : documents) out.push_back(model.transform(d));
  return out;
}

namespace {

std::vector<std::string> top_tokens(const std::unordered_map<std::string, std::size_t>& counts,
                                    std::size_t n) {
  std::vector<std::pair<std::string, std::size_t>> v(counts.begin(), counts.end());
  std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  if (v.size() > n) v.resize(n);
  std::vector<std::string> out;
  for (auto& p : v) out.push_back(std::move(p.first));
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

std::vector<std::string> gender_keywords(const std::vector<VirtualDocument>& documents,
                                         std::size_t top_n) {
  std::unordered_map<std::string, std::size_t> male, female;
  for (const auto& d : documents) {
    auto& counts = d.gender == Gender::male ? male : female;
    for (const auto& t : d.tokens) ++counts[t];
  }
  if (male.empty() || female.empty())
    throw DataError("gender_keywords: both genders must be present");
  const auto m = top_tokens(male, top_n);
  const auto f = top_tokens(female, top_n);
  std::vector<std::string> out;
  std::set_symmetric_difference(m.begin(), m.end(), f.begin(), f.end(), std::back_inserter(out));
  return out;
}

}  // namespace srl
