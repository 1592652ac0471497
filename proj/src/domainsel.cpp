#include "srl/domainsel.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <optional>
#include <sstream>
#include <unordered_set>

#include "srl/error.hpp"

namespace srl {

LabeledDomainSet make_labeled_set(const std::vector<SourceReview>& reviews, const EmbeddingTable& table,
                                  std::size_t r, Provenance provenance) {
  LabeledDomainSet out;
  out.items.reserve(reviews.size());
  std::size_t skipped = 0;
  for (const auto& rev : reviews) {
    try {
      LabeledItem item{rev.review_id,
                       doc_matrix(rev.review_id, rev.tokens, table, r),
                       doc_vector(rev.review_id, rev.tokens, table),
                       rev.polarity,
                       provenance,
                       rev.user_id};
      out.items.push_back(std::move(item));
    } catch (const OutOfVocabularyError&) {
      ++skipped;
    }
  }
  if (skipped > 0) spdlog::warn("skipped {} reviews with no in-vocabulary tokens", skipped);
  return out;
}

void SimilarityConfig::validate() const {
  if (!(threshold > 0.0 && threshold < 1.0))
    throw ConfigError("similarity threshold must lie in (0, 1)");
}

double cosine(const Eigen::Ref<const Eigen::VectorXd>& u, const Eigen::Ref<const Eigen::VectorXd>& v) {
  if (u.size() != v.size())
    throw ShapeError("cosine: length mismatch " + std::to_string(u.size()) + " vs " +
                     std::to_string(v.size()));
  const double nu = u.norm();
  const double nv = v.norm();
  if (nu == 0.0 || nv == 0.0) return 0.0;
  return std::clamp(u.dot(v) / (nu * nv), -1.0, 1.0);
}

double avg_similarity(const Eigen::Ref<const Eigen::VectorXd>& source,
                      const std::vector<DocVector>& targets) {
  if (targets.empty()) throw DataError("avg_similarity: empty target set");
  double sum = 0.0;
  for (const auto& t : targets) sum += cosine(source, t.values);
  return sum / static_cast<double>(targets.size());
}

SelectionResult select_source(const LabeledDomainSet& source, const std::vector<DocVector>& targets,
                              const SimilarityConfig& config) {
  config.validate();
  if (targets.empty()) throw DataError("select_source: empty target set");
  // mean_i cos(v, t_i) == (v / |v|) · mean_i (t_i / |t_i|)
  const auto dim = targets.front().values.size();
  Eigen::VectorXd centroid = Eigen::VectorXd::Zero(dim);
  for (const auto& t : targets) {
    if (t.values.size() != dim) throw ShapeError("select_source: target vector length mismatch");
    const double n = t.values.norm();
    if (n > 0.0) centroid += t.values / n;
  }
  centroid /= static_cast<double>(targets.size());

  SelectionResult res;
  res.total = source.size();
  res.scores.reserve(source.size());
  for (const auto& item : source.items) {
    const auto& v = item.vector.values;
    if (v.size() != dim) throw ShapeError("select_source: source vector length mismatch");
    const double n = v.norm();
    const double score = n > 0.0 ? v.dot(centroid) / n : 0.0;
    res.scores.push_back(score);
    if (score > config.threshold) res.selected.items.push_back(item);
  }
  res.kept = res.selected.size();
  if (res.selected.empty()) {
    std::ostringstream msg;
    msg << "no source item has average similarity above " << config.threshold
        << "; try a lower threshold";
    throw EmptySelectionError(msg.str());
  }
  spdlog::info("source selection kept {}/{} items (z = {})", res.kept, res.total, config.threshold);
  return res;
}

LabeledDomainSet augment_with_manual(const LabeledDomainSet& source, const LabeledDomainSet& manual) {
  LabeledDomainSet out = source;
  std::unordered_set<std::string> ids;
  for (const auto& it : source.items) ids.insert(it.id);
  std::optional<std::pair<std::size_t, std::size_t>> shape;
  if (!source.empty()) shape.emplace(source.items.front().matrix.rows(), source.items.front().matrix.width);
  for (const auto& it : manual.items) {
    const std::pair<std::size_t, std::size_t> s{it.matrix.rows(), it.matrix.width};
    if (shape && s != *shape)
      throw ShapeError("manual item '" + it.id + "' has matrix shape " + std::to_string(s.first) + "x" +
                       std::to_string(s.second) + ", source uses " + std::to_string(shape->first) + "x" +
                       std::to_string(shape->second));
    if (!ids.insert(it.id).second) throw DuplicateKeyError("manual item duplicates id '" + it.id + "'");
    shape = s;
    out.items.push_back(it);
  }
  return out;
}

}  // namespace srl
