#pragma once

#include <Eigen/Core>
#include <vector>

#include "srl/corpus.hpp"
#include "srl/embed.hpp"

namespace srl {

enum class Provenance { source, manual_target };

struct LabeledItem {
  std::string id;
  DocMatrix matrix;
  DocVector vector;
  Polarity polarity = Polarity::negative;
  Provenance provenance = Provenance::source;
  std::string user_id;  // originating target user for manual labels
};

struct LabeledDomainSet {
  std::vector<LabeledItem> items;
  std::size_t size() const { return items.size(); }
  bool empty() const { return items.empty(); }
};

// Vectorises reviews into matrices of width r and averaged vectors. Reviews
// with no in-vocabulary token are skipped with a warning.
LabeledDomainSet make_labeled_set(const std::vector<SourceReview>& reviews, const EmbeddingTable& table,
                                  std::size_t r, Provenance provenance);

struct SimilarityConfig {
  double threshold = 0.25;
  void validate() const;  // 0 < threshold < 1
};

// u·v / (|u||v|), or 0 when either vector has zero norm.
double cosine(const Eigen::Ref<const Eigen::VectorXd>& u, const Eigen::Ref<const Eigen::VectorXd>& v);

// Mean cosine between `source` and every target vector.
double avg_similarity(const Eigen::Ref<const Eigen::VectorXd>& source,
                      const std::vector<DocVector>& targets);

struct SelectionResult {
  LabeledDomainSet selected;
  std::vector<double> scores;  // average similarity per input item
  std::size_t kept = 0;
  std::size_t total = 0;
};

// Keeps, in input order, the items whose average similarity strictly exceeds
// the threshold. Throws EmptySelectionError when nothing survives.
SelectionResult select_source(const LabeledDomainSet& source, const std::vector<DocVector>& targets,
                              const SimilarityConfig& config);

// Union of the two sets; ids must be disjoint and matrix shapes must agree.
LabeledDomainSet augment_with_manual(const LabeledDomainSet& source, const LabeledDomainSet& manual);

}  // namespace srl
