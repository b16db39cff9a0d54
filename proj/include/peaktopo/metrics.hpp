#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "peaktopo/clustering.hpp"

namespace peaktopo {

using Label = std::int64_t;

/// Predicted clusters paired with ground-truth labels, one entry per point.
struct LabeledPartition {
  std::vector<ClusterId> predicted;
  std::vector<Label> truth;

  /// Drops halo points when `exclude_halo` is set.
  static LabeledPartition make(std::span<const ClusterId> predicted, std::span<const Label> truth,
                               const std::vector<bool>& halo = {},
                               bool exclude_halo = false);
  /// Sorted truth-label vocabulary.
  std::vector<Label> vocabulary() const;
  std::size_t size() const { return predicted.size(); }
};

/// Most frequent truth label per cluster, ties to the smaller label.
std::map<ClusterId, Label> majority_labels(const LabeledPartition& partition);

/// Predicted labels after replacing each cluster by its majority label.
std::vector<Label> relabel_by_majority(const LabeledPartition& partition,
                                       const std::map<ClusterId, Label>& majority);

struct ConfusionMatrix {
  std::vector<Label> labels;                      ///< row/column vocabulary
  std::vector<std::vector<std::size_t>> counts;   ///< [truth][majority-label]
  std::size_t total() const;
};

ConfusionMatrix confusion_matrix(const LabeledPartition& partition,
                                 const std::map<ClusterId, Label>& majority);

/// I(A;B) / sqrt(H(A) H(B)) with natural logarithms; 1 when both sides have
/// a single class, 0 when only one side does.
double nmi(std::span<const Label> a, std::span<const Label> b);

/// NMI between the truth and the raw cluster ids.
double nmi(const LabeledPartition& partition);

/// NMI between the truth and the majority-relabeled prediction.
double nmi_majority(const LabeledPartition& partition);

/// Fraction of `cluster` members carrying `label`.
double purity(const LabeledPartition& partition, ClusterId cluster, Label label);

struct ClusterPurity {
  ClusterId cluster = 0;
  std::size_t population = 0;
  Label majority = 0;
  double purity = 0.0;
};

std::vector<ClusterPurity> purity_table(const LabeledPartition& partition);

/// Truth file: `point_id<TAB>label` rows with ids 0..n-1 in order.
std::vector<Label> read_truth_tsv(std::istream& in, const std::string& source = "<stream>");
std::vector<Label> read_truth_tsv(const std::filesystem::path& path);
void write_truth_tsv(std::ostream& out, std::span<const Label> labels);

void write_confusion_tsv(std::ostream& out, const ConfusionMatrix& matrix);
void write_purity_tsv(std::ostream& out, const std::vector<ClusterPurity>& table);

}  // namespace peaktopo
