#include "peaktopo/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <fmt/format.h>

#include "peaktopo/errors.hpp"

namespace peaktopo {

LabeledPartition LabeledPartition::make(std::span<const ClusterId> predicted,
                                        std::span<const Label> truth,
                                        const std::vector<bool>& halo,
                                        bool exclude_halo) {
  if (predicted.size() != truth.size())
    throw DataError(fmt::format("prediction has {} points but truth has {}", predicted.size(),
                                truth.size()));
  if (exclude_halo && halo.size() != predicted.size())
    throw ConfigError("halo exclusion requested without per-point halo flags");
  LabeledPartition p;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (exclude_halo && halo[i]) continue;
    p.predicted.push_back(predicted[i]);
    p.truth.push_back(truth[i]);
  }
  return p;
}

std::vector<Label> LabeledPartition::vocabulary() const {
  std::vector<Label> v(truth.begin(), truth.end());
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

std::map<ClusterId, Label> majority_labels(const LabeledPartition& partition) {
  std::map<ClusterId, std::map<Label, std::size_t>> counts;
  for (std::size_t i = 0; i < partition.size(); ++i) ++counts[partition.predicted[i]][partition.truth[i]];
  std::map<ClusterId, Label> out;
  for (const auto& [cluster, hist] : counts) {
    // map iterates labels ascending, so strict > keeps the smaller label on ties
    auto best = hist.begin();
    for (auto it = hist.begin(); it != hist.end(); ++it)
      if (it->second > best->second) best = it;
    out[cluster] = best->first;
  }
  return out;
}

std::vector<Label> relabel_by_majority(const LabeledPartition& partition,
                                       const std::map<ClusterId, Label>& majority) {
  std::vector<Label> out(partition.size());
  for (std::size_t i = 0; i < partition.size(); ++i) out[i] = majority.at(partition.predicted[i]);
  return out;
}

std::size_t ConfusionMatrix::total() const {
  std::size_t t = 0;
  for (const auto& row : counts)
    for (std::size_t c : row) t += c;
  return t;
}

ConfusionMatrix confusion_matrix(const LabeledPartition& partition,
                                 const std::map<ClusterId, Label>& majority) {
  ConfusionMatrix m;
  m.labels = partition.vocabulary();
  m.counts.assign(m.labels.size(), std::vector<std::size_t>(m.labels.size(), 0));
  auto index = [&](Label l) {
    return static_cast<std::size_t>(std::lower_bound(m.labels.begin(), m.labels.end(), l) - m.labels.begin());
  };
  for (std::size_t i = 0; i < partition.size(); ++i)
    ++m.counts[index(partition.truth[i])][index(majority.at(partition.predicted[i]))];
  return m;
}

double nmi(std::span<const Label> a, std::span<const Label> b) {
  if (a.size() != b.size()) throw DataError("NMI: labelings differ in length");
  if (a.empty()) throw DataError("NMI: empty labeling");
  std::map<Label, std::size_t> ca, cb;
  std::map<std::pair<Label, Label>, std::size_t> joint;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ++ca[a[i]];
    ++cb[b[i]];
    ++joint[{a[i], b[i]}];
  }
  const auto n = static_cast<double>(a.size());
  auto entropy = [n](const auto& counts) {
    double h = 0.0;
    for (const auto& [k, c] : counts) {
      const double p = static_cast<double>(c) / n;
      h -= p * std::log(p);
    }
    return h;
  };
  if (ca.size() == 1 && cb.size() == 1) return 1.0;
  if (ca.size() == 1 || cb.size() == 1) return 0.0;
  double mi = 0.0;
  for (const auto& [key, c] : joint) {
    const double nij = static_cast<double>(c);
    mi += nij / n *
          std::log(nij * n / (static_cast<double>(ca[key.first]) * static_cast<double>(cb[key.second])));
  }
  const double value = mi / std::sqrt(entropy(ca) * entropy(cb));
  return std::clamp(value, 0.0, 1.0);
}

double nmi(const LabeledPartition& partition) {
  std::vector<Label> pred(partition.predicted.begin(), partition.predicted.end());
  return nmi(partition.truth, pred);
}

double nmi_majority(const LabeledPartition& partition) {
  return nmi(partition.truth, relabel_by_majority(partition, majority_labels(partition)));
}

double purity(const LabeledPartition& partition, ClusterId cluster, Label label) {
  std::size_t members = 0, hits = 0;
  for (std::size_t i = 0; i < partition.size(); ++i) {
    if (partition.predicted[i] != cluster) continue;
    ++members;
    if (partition.truth[i] == label) ++hits;
  }
  if (members == 0) throw DataError(fmt::format("purity of empty cluster {}", cluster));
  return static_cast<double>(hits) / static_cast<double>(members);
}

std::vector<ClusterPurity> purity_table(const LabeledPartition& partition) {
  std::vector<ClusterPurity> out;
  std::map<ClusterId, std::size_t> population;
  for (ClusterId c : partition.predicted) ++population[c];
  for (const auto& [cluster, label] : majority_labels(partition))
    out.push_back({cluster, population[cluster], label, purity(partition, cluster, label)});
  return out;
}

std::vector<Label> read_truth_tsv(std::istream& in, const std::string& source) {
  std::vector<Label> labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line.front() == '#' || line.starts_with("point_id")) continue;
    std::size_t id = 0;
    Label label = 0;
    const char* p = line.data();
    const char* end = line.data() + line.size();
    auto r1 = std::from_chars(p, end, id);
    const char* q = r1.ptr;
    while (q < end && (*q == '\t' || *q == ' ')) ++q;
    auto r2 = std::from_chars(q, end, label);
    const char* tail = r2.ptr;
    while (tail < end && (*tail == '\r' || *tail == ' ' || *tail == '\t')) ++tail;
    if (r1.ec != std::errc() || q == r1.ptr || r2.ec != std::errc() || tail != end)
      throw DataError(fmt::format("{}:{}: expected 'point_id<TAB>label'", source, line_no));
    if (id != labels.size())
      throw DataError(fmt::format("{}:{}: expected point {}, found {}", source, line_no,
                                  labels.size(), id));
    labels.push_back(label);
  }
  if (labels.empty()) throw DataError(fmt::format("{}: empty truth file", source));
  return labels;
}

std::vector<Label> read_truth_tsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot open '{}'", path.string()));
  return read_truth_tsv(in, path.string());
}

void write_truth_tsv(std::ostream& out, std::span<const Label> labels) {
  for (std::size_t i = 0; i < labels.size(); ++i) out << i << '\t' << labels[i] << '\n';
}

void write_confusion_tsv(std::ostream& out, const ConfusionMatrix& m) {
  out << "truth\\predicted";
  for (Label l : m.labels) out << '\t' << l;
  out << '\n';
  for (std::size_t r = 0; r < m.labels.size(); ++r) {
    out << m.labels[r];
    for (std::size_t c : m.counts[r]) out << '\t' << c;
    out << '\n';
  }
}

void write_purity_tsv(std::ostream& out, const std::vector<ClusterPurity>& table) {
  out << "cluster\tpopulation\tmajority_label\tpurity\n";
  for (const auto& row : table)
    out << fmt::format("{}\t{}\t{}\t{}\n", row.cluster, row.population, row.majority, row.purity);
}

}  // namespace peaktopo
