#include "peaktopo/neighbors_io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <fmt/format.h>

#include "peaktopo/errors.hpp"

namespace peaktopo {

namespace {

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot open '{}'", path.string()));
  return in;
}

bool is_blank(std::string_view line) {
  return line.find_first_not_of(" \t\r") == std::string_view::npos;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos < line.size()) {
    pos = line.find_first_not_of(" \t\r", pos);
    if (pos == std::string_view::npos) break;
    std::size_t end = line.find_first_of(" \t\r", pos);
    if (end == std::string_view::npos) end = line.size();
    out.push_back(line.substr(pos, end - pos));
    pos = end;
  }
  return out;
}

template <typename T>
T parse_field(std::string_view field, const std::string& source, std::size_t line_no) {
  T value{};
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size())
    throw DataError(fmt::format("{}:{}: cannot parse '{}'", source, line_no, field));
  return value;
}

std::vector<std::vector<double>> read_real_rows(std::istream& in, const std::string& source,
                                                bool allow_header) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    if (allow_header && rows.empty() && line.front() == '#') continue;
    std::vector<double> row;
    for (auto f : split_fields(line)) row.push_back(parse_field<double>(f, source, line_no));
    if (!rows.empty() && row.size() != rows.front().size())
      throw DataError(fmt::format("{}:{}: expected {} columns, found {}", source, line_no,
                                  rows.front().size(), row.size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError(fmt::format("{}: empty input", source));
  return rows;
}

}  // namespace

PointSet read_points_tsv(std::istream& in, const std::string& source) {
  auto rows = read_real_rows(in, source, true);
  PointSet points(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    std::copy(rows[i].begin(), rows[i].end(), points.row(i).begin());
  validate(points);
  return points;
}

PointSet read_points_tsv(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_points_tsv(in, path.string());
}

void write_points_tsv(std::ostream& out, const PointSet& points) {
  for (std::size_t i = 0; i < points.n_points; ++i) {
    auto row = points.row(i);
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "\t" : "") << fmt::format("{}", row[c]);
    out << '\n';
  }
}

DistanceMatrix read_distance_matrix_tsv(std::istream& in, const std::string& source) {
  auto rows = read_real_rows(in, source, true);
  const std::size_t n = rows.size();
  if (rows.front().size() != n)
    throw DataError(fmt::format("{}: distance matrix has {} rows but {} columns", source, n,
                                rows.front().size()));
  std::vector<double> values;
  values.reserve(n * n);
  for (auto& r : rows) values.insert(values.end(), r.begin(), r.end());
  DistanceMatrix matrix(n, std::move(values));
  matrix.validate();
  return matrix;
}

DistanceMatrix read_distance_matrix_tsv(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_distance_matrix_tsv(in, path.string());
}

NeighborGraph read_knn_tsv(std::istream& in, const std::string& source) {
  std::vector<PointId> ids;
  std::vector<double> dists;
  std::size_t k_max = 0;
  std::size_t current = 0;
  std::size_t in_group = 0;
  bool any = false;
  std::string metric_tag = "knn-file";

  auto close_group = [&](std::size_t line_no) {
    if (k_max == 0) k_max = in_group;
    if (in_group != k_max)
      throw DataError(fmt::format("{}:{}: point {} has {} neighbors, expected {}", source, line_no,
                                  current, in_group, k_max));
  };

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    if (line.front() == '#') {
      constexpr std::string_view kTag = "# metric=";
      if (line.starts_with(kTag)) metric_tag = line.substr(kTag.size());
      continue;
    }
    auto fields = split_fields(line);
    if (fields.size() != 3)
      throw DataError(fmt::format("{}:{}: expected 3 columns (point_id, neighbor_id, distance), "
                                  "found {}",
                                  source, line_no, fields.size()));
    auto point = parse_field<std::size_t>(fields[0], source, line_no);
    auto nb = parse_field<PointId>(fields[1], source, line_no);
    auto d = parse_field<double>(fields[2], source, line_no);
    if (!any) {
      if (point != 0)
        throw DataError(fmt::format("{}:{}: first group must be point 0", source, line_no));
      any = true;
    } else if (point != current) {
      if (point != current + 1)
        throw DataError(fmt::format("{}:{}: point {} out of order after {}", source, line_no,
                                    point, current));
      close_group(line_no);
      current = point;
      in_group = 0;
    } else if (d < dists.back() || (d == dists.back() && nb <= ids.back())) {
      throw DataError(fmt::format("{}:{}: neighbor list of point {} is not sorted by "
                                  "(distance, id)",
                                  source, line_no, point));
    }
    ids.push_back(nb);
    dists.push_back(d);
    ++in_group;
  }
  if (!any) throw DataError(fmt::format("{}: empty input", source));
  close_group(line_no);
  const std::size_t n = current + 1;
  try {
    return NeighborGraph(n, k_max, std::move(ids), std::move(dists), metric_tag);
  } catch (const DataError& e) {
    throw DataError(fmt::format("{}: {}", source, e.what()));
  }
}

NeighborGraph ingest_knn_file(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_knn_tsv(in, path.string());
}

void write_knn_tsv(std::ostream& out, const NeighborGraph& graph) {
  out << "# metric=" << graph.metric_tag() << '\n';
  for (std::size_t i = 0; i < graph.n_points(); ++i) {
    auto ids = graph.ids(i);
    auto d = graph.dists(i);
    for (std::size_t l = 0; l < graph.k_max(); ++l) out << fmt::format("{}\t{}\t{}\n", i, ids[l], d[l]);
  }
}

}  // namespace peaktopo
