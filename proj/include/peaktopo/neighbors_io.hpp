#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "peaktopo/neighbors.hpp"

namespace peaktopo {

/// Coordinates: one point per row, whitespace-separated columns, optional
/// leading header lines starting with '#'.
PointSet read_points_tsv(std::istream& in, const std::string& source = "<stream>");
PointSet read_points_tsv(const std::filesystem::path& path);
void write_points_tsv(std::ostream& out, const PointSet& points);

/// n rows of n distances.
DistanceMatrix read_distance_matrix_tsv(std::istream& in, const std::string& source = "<stream>");
DistanceMatrix read_distance_matrix_tsv(const std::filesystem::path& path);

/// Rows `point_id<TAB>neighbor_id<TAB>distance`, grouped by point_id in
/// ascending order and distance-sorted within each group.
NeighborGraph read_knn_tsv(std::istream& in, const std::string& source = "<stream>");
NeighborGraph ingest_knn_file(const std::filesystem::path& path);
void write_knn_tsv(std::ostream& out, const NeighborGraph& graph);

}  // namespace peaktopo
