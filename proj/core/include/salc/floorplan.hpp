#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "salc/common.hpp"

namespace salc {

struct Cell {
  int col = 0;
  int row = 0;
  friend bool operator==(Cell, Cell) = default;
};

/// Occupancy grid. Row 0 is the bottom of the map (y grows upwards); cells
/// outside the grid count as obstacles.
class FloorMap {
 public:
  FloorMap(double width_m, double height_m, double resolution, std::vector<std::uint8_t> obstacle);

  /// Text format: header line `width_m height_m resolution`, then one line
  /// per grid row from the top of the map down, `#` obstacle and `.` walkable.
  static FloorMap parse(std::istream& in);
  static FloorMap load(const std::filesystem::path& path);
  void write(std::ostream& out) const;

  double width_m() const { return width_m_; }
  double height_m() const { return height_m_; }
  double resolution() const { return resolution_; }
  int cols() const { return cols_; }
  int rows() const { return rows_; }

  bool in_bounds(Cell c) const { return c.col >= 0 && c.row >= 0 && c.col < cols_ && c.row < rows_; }
  bool obstacle(Cell c) const;
  bool walkable(Cell c) const { return !obstacle(c); }
  bool walkable(Point p) const;
  Point center(Cell c) const;
  Cell cell_at(Point p) const;
  std::size_t index(Cell c) const { return static_cast<std::size_t>(c.row) * cols_ + c.col; }

 private:
  double width_m_;
  double height_m_;
  double resolution_;
  int cols_;
  int rows_;
  std::vector<std::uint8_t> obstacle_;
};

struct SkeletonEdge {
  std::size_t v = 0;
  std::size_t w = 0;
  double length_m = 0.0;
  // Intermediate skeleton points between v and w; length_m is the polyline
  // length through them.
  std::vector<Point> via;
};

/// Medial-axis graph. Edges are stored once and are undirected.
struct Skeleton {
  std::vector<Point> vertices;
  std::vector<SkeletonEdge> edges;

  std::size_t vertex_count() const { return vertices.size(); }
};

struct SkeletonOptions {
  // Two adjacent cells are on opposite sides of a ridge when their nearest
  // obstacles subtend at least this angle.
  double angle_threshold_deg = 90.0;
  // Keep every n-th cell of a skeleton chain as a vertex.
  int vertex_stride = 3;
};

Skeleton build_skeleton(const FloorMap& map, const SkeletonOptions& options = {});

/// Skeleton cells before subsampling (after thinning and gap repair).
std::vector<Cell> skeleton_cells(const FloorMap& map, const SkeletonOptions& options = {});

/// All-pairs shortest path lengths over skeleton edges; unreachable pairs
/// hold kInfinity.
class SspMatrix {
 public:
  SspMatrix() = default;
  explicit SspMatrix(Matrix d) : d_(std::move(d)) {}

  std::size_t size() const { return static_cast<std::size_t>(d_.rows()); }
  double operator()(std::size_t v, std::size_t w) const { return d_(v, w); }
  const Matrix& matrix() const { return d_; }

 private:
  Matrix d_;
};

SspMatrix shortest_path_matrix(const Skeleton& skeleton);

/// Euclidean-nearest skeleton vertex; ties go to the lowest index.
std::size_t nearest_vertex(Point p, const Skeleton& skeleton);

/// Skeleton-based shortest path distance between reference points i and j.
double ssp_distance(std::size_t i, std::size_t j, std::span<const Point> rps, const Skeleton& skeleton,
                    const SspMatrix& d);

/// ssp_distance for every pair, sharing the nearest-vertex lookups.
Matrix ssp_distance_matrix(std::span<const Point> rps, const Skeleton& skeleton, const SspMatrix& d);

/// Line-list export: `v x y` per vertex, `e v w length` per edge.
void write_skeleton(std::ostream& out, const Skeleton& skeleton);
Skeleton read_skeleton(std::istream& in);

}  // namespace salc
