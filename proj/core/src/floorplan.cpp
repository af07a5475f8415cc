#include "salc/floorplan.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <queue>
#include <sstream>
#include <string>

namespace salc {
namespace {

constexpr std::array<Cell, 8> kNeighbors8{{{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {1, -1}, {-1, 1}, {-1, -1}}};

int integral_cells(double extent, double resolution, const char* what) {
  const double n = extent / resolution;
  const double rounded = std::round(n);
  require(std::abs(n - rounded) < 1e-6, std::string("map ") + what + " is not a whole number of cells");
  require(rounded >= 2, std::string("map ") + what + " must span at least 2 cells");
  return static_cast<int>(rounded);
}

Cell shifted(Cell c, Cell d) { return {c.col + d.col, c.row + d.row}; }

// Nearest-obstacle feature transform over walkable cells. Obstacle sites are
// the obstacle cells (including the virtual ring outside the grid) that touch
// walkable space.
struct FeatureField {
  std::vector<Point> feature;  // nearest site centre per cell
  std::vector<double> clearance;
};

FeatureField feature_transform(const FloorMap& map) {
  std::vector<Point> sites;
  for (int r = -1; r <= map.rows(); ++r) {
    for (int c = -1; c <= map.cols(); ++c) {
      const Cell cell{c, r};
      if (!map.obstacle(cell)) continue;
      const bool touches = std::any_of(kNeighbors8.begin(), kNeighbors8.end(), [&](Cell d) {
        const Cell n = shifted(cell, d);
        return map.in_bounds(n) && map.walkable(n);
      });
      if (touches) sites.push_back(map.center(cell));
    }
  }

  const std::size_t n_cells = static_cast<std::size_t>(map.cols()) * map.rows();
  FeatureField field{std::vector<Point>(n_cells), std::vector<double>(n_cells, 0.0)};
  for (int r = 0; r < map.rows(); ++r) {
    for (int c = 0; c < map.cols(); ++c) {
      const Cell cell{c, r};
      if (map.obstacle(cell)) continue;
      const Point p = map.center(cell);
      double best = kInfinity;
      Point best_site{};
      for (const Point& s : sites) {
        const double d2 = (s.x - p.x) * (s.x - p.x) + (s.y - p.y) * (s.y - p.y);
        if (d2 < best) {
          best = d2;
          best_site = s;
        }
      }
      field.feature[map.index(cell)] = best_site;
      field.clearance[map.index(cell)] = std::sqrt(best);
    }
  }
  return field;
}

double angle_between(Point a, Point b) {
  const double na = std::hypot(a.x, a.y);
  const double nb = std::hypot(b.x, b.y);
  if (na == 0.0 || nb == 0.0) return 0.0;
  const double c = std::clamp((a.x * b.x + a.y * b.y) / (na * nb), -1.0, 1.0);
  return std::acos(c);
}

// One Zhang-Suen pass pair; returns true when anything was removed.
bool zhang_suen_iteration(const FloorMap& map, std::vector<std::uint8_t>& on) {
  auto at = [&](int c, int r) -> int {
    const Cell cell{c, r};
    return map.in_bounds(cell) && on[map.index(cell)] ? 1 : 0;
  };
  bool changed = false;
  for (int pass = 0; pass < 2; ++pass) {
    std::vector<std::size_t> remove;
    for (int r = 0; r < map.rows(); ++r) {
      for (int c = 0; c < map.cols(); ++c) {
        if (!at(c, r)) continue;
        // P2..P9 clockwise from north.
        const std::array<int, 8> p{at(c, r + 1), at(c + 1, r + 1), at(c + 1, r), at(c + 1, r - 1),
                                   at(c, r - 1), at(c - 1, r - 1), at(c - 1, r), at(c - 1, r + 1)};
        int count = 0;
        int transitions = 0;
        for (int i = 0; i < 8; ++i) {
          count += p[i];
          if (p[i] == 0 && p[(i + 1) % 8] == 1) ++transitions;
        }
        if (count < 2 || count > 6 || transitions != 1) continue;
        const bool ok = pass == 0 ? (p[0] * p[2] * p[4] == 0 && p[2] * p[4] * p[6] == 0)
                                  : (p[0] * p[2] * p[6] == 0 && p[0] * p[4] * p[6] == 0);
        if (ok) remove.push_back(map.index({c, r}));
      }
    }
    for (std::size_t idx : remove) on[idx] = 0;
    changed = changed || !remove.empty();
  }
  return changed;
}

// Walkable 8-moves without cutting obstacle corners.
bool can_step(const FloorMap& map, Cell from, Cell d) {
  const Cell to = shifted(from, d);
  if (!map.in_bounds(to) || map.obstacle(to)) return false;
  if (d.col != 0 && d.row != 0) {
    return map.walkable(Cell{from.col + d.col, from.row}) && map.walkable(Cell{from.col, from.row + d.row});
  }
  return true;
}

std::vector<int> label_components(const FloorMap& map, const std::vector<std::uint8_t>& member, bool walk_rules) {
  std::vector<int> label(member.size(), -1);
  int next = 0;
  for (int r = 0; r < map.rows(); ++r) {
    for (int c = 0; c < map.cols(); ++c) {
      const Cell start{c, r};
      if (!member[map.index(start)] || label[map.index(start)] >= 0) continue;
      std::queue<Cell> queue;
      queue.push(start);
      label[map.index(start)] = next;
      while (!queue.empty()) {
        const Cell cur = queue.front();
        queue.pop();
        for (Cell d : kNeighbors8) {
          const Cell n = shifted(cur, d);
          if (!map.in_bounds(n) || !member[map.index(n)] || label[map.index(n)] >= 0) continue;
          if (walk_rules && !can_step(map, cur, d)) continue;
          label[map.index(n)] = next;
          queue.push(n);
        }
      }
      ++next;
    }
  }
  return label;
}

// Joins skeleton fragments that share a walkable component along the path of
// greatest clearance.
void repair_connectivity(const FloorMap& map, const FeatureField& field, std::vector<std::uint8_t>& on) {
  std::vector<std::uint8_t> free_cells(on.size(), 0);
  for (int r = 0; r < map.rows(); ++r)
    for (int c = 0; c < map.cols(); ++c) free_cells[map.index({c, r})] = map.walkable(Cell{c, r}) ? 1 : 0;
  const std::vector<int> region = label_components(map, free_cells, true);

  // Regions without any skeleton cell get their clearance maximum.
  const int n_regions = region.empty() ? 0 : *std::max_element(region.begin(), region.end()) + 1;
  std::vector<std::size_t> region_peak(n_regions, on.size());
  std::vector<bool> region_has(n_regions, false);
  for (std::size_t i = 0; i < on.size(); ++i) {
    if (region[i] < 0) continue;
    if (on[i]) region_has[region[i]] = true;
    std::size_t& peak = region_peak[region[i]];
    if (peak == on.size() || field.clearance[i] > field.clearance[peak]) peak = i;
  }
  for (int g = 0; g < n_regions; ++g)
    if (!region_has[g]) on[region_peak[g]] = 1;

  const double floor = 0.5 * map.resolution();
  for (;;) {
    const std::vector<int> comp = label_components(map, on, false);
    bool merged = false;
    for (int g = 0; g < n_regions && !merged; ++g) {
      // Lowest-labelled skeleton component in this region grows until it
      // touches another one.
      int source = -1;
      for (std::size_t i = 0; i < on.size(); ++i) {
        if (on[i] && region[i] == g) {
          source = comp[i];
          break;
        }
      }
      bool multiple = false;
      for (std::size_t i = 0; i < on.size() && !multiple; ++i)
        multiple = on[i] && region[i] == g && comp[i] != source;
      if (!multiple) continue;

      std::vector<double> cost(on.size(), kInfinity);
      std::vector<std::size_t> parent(on.size(), on.size());
      using Entry = std::pair<double, std::size_t>;
      std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
      for (std::size_t i = 0; i < on.size(); ++i) {
        if (on[i] && comp[i] == source) {
          cost[i] = 0.0;
          heap.emplace(0.0, i);
        }
      }
      std::size_t target = on.size();
      while (!heap.empty()) {
        const auto [c0, idx] = heap.top();
        heap.pop();
        if (c0 > cost[idx]) continue;
        if (on[idx] && comp[idx] != source) {
          target = idx;
          break;
        }
        const Cell cur{static_cast<int>(idx % map.cols()), static_cast<int>(idx / map.cols())};
        for (Cell d : kNeighbors8) {
          if (!can_step(map, cur, d)) continue;
          const std::size_t nidx = map.index(shifted(cur, d));
          const double step = std::hypot(d.col, d.row) * map.resolution();
          const double c1 = c0 + step / std::max(field.clearance[nidx], floor);
          if (c1 < cost[nidx]) {
            cost[nidx] = c1;
            parent[nidx] = idx;
            heap.emplace(c1, nidx);
          }
        }
      }
      if (target == on.size()) continue;
      for (std::size_t idx = target; idx != on.size(); idx = parent[idx]) on[idx] = 1;
      merged = true;
    }
    if (!merged) break;
  }
}

}  // namespace

FloorMap::FloorMap(double width_m, double height_m, double resolution, std::vector<std::uint8_t> obstacle)
    : width_m_(width_m), height_m_(height_m), resolution_(resolution), obstacle_(std::move(obstacle)) {
  require(std::isfinite(resolution) && resolution > 0.0, "map resolution must be positive");
  cols_ = integral_cells(width_m, resolution, "width");
  rows_ = integral_cells(height_m, resolution, "height");
  require(obstacle_.size() == static_cast<std::size_t>(cols_) * rows_, "map cell count does not match its extent");
  require(std::find(obstacle_.begin(), obstacle_.end(), 0) != obstacle_.end(), "degenerate map: no walkable cell");
}

FloorMap FloorMap::parse(std::istream& in) {
  double width = 0, height = 0, resolution = 0;
  std::string line;
  if (!std::getline(in, line)) fail(ErrorKind::validation, "map file is empty");
  std::istringstream header(line);
  if (!(header >> width >> height >> resolution)) fail(ErrorKind::validation, "map header must be `width_m height_m resolution`");
  require(resolution > 0.0, "map resolution must be positive");
  const int cols = integral_cells(width, resolution, "width");
  const int rows = integral_cells(height, resolution, "height");

  std::vector<std::uint8_t> cells(static_cast<std::size_t>(cols) * rows, 1);
  for (int i = 0; i < rows; ++i) {
    if (!std::getline(in, line)) fail(ErrorKind::validation, "map has fewer rows than its header declares");
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    require(static_cast<int>(line.size()) == cols, "map row " + std::to_string(i) + " has the wrong width");
    const int r = rows - 1 - i;
    for (int c = 0; c < cols; ++c) {
      const char ch = line[c];
      require(ch == '#' || ch == '.', std::string("unexpected map character '") + ch + "'");
      cells[static_cast<std::size_t>(r) * cols + c] = ch == '#' ? 1 : 0;
    }
  }
  return FloorMap(width, height, resolution, std::move(cells));
}

FloorMap FloorMap::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open map file " + path.string());
  return parse(in);
}

void FloorMap::write(std::ostream& out) const {
  out << width_m_ << ' ' << height_m_ << ' ' << resolution_ << '\n';
  for (int r = rows_ - 1; r >= 0; --r) {
    for (int c = 0; c < cols_; ++c) out << (obstacle_[index({c, r})] ? '#' : '.');
    out << '\n';
  }
}

bool FloorMap::obstacle(Cell c) const { return !in_bounds(c) || obstacle_[index(c)] != 0; }

bool FloorMap::walkable(Point p) const {
  if (p.x < 0.0 || p.y < 0.0 || p.x >= width_m_ || p.y >= height_m_) return false;
  return walkable(cell_at(p));
}

Point FloorMap::center(Cell c) const { return {(c.col + 0.5) * resolution_, (c.row + 0.5) * resolution_}; }

Cell FloorMap::cell_at(Point p) const {
  return {static_cast<int>(std::floor(p.x / resolution_)), static_cast<int>(std::floor(p.y / resolution_))};
}

std::vector<Cell> skeleton_cells(const FloorMap& map, const SkeletonOptions& options) {
  const FeatureField field = feature_transform(map);
  const double threshold = options.angle_threshold_deg * std::numbers::pi / 180.0 - 1e-9;

  std::vector<std::uint8_t> on(static_cast<std::size_t>(map.cols()) * map.rows(), 0);
  for (int r = 0; r < map.rows(); ++r) {
    for (int c = 0; c < map.cols(); ++c) {
      const Cell cell{c, r};
      if (map.obstacle(cell)) continue;
      const std::size_t i = map.index(cell);
      const Point p = map.center(cell);
      for (Cell d : kNeighbors8) {
        const Cell n = shifted(cell, d);
        if (!map.in_bounds(n) || map.obstacle(n)) continue;
        const std::size_t j = map.index(n);
        if (field.clearance[i] + 1e-12 < field.clearance[j]) continue;
        if (angle_between(field.feature[i] - p, field.feature[j] - p) >= threshold) {
          on[i] = 1;
          break;
        }
      }
    }
  }

  while (zhang_suen_iteration(map, on)) {
  }
  repair_connectivity(map, field, on);

  std::vector<Cell> cells;
  for (int r = 0; r < map.rows(); ++r)
    for (int c = 0; c < map.cols(); ++c)
      if (on[map.index({c, r})]) cells.push_back({c, r});
  return cells;
}

Skeleton build_skeleton(const FloorMap& map, const SkeletonOptions& options) {
  require(options.vertex_stride >= 1, "skeleton vertex stride must be at least 1");
  const std::vector<Cell> cells = skeleton_cells(map, options);

  const std::size_t none = static_cast<std::size_t>(-1);
  std::vector<std::size_t> slot(static_cast<std::size_t>(map.cols()) * map.rows(), none);
  for (std::size_t i = 0; i < cells.size(); ++i) slot[map.index(cells[i])] = i;
  auto slot_of = [&](Cell c) { return map.in_bounds(c) ? slot[map.index(c)] : none; };

  // Mixed adjacency: diagonal links only where no shared 4-neighbour is on the
  // skeleton, so staircases do not form triangles.
  std::vector<std::vector<std::size_t>> adj(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    for (Cell d : kNeighbors8) {
      const std::size_t j = slot_of(shifted(cells[i], d));
      if (j == none) continue;
      if (d.col != 0 && d.row != 0) {
        const bool shared = slot_of({cells[i].col + d.col, cells[i].row}) != none ||
                            slot_of({cells[i].col, cells[i].row + d.row}) != none;
        if (shared) continue;
      }
      adj[i].push_back(j);
    }
  }

  std::vector<bool> is_vertex(cells.size(), false);
  for (std::size_t i = 0; i < cells.size(); ++i) is_vertex[i] = adj[i].size() != 2;

  // Subsample chains of degree-2 cells.
  std::vector<bool> visited(cells.size(), false);
  auto walk_chain = [&](std::size_t from, std::size_t first) {
    std::size_t prev = from;
    std::size_t cur = first;
    int steps = 1;
    while (!is_vertex[cur] && !visited[cur]) {
      visited[cur] = true;
      if (steps % options.vertex_stride == 0) is_vertex[cur] = true;
      const std::size_t next = adj[cur][0] == prev ? adj[cur][1] : adj[cur][0];
      prev = cur;
      cur = next;
      ++steps;
    }
  };
  for (std::size_t i = 0; i < cells.size(); ++i)
    if (is_vertex[i])
      for (std::size_t n : adj[i]) walk_chain(i, n);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (visited[i] || is_vertex[i]) continue;
    is_vertex[i] = true;  // isolated cycle
    for (std::size_t n : adj[i]) walk_chain(i, n);
  }

  Skeleton skeleton;
  std::vector<std::size_t> vertex_id(cells.size(), none);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (!is_vertex[i]) continue;
    vertex_id[i] = skeleton.vertices.size();
    skeleton.vertices.push_back(map.center(cells[i]));
  }

  std::vector<std::vector<std::size_t>> best_edge(skeleton.vertices.size());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (!is_vertex[i]) continue;
    for (std::size_t n : adj[i]) {
      SkeletonEdge edge;
      edge.v = vertex_id[i];
      std::size_t prev = i;
      std::size_t cur = n;
      edge.length_m = distance(map.center(cells[prev]), map.center(cells[cur]));
      while (!is_vertex[cur]) {
        edge.via.push_back(map.center(cells[cur]));
        const std::size_t next = adj[cur][0] == prev ? adj[cur][1] : adj[cur][0];
        edge.length_m += distance(map.center(cells[cur]), map.center(cells[next]));
        prev = cur;
        cur = next;
      }
      edge.w = vertex_id[cur];
      if (edge.w <= edge.v) continue;  // found again from the other end
      auto& slots = best_edge[edge.v];
      auto existing = std::find_if(slots.begin(), slots.end(),
                                   [&](std::size_t e) { return skeleton.edges[e].w == edge.w; });
      if (existing == slots.end()) {
        slots.push_back(skeleton.edges.size());
        skeleton.edges.push_back(std::move(edge));
      } else if (edge.length_m < skeleton.edges[*existing].length_m) {
        skeleton.edges[*existing] = std::move(edge);
      }
    }
  }
  return skeleton;
}

SspMatrix shortest_path_matrix(const Skeleton& skeleton) {
  const std::size_t n = skeleton.vertex_count();
  require(n >= 1, "skeleton has no vertices");
  std::vector<std::vector<std::pair<std::size_t, double>>> adj(n);
  for (const SkeletonEdge& e : skeleton.edges) {
    adj[e.v].emplace_back(e.w, e.length_m);
    adj[e.w].emplace_back(e.v, e.length_m);
  }

  Matrix d = Matrix::Constant(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n), kInfinity);
  using Entry = std::pair<double, std::size_t>;
  for (std::size_t src = 0; src < n; ++src) {
    std::vector<double> dist(n, kInfinity);
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
    dist[src] = 0.0;
    heap.emplace(0.0, src);
    while (!heap.empty()) {
      const auto [du, u] = heap.top();
      heap.pop();
      if (du > dist[u]) continue;
      for (const auto& [v, len] : adj[u]) {
        if (du + len < dist[v]) {
          dist[v] = du + len;
          heap.emplace(dist[v], v);
        }
      }
    }
    for (std::size_t w = 0; w < n; ++w) d(src, w) = dist[w];
  }
  // Dijkstra sums edges in different orders from each end; pin exact symmetry.
  for (std::size_t v = 0; v < n; ++v)
    for (std::size_t w = v + 1; w < n; ++w) d(v, w) = d(w, v) = std::min(d(v, w), d(w, v));
  return SspMatrix(std::move(d));
}

std::size_t nearest_vertex(Point p, const Skeleton& skeleton) {
  require(skeleton.vertex_count() > 0, "skeleton has no vertices");
  std::size_t best = 0;
  double best_d = kInfinity;
  for (std::size_t v = 0; v < skeleton.vertex_count(); ++v) {
    const double d = distance(p, skeleton.vertices[v]);
    if (d < best_d) {
      best_d = d;
      best = v;
    }
  }
  return best;
}

double ssp_distance(std::size_t i, std::size_t j, std::span<const Point> rps, const Skeleton& skeleton,
                    const SspMatrix& d) {
  require(i < rps.size() && j < rps.size(), "reference point index out of range");
  if (i == j) return 0.0;
  const std::size_t vi = nearest_vertex(rps[i], skeleton);
  const std::size_t vj = nearest_vertex(rps[j], skeleton);
  const double path = d(vi, vj);
  if (!std::isfinite(path)) {
    fail(ErrorKind::validation, "rooms disconnected: no skeleton path between reference points " + std::to_string(i) +
                                    " and " + std::to_string(j));
  }
  return distance(rps[i], skeleton.vertices[vi]) + path + distance(rps[j], skeleton.vertices[vj]);
}

Matrix ssp_distance_matrix(std::span<const Point> rps, const Skeleton& skeleton, const SspMatrix& d) {
  const auto n = static_cast<Eigen::Index>(rps.size());
  std::vector<std::size_t> snap(rps.size());
  std::vector<double> offset(rps.size());
  for (std::size_t i = 0; i < rps.size(); ++i) {
    snap[i] = nearest_vertex(rps[i], skeleton);
    offset[i] = distance(rps[i], skeleton.vertices[snap[i]]);
  }
  Matrix out = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double path = d(snap[i], snap[j]);
      if (!std::isfinite(path)) {
        fail(ErrorKind::validation, "rooms disconnected: no skeleton path between reference points " +
                                        std::to_string(i) + " and " + std::to_string(j));
      }
      out(i, j) = out(j, i) = offset[i] + path + offset[j];
    }
  }
  return out;
}

void write_skeleton(std::ostream& out, const Skeleton& skeleton) {
  set_exact_precision(out);
  for (const Point& p : skeleton.vertices) out << "v " << p.x << ' ' << p.y << '\n';
  for (const SkeletonEdge& e : skeleton.edges) out << "e " << e.v << ' ' << e.w << ' ' << e.length_m << '\n';
}

Skeleton read_skeleton(std::istream& in) {
  Skeleton skeleton;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "v") {
      Point p;
      if (!(ls >> p.x >> p.y)) fail(ErrorKind::validation, "bad skeleton vertex line: " + line);
      skeleton.vertices.push_back(p);
    } else if (tag == "e") {
      SkeletonEdge e;
      if (!(ls >> e.v >> e.w >> e.length_m)) fail(ErrorKind::validation, "bad skeleton edge line: " + line);
      require(e.v < skeleton.vertices.size() && e.w < skeleton.vertices.size(), "skeleton edge references unknown vertex");
      skeleton.edges.push_back(std::move(e));
    } else {
      fail(ErrorKind::validation, "unknown skeleton record: " + line);
    }
  }
  return skeleton;
}

}  // namespace salc
