#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <filesystem>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "salc/code_lr.hpp"
#include "salc/code_nn.hpp"
#include "salc/csle.hpp"
#include "salc/floorplan.hpp"
#include "salc/pipeline.hpp"
#include "salc/radio.hpp"
#include "salc/report.hpp"
#include "salc/romac.hpp"
#include "salc/scenario.hpp"

namespace salc::test {

inline std::filesystem::path data_dir() { return SALC_DATA_DIR; }

inline FloorMap map_from_rows(double res, const std::vector<std::string>& rows_top_down) {
  std::ostringstream os;
  os << rows_top_down.front().size() * res << ' ' << rows_top_down.size() * res << ' ' << res << '\n';
  for (const auto& r : rows_top_down) os << r << '\n';
  std::istringstream is(os.str());
  return FloorMap::parse(is);
}

inline std::vector<std::string> open_room(int cols, int rows) {
  return std::vector<std::string>(static_cast<std::size_t>(rows), std::string(static_cast<std::size_t>(cols), '.'));
}

// Random connected-or-not weighted graph as a skeleton.
inline Skeleton random_skeleton(std::mt19937_64& gen, std::size_t n_vertices, double edge_prob) {
  std::uniform_real_distribution<double> coord(0.0, 10.0), u(0.0, 1.0), len(0.1, 5.0);
  Skeleton sk;
  for (std::size_t i = 0; i < n_vertices; ++i) sk.vertices.push_back({coord(gen), coord(gen)});
  for (std::size_t v = 0; v < n_vertices; ++v)
    for (std::size_t w = v + 1; w < n_vertices; ++w)
      if (u(gen) < edge_prob) sk.edges.push_back({v, w, len(gen), {}});
  return sk;
}

inline Matrix floyd_warshall(const Skeleton& sk) {
  const auto n = static_cast<Eigen::Index>(sk.vertices.size());
  Matrix d = Matrix::Constant(n, n, kInfinity);
  for (Eigen::Index i = 0; i < n; ++i) d(i, i) = 0.0;
  for (const SkeletonEdge& e : sk.edges) {
    const auto v = static_cast<Eigen::Index>(e.v), w = static_cast<Eigen::Index>(e.w);
    d(v, w) = std::min(d(v, w), e.length_m);
    d(w, v) = std::min(d(w, v), e.length_m);
  }
  for (Eigen::Index k = 0; k < n; ++k)
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        if (d(i, k) + d(k, j) < d(i, j)) d(i, j) = d(i, k) + d(k, j);
  return d;
}

// 8-connected BFS path length (meters) between two walkable cells, no corner
// cutting past obstacles; +inf if unreachable.
inline double grid_path_length(const FloorMap& map, Cell a, Cell b) {
  const int cols = map.cols(), rows = map.rows();
  std::vector<double> dist(static_cast<std::size_t>(cols) * rows, kInfinity);
  using Item = std::pair<double, Cell>;
  auto cmp = [](const Item& x, const Item& y) { return x.first > y.first; };
  std::vector<Item> heap;
  dist[map.index(a)] = 0.0;
  heap.push_back({0.0, a});
  while (!heap.empty()) {
    std::pop_heap(heap.begin(), heap.end(), cmp);
    const auto [d, c] = heap.back();
    heap.pop_back();
    if (d > dist[map.index(c)]) continue;
    if (c == b) return d * map.resolution();
    for (int dr = -1; dr <= 1; ++dr)
      for (int dc = -1; dc <= 1; ++dc) {
        if (!dr && !dc) continue;
        const Cell n{c.col + dc, c.row + dr};
        if (map.obstacle(n)) continue;
        if (dr && dc && (map.obstacle(Cell{c.col + dc, c.row}) || map.obstacle(Cell{c.col, c.row + dr}))) continue;
        const double nd = d + ((dr && dc) ? std::sqrt(2.0) : 1.0);
        if (nd < dist[map.index(n)]) {
          dist[map.index(n)] = nd;
          heap.push_back({nd, n});
          std::push_heap(heap.begin(), heap.end(), cmp);
        }
      }
  }
  return kInfinity;
}

// Connected component id per walkable cell (4-connectivity), -1 for walls.
inline std::vector<int> walkable_components(const FloorMap& map) {
  std::vector<int> comp(static_cast<std::size_t>(map.cols()) * map.rows(), -1);
  int next = 0;
  for (int r = 0; r < map.rows(); ++r)
    for (int c = 0; c < map.cols(); ++c) {
      const Cell s{c, r};
      if (map.obstacle(s) || comp[map.index(s)] >= 0) continue;
      std::deque<Cell> q{s};
      comp[map.index(s)] = next;
      while (!q.empty()) {
        const Cell cur = q.front();
        q.pop_front();
        const Cell nbrs[] = {{cur.col + 1, cur.row}, {cur.col - 1, cur.row}, {cur.col, cur.row + 1}, {cur.col, cur.row - 1}};
        for (const Cell& n : nbrs)
          if (!map.obstacle(n) && comp[map.index(n)] < 0) {
            comp[map.index(n)] = next;
            q.push_back(n);
          }
      }
      ++next;
    }
  return comp;
}

inline Matrix random_similarity(std::mt19937_64& gen, Eigen::Index n) {
  std::uniform_real_distribution<double> u(-10.0, 0.0);
  Matrix s(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) s(i, j) = u(gen);
  return s;
}

// Best net similarity over every non-empty exemplar set, each non-exemplar
// joining its most similar exemplar.
inline double brute_force_net_similarity(const Matrix& s) {
  const auto n = static_cast<int>(s.rows());
  double best = -kInfinity;
  for (unsigned mask = 1; mask < (1u << n); ++mask) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      if (mask & (1u << i)) {
        total += s(i, i);
        continue;
      }
      double b = -kInfinity;
      for (int j = 0; j < n; ++j)
        if (mask & (1u << j)) b = std::max(b, s(i, j));
      total += b;
    }
    best = std::max(best, total);
  }
  return best;
}

struct Ols {
  double coeff;
  double bias;
};

inline Ols closed_form_ols(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  const double c = sxy / sxx;
  return {c, my - c * mx};
}

inline Matrix random_matrix(std::mt19937_64& gen, Eigen::Index rows, Eigen::Index cols, double scale) {
  std::normal_distribution<double> n(0.0, scale);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(gen);
  return m;
}

inline NetworkParams random_network(std::mt19937_64& gen, std::size_t n_in, std::size_t n_out,
                                    const std::vector<std::size_t>& hidden) {
  NetworkParams p = init_network(n_in, n_out, hidden, gen());
  for (Vector& b : p.biases) b = random_matrix(gen, b.size(), 1, 0.3);
  return p;
}

// Straight-line forward pass written independently of the library.
inline Vector reference_forward(const NetworkParams& p, const Vector& x) {
  std::vector<double> a(x.data(), x.data() + x.size());
  for (double& v : a) v /= p.input_scale;
  for (std::size_t h = 0; h < p.weights.size(); ++h) {
    const Matrix& w = p.weights[h];
    std::vector<double> z(static_cast<std::size_t>(w.rows()));
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      double acc = p.biases[h](i);
      for (Eigen::Index j = 0; j < w.cols(); ++j) acc += w(i, j) * a[static_cast<std::size_t>(j)];
      z[static_cast<std::size_t>(i)] = (h + 1 < p.weights.size()) ? std::max(0.0, acc) : acc;
    }
    a = std::move(z);
  }
  return Eigen::Map<Vector>(a.data(), static_cast<Eigen::Index>(a.size()));
}

struct GradCheck {
  double relative_error = 0.0;
  bool near_kink = false;
};

// Central differences over every parameter, compared norm-wise against the
// analytic gradient.
inline GradCheck finite_difference_check(const NetworkParams& p, const Matrix& x, const Matrix& t, double gamma,
                                         double step = 1e-6) {
  NetworkParams analytic;
  loss_and_gradient(p, x, t, gamma, analytic);
  double diff2 = 0.0, ref2 = 0.0;
  NetworkParams q = p;
  auto probe = [&](double& slot, double g) {
    const double saved = slot;
    slot = saved + step;
    const double up = batch_loss(q, x, t, gamma);
    slot = saved - step;
    const double down = batch_loss(q, x, t, gamma);
    slot = saved;
    const double numeric = (up - down) / (2 * step);
    diff2 += (numeric - g) * (numeric - g);
    ref2 += std::max(numeric * numeric, g * g);
  };
  for (std::size_t h = 0; h < q.weights.size(); ++h) {
    for (Eigen::Index i = 0; i < q.weights[h].size(); ++i) probe(q.weights[h].data()[i], analytic.weights[h].data()[i]);
    for (Eigen::Index i = 0; i < q.biases[h].size(); ++i) probe(q.biases[h].data()[i], analytic.biases[h].data()[i]);
  }
  GradCheck out;
  out.relative_error = ref2 > 0 ? std::sqrt(diff2 / ref2) : std::sqrt(diff2);
  // Pre-activations within a few steps of the ReLU kink make central
  // differences straddle two linear pieces.
  Matrix a = x / p.input_scale;
  double margin = kInfinity;
  for (std::size_t h = 0; h + 1 < p.weights.size(); ++h) {
    Matrix z = p.weights[h] * a;
    z.colwise() += p.biases[h];
    margin = std::min(margin, z.cwiseAbs().minCoeff());
    a = z.cwiseMax(0.0);
  }
  out.near_kink = margin < 1e-4;
  return out;
}

inline double cross(Point o, Point a, Point b) { return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x); }

// Monotone chain hull, then containment with a small tolerance; degenerate
// hulls fall back to the distance from the segment.
inline bool in_hull(std::vector<Point> pts, Point q, double tol = 1e-9) {
  std::sort(pts.begin(), pts.end(), [](Point a, Point b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() == 1) return distance(pts[0], q) <= tol;
  std::vector<Point> h(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && cross(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
    h[k++] = pts[i];
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
    h[k++] = pts[i];
  }
  h.resize(k - 1);
  if (h.size() <= 2) {
    const Point a = h.front(), b = h.back(), ab = b - a;
    const double len2 = ab.x * ab.x + ab.y * ab.y;
    const double s = std::clamp(((q.x - a.x) * ab.x + (q.y - a.y) * ab.y) / len2, 0.0, 1.0);
    return distance(a + s * ab, q) <= tol;
  }
  for (std::size_t i = 0; i < h.size(); ++i)
    if (cross(h[i], h[(i + 1) % h.size()], q) < -tol) return false;
  return true;
}

// k smallest by full sort, ties to the lower index.
inline std::vector<std::size_t> full_sort_top_k(const std::vector<double>& d, std::size_t k) {
  std::vector<std::size_t> idx(d.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return d[a] < d[b]; });
  idx.resize(k);
  return idx;
}

inline RssDatabase random_database(std::mt19937_64& gen, std::size_t points, std::size_t aps, std::size_t samples) {
  std::uniform_real_distribution<double> pos(0.0, 10.0), rss(-90.0, -30.0);
  std::vector<Point> p;
  for (std::size_t i = 0; i < points; ++i) p.push_back({pos(gen), pos(gen)});
  RssDatabase db(p, aps, samples);
  for (std::size_t n = 0; n < points; ++n)
    for (std::size_t l = 0; l < aps; ++l)
      for (std::size_t k = 0; k < samples; ++k) db.at(n, l, k) = rss(gen);
  return db;
}

// Small, fast version of the reference scenario.
inline Scenario small_scenario() {
  Scenario sc = Scenario::load(data_dir() / "reference.scenario");
  sc.tp_count = 12;
  sc.samples = 8;
  sc.pretrain_samples = 4;
  sc.nn_hidden = {8, 8};
  sc.nn_pretrain_iters = 30;
  sc.nn_finetune_iters = 30;
  return sc;
}

}  // namespace salc::test
