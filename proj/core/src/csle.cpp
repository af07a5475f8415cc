#include "salc/csle.hpp"

#include <algorithm>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

namespace salc {
namespace {

void check_query(const Matrix& db, const Vector& user_rss, std::size_t k) {
  require(db.rows() >= 1, "database has no reference points");
  require(db.cols() == user_rss.size(), "user reading has " + std::to_string(user_rss.size()) + " APs, database has " +
                                            std::to_string(db.cols()));
  require(db.allFinite() && user_rss.allFinite(), "RSS values must be finite");
  require(k >= 1 && k <= static_cast<std::size_t>(db.rows()), "k must lie in [1, number of RPs]");
}

// Indices of the k smallest distances, ties to the lower index.
std::vector<std::size_t> top_k(const std::vector<double>& dist, std::size_t k) {
  std::vector<std::size_t> idx(dist.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(),
                    [&](std::size_t a, std::size_t b) { return dist[a] < dist[b] || (dist[a] == dist[b] && a < b); });
  idx.resize(k);
  return idx;
}

}  // namespace

double cluster_sigma(std::size_t n, std::size_t l, const Matrix& adaptive_db, const ClusterModel& clusters) {
  const auto& members = clusters.clusters[clusters.cluster_of(n)];
  if (members.size() < 2) return kSigmaFloorDb;
  const auto col = static_cast<Eigen::Index>(l);
  double mean = 0.0;
  for (std::size_t m : members) mean += adaptive_db(static_cast<Eigen::Index>(m), col);
  mean /= static_cast<double>(members.size());
  double ss = 0.0;
  for (std::size_t m : members) {
    const double d = adaptive_db(static_cast<Eigen::Index>(m), col) - mean;
    ss += d * d;
  }
  return std::max(kSigmaFloorDb, std::sqrt(ss / static_cast<double>(members.size() - 1)));
}

double med(std::size_t n, std::size_t l, const Matrix& adaptive_db, const ClusterModel& clusters,
           const Vector& user_rss) {
  const auto row = static_cast<Eigen::Index>(n), col = static_cast<Eigen::Index>(l);
  return std::abs(adaptive_db(row, col) - user_rss(col)) / cluster_sigma(n, l, adaptive_db, clusters);
}

std::vector<WeightedRp> csle_weights(const Matrix& adaptive_db, const ClusterModel& clusters, const Vector& user_rss,
                                     std::size_t k, MedAggregation aggregation) {
  check_query(adaptive_db, user_rss, k);
  require(clusters.size() == static_cast<std::size_t>(adaptive_db.rows()), "cluster model does not match the database");
  const auto n_rp = static_cast<std::size_t>(adaptive_db.rows());
  const auto n_ap = static_cast<std::size_t>(adaptive_db.cols());

  Matrix d(adaptive_db.rows(), adaptive_db.cols());
  for (std::size_t n = 0; n < n_rp; ++n)
    for (std::size_t l = 0; l < n_ap; ++l)
      d(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(l)) = med(n, l, adaptive_db, clusters, user_rss);

  std::vector<WeightedRp> out;
  std::vector<double> dist(n_rp);
  if (aggregation == MedAggregation::joint) {
    for (std::size_t n = 0; n < n_rp; ++n) dist[n] = d.row(static_cast<Eigen::Index>(n)).norm();
    for (std::size_t n : top_k(dist, k)) out.push_back({n, kAllAps, 1.0 / std::max(dist[n], kDistanceFloor)});
    return out;
  }
  for (std::size_t l = 0; l < n_ap; ++l) {
    for (std::size_t n = 0; n < n_rp; ++n) dist[n] = d(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(l));
    for (std::size_t n : top_k(dist, k)) out.push_back({n, l, 1.0 / std::max(dist[n], kDistanceFloor)});
  }
  return out;
}

PositionEstimate estimate(std::span<const WeightedRp> weights, std::span<const Point> rp_positions, std::size_t k) {
  double total = 0.0;
  Point sum;
  for (const WeightedRp& w : weights) {
    require(w.rp < rp_positions.size(), "selected RP index out of range");
    require(std::isfinite(w.weight) && w.weight >= 0.0, "weights must be finite and non-negative");
    total += w.weight;
    sum = sum + w.weight * rp_positions[w.rp];
  }
  require(total > 0.0, "position estimate needs at least one positive weight");
  PositionEstimate out;
  out.xy = Point{sum.x / total, sum.y / total};
  out.selected.assign(weights.begin(), weights.end());
  out.k = k;
  return out;
}

PositionEstimate csle_locate(const Matrix& adaptive_db, const ClusterModel& clusters, const Vector& user_rss,
                             std::span<const Point> rp_positions, std::size_t k, MedAggregation aggregation) {
  require(rp_positions.size() == static_cast<std::size_t>(adaptive_db.rows()), "RP positions do not match the database");
  const auto w = csle_weights(adaptive_db, clusters, user_rss, k, aggregation);
  return estimate(w, rp_positions, k);
}

PositionEstimate wknn_baseline(const Matrix& db, const Vector& user_rss, std::span<const Point> rp_positions,
                               std::size_t k) {
  check_query(db, user_rss, k);
  require(rp_positions.size() == static_cast<std::size_t>(db.rows()), "RP positions do not match the database");
  std::vector<double> dist(static_cast<std::size_t>(db.rows()));
  for (Eigen::Index n = 0; n < db.rows(); ++n)
    dist[static_cast<std::size_t>(n)] = (db.row(n).transpose() - user_rss).norm();
  std::vector<WeightedRp> w;
  for (std::size_t n : top_k(dist, k)) w.push_back({n, kAllAps, 1.0 / std::max(dist[n], kDistanceFloor)});
  return estimate(w, rp_positions, k);
}

void write_estimates(std::ostream& out, std::span<const EstimateRecord> records) {
  set_exact_precision(out);
  out << "tp_index,true_x,true_y,est_x,est_y,error_m\n";
  for (const EstimateRecord& r : records) {
    out << r.tp_index << ',' << r.truth.x << ',' << r.truth.y << ',' << r.estimate.x << ',' << r.estimate.y << ','
        << r.error_m << '\n';
  }
}

std::vector<EstimateRecord> read_estimates(std::istream& in) {
  std::string line;
  std::vector<EstimateRecord> out;
  if (!std::getline(in, line)) return out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    EstimateRecord r;
    if (!(ls >> r.tp_index >> r.truth.x >> r.truth.y >> r.estimate.x >> r.estimate.y >> r.error_m))
      fail(ErrorKind::validation, "bad estimate record: " + line);
    out.push_back(r);
  }
  return out;
}

}  // namespace salc
