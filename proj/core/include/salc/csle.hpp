#pragma once

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <span>
#include <vector>

#include "salc/common.hpp"
#include "salc/romac.hpp"

namespace salc {

inline constexpr double kSigmaFloorDb = 0.5;
inline constexpr double kDistanceFloor = 1e-3;
inline constexpr std::size_t kAllAps = std::numeric_limits<std::size_t>::max();

/// Std (n - 1 denominator) of the database column l over the members of the
/// cluster holding RP n, floored at kSigmaFloorDb. Singletons get the floor.
double cluster_sigma(std::size_t n, std::size_t l, const Matrix& adaptive_db, const ClusterModel& clusters);

/// Modified Euclidean distance |db(n, l) - user(l)| / cluster_sigma(n, l).
double med(std::size_t n, std::size_t l, const Matrix& adaptive_db, const ClusterModel& clusters,
           const Vector& user_rss);

struct WeightedRp {
  std::size_t rp = 0;
  std::size_t ap = kAllAps;  // kAllAps for a fused selection
  double weight = 0.0;
};

// per_ap keeps the k best RPs for every AP separately and pools them.
// joint ranks RPs once by the root-sum-square of their per-AP MEDs.
enum class MedAggregation { per_ap, joint };

/// Inverse-MED weights 1 / max(d, kDistanceFloor), top-k per selection; ties
/// go to the lower RP index.
std::vector<WeightedRp> csle_weights(const Matrix& adaptive_db, const ClusterModel& clusters, const Vector& user_rss,
                                     std::size_t k, MedAggregation aggregation = MedAggregation::joint);

struct PositionEstimate {
  Point xy;
  std::vector<WeightedRp> selected;
  std::size_t k = 0;
};

/// Weight-normalised average of the selected RP positions.
PositionEstimate estimate(std::span<const WeightedRp> weights, std::span<const Point> rp_positions, std::size_t k);

PositionEstimate csle_locate(const Matrix& adaptive_db, const ClusterModel& clusters, const Vector& user_rss,
                             std::span<const Point> rp_positions, std::size_t k,
                             MedAggregation aggregation = MedAggregation::joint);

/// Plain WkNN: weights 1 / max(||db(n) - user||, kDistanceFloor), top-k.
PositionEstimate wknn_baseline(const Matrix& db, const Vector& user_rss, std::span<const Point> rp_positions,
                               std::size_t k);

struct EstimateRecord {
  std::size_t tp_index = 0;
  Point truth;
  Point estimate;
  double error_m = 0.0;
};

/// `tp_index,true_x,true_y,est_x,est_y,error_m` with a header line.
void write_estimates(std::ostream& out, std::span<const EstimateRecord> records);
std::vector<EstimateRecord> read_estimates(std::istream& in);

}  // namespace salc
