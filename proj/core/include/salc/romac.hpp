#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "salc/common.hpp"
#include "salc/floorplan.hpp"
#include "salc/radio.hpp"

namespace salc {

// RSS-oriented, map-assisted clustering of reference points: a three-factor
// similarity (RSS difference, skeleton path length, time-variation
// difference) fed to affinity propagation. Exemplars become monitor points.

struct SimilarityWeights {
  double rss = 1.0 / 3.0;
  double ssp = 1.0 / 3.0;
  double delta = 1.0 / 3.0;
};

// literal: s = -w.[d_rss, d_ssp, delta]; inverted uses (1 - delta~) so that
// RPs with similar time variation attract each other.
enum class DeltaOrientation { literal, inverted };

inline constexpr double kDeltaEpsilon = 1e-6;

struct SimilarityMatrix {
  Matrix s;
  Matrix d_rss;
  Matrix d_ssp;
  Matrix delta;
  SimilarityWeights weights;
};

/// Mean |a_i - a_j| over samples 1..N and all APs.
double rss_difference(std::size_t i, std::size_t j, const RssDatabase& db);

/// 1 / max(eps, |sum_l sum_k (dev_i - dev_j)|), deviations taken from sample 0.
double time_variation_similarity(std::size_t i, std::size_t j, const RssDatabase& db);

/// Off-diagonal min-max scaling to [0, 1]; constant input maps to 0. The
/// diagonal is set to 0.
Matrix min_max_normalized(const Matrix& m);

SimilarityMatrix build_similarity(const RssDatabase& db, const Matrix& ssp_distances, const SimilarityWeights& weights,
                                  std::optional<double> preference = std::nullopt,
                                  DeltaOrientation orientation = DeltaOrientation::literal);

SimilarityMatrix build_similarity(const RssDatabase& db, std::span<const Point> rps, const Skeleton& skeleton,
                                  const SspMatrix& d, const SimilarityWeights& weights,
                                  std::optional<double> preference = std::nullopt,
                                  DeltaOrientation orientation = DeltaOrientation::literal);

/// Median of column j without the diagonal entry.
double median_preference(const Matrix& s, Eigen::Index j);

struct AffinityOptions {
  double damping = 0.5;
  int max_iter = 500;
  int stable_iters = 10;
};

struct ClusterModel {
  std::vector<std::size_t> exemplars;              // ascending
  std::vector<std::size_t> exemplar_of;            // per RP
  std::vector<std::vector<std::size_t>> clusters;  // clusters[m] belongs to exemplars[m]
  bool converged = false;
  int iterations = 0;

  std::size_t n_mp() const { return exemplars.size(); }
  std::size_t size() const { return exemplar_of.size(); }
  /// Cluster position m of an RP.
  std::size_t cluster_of(std::size_t rp) const;

  /// One line per cluster: `m: exemplar : member,member,...`.
  void write(std::ostream& out) const;
  static ClusterModel read(std::istream& in);

  friend bool operator==(const ClusterModel&, const ClusterModel&) = default;
};

/// Builds the model from an exemplar assignment; exemplars are taken as the
/// distinct values of exemplar_of.
ClusterModel make_cluster_model(std::vector<std::size_t> exemplar_of);

ClusterModel affinity_propagation(const Matrix& s, const AffinityOptions& options = {});

/// Sum of s(i, E(i)) over non-exemplars plus the exemplars' preferences.
double net_similarity(const Matrix& s, const ClusterModel& model);

void write_similarity(std::ostream& out, const Matrix& s);

}  // namespace salc
