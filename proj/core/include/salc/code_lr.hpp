#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "salc/common.hpp"
#include "salc/radio.hpp"
#include "salc/romac.hpp"

namespace salc {

// Per-(RP, AP) linear map from the cluster exemplar's RSS to the RP's RSS.

struct LinearFitOptions {
  double learning_rate = 0.1;
  int epochs = 200;
  double tolerance = 1e-6;
};

struct LinearFit {
  double coeff = 0.0;
  double bias = 0.0;
  bool degenerate = false;
  int epochs_run = 0;
};

/// Least-squares fit of rp ~ coeff * mp + bias. Inputs are standardised to
/// zero mean and unit variance for the descent and the result is mapped back
/// to the original units. A constant mp series returns coeff 0 and the mean
/// of rp, flagged degenerate.
LinearFit fit_series(std::span<const double> mp, std::span<const double> rp, const LinearFitOptions& options = {});

struct LinearModelSet {
  Matrix coeff;  // N_rp x N_ap
  Matrix bias;   // N_rp x N_ap, dB
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> degenerate;
  ClusterModel clusters;

  /// Model parameter database: one `n l c b degenerate` record per pair.
  void write(std::ostream& out) const;
  static LinearModelSet read(std::istream& in, ClusterModel clusters);
};

/// Trains on samples 1..N of db (sample 0 is the empty reference).
LinearModelSet fit_linear_models(const RssDatabase& db, const ClusterModel& clusters,
                                 const LinearFitOptions& options = {});

/// mp_rss_now holds one row per monitor point (ascending exemplar order) and
/// one column per AP. A missing or non-finite row is an error naming the
/// cluster.
Matrix reconstruct_linear(const LinearModelSet& models, const Matrix& mp_rss_now);

}  // namespace salc
