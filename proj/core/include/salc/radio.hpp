#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "salc/common.hpp"

namespace salc {

struct AccessPoint {
  Point position;
  double tx_power_dbm = 20.0;
  double freq_mhz = 2400.0;
};

struct Rect {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  bool contains(Point p) const { return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1; }
  bool intersects_segment(Point a, Point b) const;
};

struct CrowdZone {
  Rect area;
  double extra_attenuation_db = 0.0;
  // Per-sample attenuation is extra_attenuation_db + U(-jitter, +jitter),
  // shared by every link crossing the zone at that sample.
  double temporal_jitter_db = 0.0;
};

struct Environment {
  double path_loss_coeff = 30.0;
  double noise_sigma_db = 0.0;
  std::vector<CrowdZone> crowd_zones;
  std::uint64_t rng_seed = 0;
};

inline constexpr double kDistanceFloorM = 0.1;

/// 20 log10(f_MHz) + P_d log10(max(d, floor)) - 28.
double path_loss_db(double distance_m, double freq_mhz, double path_loss_coeff);

/// Attenuation in dB added by crowd zones crossing the AP-to-receiver segment
/// at sample t. Sample 0 is the empty reference and always returns 0.
double crowd_attenuation(Point pos, const AccessPoint& ap, const Environment& env, std::size_t t);

/// Received RSS in dB. Deterministic in (env.rng_seed, pos, ap, t); sample 0
/// carries neither crowd attenuation nor noise.
double synth_rss(Point pos, const AccessPoint& ap, const Environment& env, std::size_t t);

/// RSS per (point, AP, sample). Sample 0 is the empty-environment reference.
class RssDatabase {
 public:
  RssDatabase() = default;
  RssDatabase(std::vector<Point> positions, std::size_t n_ap, std::size_t n_samples);

  std::size_t points() const { return positions_.size(); }
  std::size_t aps() const { return n_ap_; }
  std::size_t samples() const { return n_samples_; }
  const std::vector<Point>& positions() const { return positions_; }

  double& at(std::size_t point, std::size_t ap, std::size_t sample) { return values_[offset(point, ap) + sample]; }
  double at(std::size_t point, std::size_t ap, std::size_t sample) const { return values_[offset(point, ap) + sample]; }

  std::span<const double> series(std::size_t point, std::size_t ap) const {
    return {values_.data() + offset(point, ap), n_samples_};
  }

  /// points x aps matrix at one sample.
  Matrix snapshot(std::size_t sample) const;

  /// Header `points aps samples`, one `x y` line per point, then one line per
  /// (point, AP) pair holding `point ap v0 v1 ...`.
  void write(std::ostream& out) const;
  static RssDatabase read(std::istream& in);

  friend bool operator==(const RssDatabase&, const RssDatabase&) = default;

 private:
  std::size_t offset(std::size_t point, std::size_t ap) const { return (point * n_ap_ + ap) * n_samples_; }

  std::vector<Point> positions_;
  std::size_t n_ap_ = 0;
  std::size_t n_samples_ = 0;
  std::vector<double> values_;
};

RssDatabase build_database(std::span<const Point> points, std::span<const AccessPoint> aps, const Environment& env,
                           std::size_t n_samples);

/// Readings of RSS for arbitrary positions at one time sample; rows follow
/// `points`, columns follow `aps`.
Matrix synth_snapshot(std::span<const Point> points, std::span<const AccessPoint> aps, const Environment& env,
                      std::size_t t);

/// Monitor-point rows at sample t, in ascending exemplar order.
Matrix mp_stream(const RssDatabase& db, std::span<const std::size_t> exemplars, std::size_t t);

}  // namespace salc
