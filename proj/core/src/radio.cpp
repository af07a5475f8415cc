#include "salc/radio.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

namespace salc {
namespace {

constexpr std::uint64_t kCrowdStream = 0xC0;
constexpr std::uint64_t kNoiseStream = 0x4E;

double zone_level(const CrowdZone& zone, std::size_t zone_index, const Environment& env, std::size_t t) {
  if (zone.temporal_jitter_db <= 0.0) return zone.extra_attenuation_db;
  std::mt19937_64 gen(mix_seed(env.rng_seed, {kCrowdStream, zone_index, t}));
  std::uniform_real_distribution<double> jitter(-zone.temporal_jitter_db, zone.temporal_jitter_db);
  return std::max(0.0, zone.extra_attenuation_db + jitter(gen));
}

}  // namespace

bool Rect::intersects_segment(Point a, Point b) const {
  // Liang-Barsky clip of the parametric segment a + s (b - a), s in [0, 1].
  double lo = 0.0, hi = 1.0;
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double p[4] = {-dx, dx, -dy, dy};
  const double q[4] = {a.x - x0, x1 - a.x, a.y - y0, y1 - a.y};
  for (int i = 0; i < 4; ++i) {
    if (p[i] == 0.0) {
      if (q[i] < 0.0) return false;
      continue;
    }
    const double s = q[i] / p[i];
    if (p[i] < 0.0) lo = std::max(lo, s);
    else hi = std::min(hi, s);
    if (lo > hi) return false;
  }
  return true;
}

double path_loss_db(double distance_m, double freq_mhz, double path_loss_coeff) {
  return 20.0 * std::log10(freq_mhz) + path_loss_coeff * std::log10(std::max(distance_m, kDistanceFloorM)) - 28.0;
}

double crowd_attenuation(Point pos, const AccessPoint& ap, const Environment& env, std::size_t t) {
  if (t == 0) return 0.0;
  double total = 0.0;
  for (std::size_t z = 0; z < env.crowd_zones.size(); ++z) {
    const CrowdZone& zone = env.crowd_zones[z];
    if (zone.area.intersects_segment(ap.position, pos)) total += zone_level(zone, z, env, t);
  }
  return total;
}

double synth_rss(Point pos, const AccessPoint& ap, const Environment& env, std::size_t t) {
  double rss = ap.tx_power_dbm - path_loss_db(distance(pos, ap.position), ap.freq_mhz, env.path_loss_coeff);
  if (t == 0) return rss;
  rss -= crowd_attenuation(pos, ap, env, t);
  if (env.noise_sigma_db > 0.0) {
    std::mt19937_64 gen(mix_seed(env.rng_seed, {kNoiseStream, bits_of(pos.x), bits_of(pos.y),
                                                bits_of(ap.position.x), bits_of(ap.position.y), t}));
    std::normal_distribution<double> noise(0.0, env.noise_sigma_db);
    rss += noise(gen);
  }
  return rss;
}

RssDatabase::RssDatabase(std::vector<Point> positions, std::size_t n_ap, std::size_t n_samples)
    : positions_(std::move(positions)),
      n_ap_(n_ap),
      n_samples_(n_samples),
      values_(positions_.size() * n_ap * n_samples, 0.0) {}

Matrix RssDatabase::snapshot(std::size_t sample) const {
  require(sample < n_samples_, "sample index out of range");
  Matrix m(static_cast<Eigen::Index>(points()), static_cast<Eigen::Index>(n_ap_));
  for (std::size_t n = 0; n < points(); ++n)
    for (std::size_t l = 0; l < n_ap_; ++l) m(n, l) = at(n, l, sample);
  return m;
}

void RssDatabase::write(std::ostream& out) const {
  set_exact_precision(out);
  out << points() << ' ' << n_ap_ << ' ' << n_samples_ << '\n';
  for (const Point& p : positions_) out << p.x << ' ' << p.y << '\n';
  for (std::size_t n = 0; n < points(); ++n) {
    for (std::size_t l = 0; l < n_ap_; ++l) {
      out << n << ' ' << l;
      for (double v : series(n, l)) out << ' ' << v;
      out << '\n';
    }
  }
}

RssDatabase RssDatabase::read(std::istream& in) {
  std::size_t n_points = 0, n_ap = 0, n_samples = 0;
  if (!(in >> n_points >> n_ap >> n_samples)) fail(ErrorKind::validation, "bad RSS database header");
  std::vector<Point> positions(n_points);
  for (Point& p : positions)
    if (!(in >> p.x >> p.y)) fail(ErrorKind::validation, "truncated RSS database positions");
  RssDatabase db(std::move(positions), n_ap, n_samples);
  for (std::size_t row = 0; row < n_points * n_ap; ++row) {
    std::size_t n = 0, l = 0;
    if (!(in >> n >> l) || n >= n_points || l >= n_ap) fail(ErrorKind::validation, "bad RSS database row header");
    for (std::size_t k = 0; k < n_samples; ++k) {
      double v = 0;
      if (!(in >> v) || !std::isfinite(v)) fail(ErrorKind::validation, "bad RSS value in database");
      db.at(n, l, k) = v;
    }
  }
  return db;
}

RssDatabase build_database(std::span<const Point> points, std::span<const AccessPoint> aps, const Environment& env,
                           std::size_t n_samples) {
  require(n_samples >= 1, "database needs at least one sample");
  RssDatabase db(std::vector<Point>(points.begin(), points.end()), aps.size(), n_samples);
  for (std::size_t n = 0; n < points.size(); ++n)
    for (std::size_t l = 0; l < aps.size(); ++l)
      for (std::size_t k = 0; k < n_samples; ++k) db.at(n, l, k) = synth_rss(points[n], aps[l], env, k);
  return db;
}

Matrix synth_snapshot(std::span<const Point> points, std::span<const AccessPoint> aps, const Environment& env,
                      std::size_t t) {
  Matrix m(static_cast<Eigen::Index>(points.size()), static_cast<Eigen::Index>(aps.size()));
  for (std::size_t n = 0; n < points.size(); ++n)
    for (std::size_t l = 0; l < aps.size(); ++l) m(n, l) = synth_rss(points[n], aps[l], env, t);
  return m;
}

Matrix mp_stream(const RssDatabase& db, std::span<const std::size_t> exemplars, std::size_t t) {
  std::vector<std::size_t> sorted(exemplars.begin(), exemplars.end());
  std::sort(sorted.begin(), sorted.end());
  require(t < db.samples(), "sample index out of range");
  Matrix m(static_cast<Eigen::Index>(sorted.size()), static_cast<Eigen::Index>(db.aps()));
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    require(sorted[i] < db.points(), "exemplar index " + std::to_string(sorted[i]) + " out of range");
    for (std::size_t l = 0; l < db.aps(); ++l) m(i, l) = db.at(sorted[i], l, t);
  }
  return m;
}

}  // namespace salc
