#include "salc/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

namespace salc {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<double> numbers(std::string_view key, std::string_view value) {
  std::string text(value);
  std::replace(text.begin(), text.end(), ',', ' ');
  std::istringstream ls(text);
  std::vector<double> out;
  std::string token;
  while (ls >> token) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(token, &used));
      if (used != token.size()) throw std::invalid_argument(token);
    } catch (const std::exception&) {
      fail(ErrorKind::validation, "scenario key '" + std::string(key) + "': '" + token + "' is not a number");
    }
  }
  return out;
}

std::vector<double> numbers(std::string_view key, std::string_view value, std::size_t min_count,
                            std::size_t max_count) {
  auto v = numbers(key, value);
  require(v.size() >= min_count && v.size() <= max_count,
          "scenario key '" + std::string(key) + "' expects " + std::to_string(min_count) +
              (min_count == max_count ? "" : "-" + std::to_string(max_count)) + " values");
  return v;
}

double number(std::string_view key, std::string_view value) { return numbers(key, value, 1, 1)[0]; }

std::size_t count(std::string_view key, std::string_view value) {
  const double v = number(key, value);
  require(v >= 0 && v == std::floor(v), "scenario key '" + std::string(key) + "' must be a non-negative integer");
  return static_cast<std::size_t>(v);
}

}  // namespace

void Scenario::set(std::string_view key, std::string_view raw) {
  const std::string value = trim(raw);
  if (key == "map") {
    map_path = value;
  } else if (key == "ap") {
    const auto v = numbers(key, value, 2, 4);
    AccessPoint ap;
    ap.position = {v[0], v[1]};
    if (v.size() > 2) ap.tx_power_dbm = v[2];
    if (v.size() > 3) ap.freq_mhz = v[3];
    aps.push_back(ap);
  } else if (key == "rp_pitch") {
    rp_pitch = number(key, value);
  } else if (key == "rp_origin") {
    const auto v = numbers(key, value, 2, 2);
    rp_origin = {v[0], v[1]};
  } else if (key == "tp_count") {
    tp_count = count(key, value);
  } else if (key == "path_loss_coeff") {
    path_loss_coeff = number(key, value);
  } else if (key == "noise_sigma_db") {
    noise_sigma_db = number(key, value);
  } else if (key == "crowd_zone") {
    const auto v = numbers(key, value, 5, 6);
    crowd_zones.push_back({Rect{v[0], v[1], v[2], v[3]}, v[4], v.size() > 5 ? v[5] : 0.0});
  } else if (key == "samples") {
    samples = count(key, value);
  } else if (key == "pretrain_samples") {
    pretrain_samples = count(key, value);
  } else if (key == "omega") {
    const auto v = numbers(key, value, 3, 3);
    omega = {v[0], v[1], v[2]};
  } else if (key == "preference") {
    if (value == "median") preference.reset();
    else preference = number(key, value);
  } else if (key == "delta_orientation") {
    if (value == "literal") delta_orientation = DeltaOrientation::literal;
    else if (value == "inverted") delta_orientation = DeltaOrientation::inverted;
    else fail(ErrorKind::validation, "delta_orientation must be literal or inverted");
  } else if (key == "damping") {
    affinity.damping = number(key, value);
  } else if (key == "max_iter") {
    affinity.max_iter = static_cast<int>(count(key, value));
  } else if (key == "stable_iters") {
    affinity.stable_iters = static_cast<int>(count(key, value));
  } else if (key == "lr_eta") {
    lr.learning_rate = number(key, value);
  } else if (key == "lr_epochs") {
    lr.epochs = static_cast<int>(count(key, value));
  } else if (key == "nn_eta") {
    nn_eta = number(key, value);
  } else if (key == "nn_gamma") {
    nn_gamma = number(key, value);
  } else if (key == "nn_pretrain_iters") {
    nn_pretrain_iters = static_cast<int>(count(key, value));
  } else if (key == "nn_finetune_iters") {
    nn_finetune_iters = static_cast<int>(count(key, value));
  } else if (key == "nn_hidden") {
    nn_hidden.clear();
    for (double d : numbers(key, value)) {
      require(d >= 1 && d == std::floor(d), "nn_hidden sizes must be positive integers");
      nn_hidden.push_back(static_cast<std::size_t>(d));
    }
  } else if (key == "nn_batch") {
    nn_batch = count(key, value);
  } else if (key == "nn_input_scale") {
    nn_input_scale = number(key, value);
  } else if (key == "k") {
    k = count(key, value);
  } else if (key == "med_aggregation") {
    if (value == "joint") med_aggregation = MedAggregation::joint;
    else if (value == "per_ap") med_aggregation = MedAggregation::per_ap;
    else fail(ErrorKind::validation, "med_aggregation must be joint or per_ap");
  } else if (key == "skeleton_stride") {
    skeleton.vertex_stride = static_cast<int>(count(key, value));
  } else if (key == "seed") {
    const auto [end, ec] = std::from_chars(value.data(), value.data() + value.size(), seed);
    require(ec == std::errc() && end == value.data() + value.size(), "seed must be a non-negative integer");
  } else {
    fail(ErrorKind::validation, "unknown scenario key '" + std::string(key) + "'");
  }
}

Scenario Scenario::parse(std::istream& in, const std::filesystem::path& base_dir) {
  Scenario sc;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(ErrorKind::validation, "scenario line " + std::to_string(line_no) + ": expected key = value");
    try {
      sc.set(trim(std::string_view(line).substr(0, eq)), std::string_view(line).substr(eq + 1));
    } catch (const Error& e) {
      fail(e.kind(), "scenario line " + std::to_string(line_no) + ": " + e.what());
    } catch (const std::exception&) {
      fail(ErrorKind::validation, "scenario line " + std::to_string(line_no) + ": bad value");
    }
  }
  if (!sc.map_path.empty() && sc.map_path.is_relative() && !base_dir.empty()) sc.map_path = base_dir / sc.map_path;
  sc.validate();
  return sc;
}

Scenario Scenario::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open scenario " + path.string());
  return parse(in, path.parent_path());
}

void Scenario::validate() const {
  require(!map_path.empty(), "scenario needs a map");
  require(!aps.empty(), "scenario needs at least one AP");
  require(rp_pitch > 0, "rp_pitch must be positive");
  require(noise_sigma_db >= 0, "noise_sigma_db must be non-negative");
  require(path_loss_coeff > 0, "path_loss_coeff must be positive");
  require(samples >= 1, "samples must be at least 1");
  require(pretrain_samples >= 1 && pretrain_samples <= samples, "pretrain_samples must lie in [1, samples]");
  require(omega.rss >= 0 && omega.ssp >= 0 && omega.delta >= 0 && omega.rss + omega.ssp + omega.delta > 0,
          "omega must be non-negative and not all zero");
  require(affinity.damping >= 0 && affinity.damping < 1, "damping must lie in [0, 1)");
  require(affinity.max_iter >= 1 && affinity.stable_iters >= 1, "max_iter and stable_iters must be positive");
  require(lr.learning_rate > 0 && lr.epochs >= 1, "lr_eta must be positive and lr_epochs at least 1");
  require(nn_eta >= 0 && nn_gamma > 0, "nn_eta must be non-negative and nn_gamma positive");
  require(nn_input_scale > 0, "nn_input_scale must be positive");
  require(k >= 1, "k must be at least 1");
  require(skeleton.vertex_stride >= 1, "skeleton_stride must be at least 1");
  for (const CrowdZone& z : crowd_zones)
    require(z.area.x0 <= z.area.x1 && z.area.y0 <= z.area.y1 && z.temporal_jitter_db >= 0, "bad crowd_zone");
}

void Scenario::write(std::ostream& out) const {
  set_exact_precision(out);
  out << "map = " << map_path.string() << '\n';
  for (const AccessPoint& ap : aps)
    out << "ap = " << ap.position.x << ' ' << ap.position.y << ' ' << ap.tx_power_dbm << ' ' << ap.freq_mhz << '\n';
  out << "rp_pitch = " << rp_pitch << '\n';
  out << "rp_origin = " << rp_origin.x << ' ' << rp_origin.y << '\n';
  out << "tp_count = " << tp_count << '\n';
  out << "path_loss_coeff = " << path_loss_coeff << '\n';
  out << "noise_sigma_db = " << noise_sigma_db << '\n';
  for (const CrowdZone& z : crowd_zones) {
    out << "crowd_zone = " << z.area.x0 << ' ' << z.area.y0 << ' ' << z.area.x1 << ' ' << z.area.y1 << ' '
        << z.extra_attenuation_db << ' ' << z.temporal_jitter_db << '\n';
  }
  out << "samples = " << samples << '\n';
  out << "pretrain_samples = " << pretrain_samples << '\n';
  out << "omega = " << omega.rss << ' ' << omega.ssp << ' ' << omega.delta << '\n';
  out << "preference = ";
  if (preference) out << *preference << '\n';
  else out << "median\n";
  out << "delta_orientation = " << (delta_orientation == DeltaOrientation::literal ? "literal" : "inverted") << '\n';
  out << "damping = " << affinity.damping << '\n';
  out << "max_iter = " << affinity.max_iter << '\n';
  out << "stable_iters = " << affinity.stable_iters << '\n';
  out << "lr_eta = " << lr.learning_rate << '\n';
  out << "lr_epochs = " << lr.epochs << '\n';
  out << "nn_eta = " << nn_eta << '\n';
  out << "nn_gamma = " << nn_gamma << '\n';
  out << "nn_pretrain_iters = " << nn_pretrain_iters << '\n';
  out << "nn_finetune_iters = " << nn_finetune_iters << '\n';
  out << "nn_hidden =";
  for (std::size_t h : nn_hidden) out << ' ' << h;
  out << '\n';
  out << "nn_batch = " << nn_batch << '\n';
  out << "nn_input_scale = " << nn_input_scale << '\n';
  out << "k = " << k << '\n';
  out << "med_aggregation = " << (med_aggregation == MedAggregation::joint ? "joint" : "per_ap") << '\n';
  out << "skeleton_stride = " << skeleton.vertex_stride << '\n';
  out << "seed = " << seed << '\n';
}

Environment Scenario::environment() const {
  Environment env;
  env.path_loss_coeff = path_loss_coeff;
  env.noise_sigma_db = noise_sigma_db;
  env.crowd_zones = crowd_zones;
  env.rng_seed = synthesis_seed();
  return env;
}

Environment Scenario::noise_free_environment() const {
  Environment env = environment();
  env.noise_sigma_db = 0.0;
  return env;
}

TrainOptions Scenario::pretrain_options() const {
  return {nn_eta, nn_gamma, nn_pretrain_iters, nn_batch, mix_seed(batch_seed(), "pretrain")};
}

TrainOptions Scenario::finetune_options() const {
  return {nn_eta, nn_gamma, nn_finetune_iters, nn_batch, mix_seed(batch_seed(), "finetune")};
}

std::vector<Point> reference_grid(const FloorMap& map, Point origin, double pitch) {
  require(pitch > 0, "grid pitch must be positive");
  std::vector<Point> out;
  for (int j = 0;; ++j) {
    const double y = origin.y + j * pitch;
    if (y >= map.height_m()) break;
    for (int i = 0;; ++i) {
      const double x = origin.x + i * pitch;
      if (x >= map.width_m()) break;
      if (x >= 0 && y >= 0 && map.walkable(Point{x, y})) out.push_back({x, y});
    }
  }
  return out;
}

std::vector<Point> random_test_points(const FloorMap& map, std::size_t count, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> ux(0.0, map.width_m()), uy(0.0, map.height_m());
  std::vector<Point> out;
  out.reserve(count);
  std::size_t attempts = 0;
  while (out.size() < count) {
    require(++attempts < 1000 * (count + 1), "map has too little free space for test points");
    const Point p{ux(gen), uy(gen)};
    const Cell c = map.cell_at(p);
    bool clear = true;
    for (int dr = -1; dr <= 1 && clear; ++dr)
      for (int dc = -1; dc <= 1 && clear; ++dc) clear = map.walkable(Cell{c.col + dc, c.row + dr});
    if (clear) out.push_back(p);
  }
  return out;
}

void write_points(std::ostream& out, const std::vector<Point>& points) {
  set_exact_precision(out);
  out << points.size() << '\n';
  for (const Point& p : points) out << p.x << ' ' << p.y << '\n';
}

std::vector<Point> read_points(std::istream& in) {
  std::size_t n = 0;
  if (!(in >> n)) fail(ErrorKind::validation, "bad point list header");
  std::vector<Point> out(n);
  for (Point& p : out)
    if (!(in >> p.x >> p.y)) fail(ErrorKind::validation, "truncated point list");
  return out;
}

}  // namespace salc
