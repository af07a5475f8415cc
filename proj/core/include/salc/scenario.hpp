#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "salc/code_lr.hpp"
#include "salc/code_nn.hpp"
#include "salc/csle.hpp"
#include "salc/floorplan.hpp"
#include "salc/radio.hpp"
#include "salc/romac.hpp"

namespace salc {

/// Experiment configuration. Text form is one `key = value` per line with
/// `#` comments; `ap` and `crowd_zone` may repeat.
struct Scenario {
  std::filesystem::path map_path;
  std::vector<AccessPoint> aps;
  double rp_pitch = 1.2;
  Point rp_origin{0.4, 0.8};
  std::size_t tp_count = 89;

  double path_loss_coeff = 30.0;
  double noise_sigma_db = 1.0;
  std::vector<CrowdZone> crowd_zones;
  std::size_t samples = 40;
  std::size_t pretrain_samples = 20;

  SimilarityWeights omega;
  std::optional<double> preference;  // nullopt: column median
  DeltaOrientation delta_orientation = DeltaOrientation::literal;
  AffinityOptions affinity;

  LinearFitOptions lr;
  double nn_eta = 0.1;
  double nn_gamma = 1.0;
  int nn_pretrain_iters = 2000;
  int nn_finetune_iters = 2000;
  std::vector<std::size_t> nn_hidden = kDefaultHiddenSizes;
  std::size_t nn_batch = 0;
  double nn_input_scale = 20.0;

  std::size_t k = 3;
  MedAggregation med_aggregation = MedAggregation::joint;
  SkeletonOptions skeleton;

  std::uint64_t seed = 1;

  static Scenario parse(std::istream& in, const std::filesystem::path& base_dir = {});
  static Scenario load(const std::filesystem::path& path);
  void write(std::ostream& out) const;

  /// Sets one key from its text value, as in the file format. Repeatable
  /// keys append.
  void set(std::string_view key, std::string_view value);
  void validate() const;

  /// Stage seeds derived from `seed`; changing one stage's inputs leaves the
  /// others' random streams untouched.
  std::uint64_t synthesis_seed() const { return mix_seed(seed, "synthesis"); }
  std::uint64_t init_seed() const { return mix_seed(seed, "init"); }
  std::uint64_t batch_seed() const { return mix_seed(seed, "batching"); }
  std::uint64_t tp_seed() const { return mix_seed(seed, "tp"); }

  Environment environment() const;
  /// Same crowd state, no receiver noise.
  Environment noise_free_environment() const;
  TrainOptions pretrain_options() const;
  TrainOptions finetune_options() const;
};

/// Walkable grid points origin + pitch * (i, j) inside the map, ordered by
/// row then column.
std::vector<Point> reference_grid(const FloorMap& map, Point origin, double pitch);

/// Uniform walkable positions at least one cell away from any obstacle.
std::vector<Point> random_test_points(const FloorMap& map, std::size_t count, std::uint64_t seed);

void write_points(std::ostream& out, const std::vector<Point>& points);
std::vector<Point> read_points(std::istream& in);

}  // namespace salc
