#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "salc/scenario.hpp"

namespace salc {

enum class DbKind { original, true_db, lr, nn };
enum class Estimator { csle, wknn };

struct MethodId {
  Estimator estimator = Estimator::csle;
  DbKind db = DbKind::nn;
  friend auto operator<=>(const MethodId&, const MethodId&) = default;
};

std::string_view db_name(DbKind db);
std::string_view estimator_name(Estimator e);
/// e.g. "csle+nn", "wknn+original".
std::string method_label(MethodId m);
/// Accepts "csle+nn", "wknn+true", ... and the wildcard "all".
std::vector<MethodId> parse_methods(std::string_view text);
std::vector<MethodId> all_methods();

struct CdfPoint {
  double error_m = 0.0;
  double cumulative = 0.0;
};

struct MethodReport {
  MethodId method;
  std::vector<EstimateRecord> records;
  double mean_m = 0.0;
  double median_m = 0.0;
  std::vector<CdfPoint> cdf;
};

/// Mean, median and empirical CDF of the record errors.
MethodReport summarize(MethodId method, std::vector<EstimateRecord> records);

struct EvaluationReport {
  std::vector<MethodReport> methods;
  // Mean |db - ground truth| over TPs, RPs and APs.
  std::map<DbKind, double> rss_mae;
  ClusterModel clusters;
  bool nn_diverged = false;
  std::string divergence_message;

  // Databases at the first TP's time sample, for per-RP error grids.
  std::vector<Point> rps;
  std::size_t snapshot_t = 0;
  Matrix ground_truth;
  std::map<DbKind, Matrix> snapshot_db;

  std::size_t cluster_count() const { return clusters.n_mp(); }
  const MethodReport* find(MethodId m) const;
};

/// Intermediate results. Empty members are computed by prepare(); filled
/// ones (for example loaded from disk) are reused as they are.
struct Artifacts {
  std::optional<FloorMap> map;
  std::optional<Skeleton> skeleton;
  std::optional<SspMatrix> ssp;
  std::vector<Point> rps;
  std::vector<Point> tps;
  std::optional<RssDatabase> db;
  std::optional<ClusterModel> clusters;
  std::optional<LinearModelSet> lr;
  std::vector<NetworkParams> networks;
  bool nn_diverged = false;
  std::string divergence_message;
};

enum class Stage { skeleton, synth, cluster, train_lr, train_nn };

/// Clears the given stage and everything that depends on it.
void invalidate(Artifacts& artifacts, Stage from);

/// Runs every missing stage needed by the requested methods. Module errors
/// are rethrown with the stage name prefixed; CODE-NN divergence is recorded
/// in the artifacts instead.
void prepare(const Scenario& scenario, Artifacts& artifacts, std::span<const MethodId> methods);
void prepare_through(const Scenario& scenario, Artifacts& artifacts, Stage last);

/// Per-TP reconstruction and estimation. TP i is observed at sample
/// samples + 1 + i.
EvaluationReport evaluate(const Scenario& scenario, const Artifacts& artifacts, std::span<const MethodId> methods);

EvaluationReport run_pipeline(const Scenario& scenario, std::span<const MethodId> methods);
inline EvaluationReport run_pipeline(const Scenario& scenario) { return run_pipeline(scenario, all_methods()); }

/// One file per present artifact: skeleton.txt, rps.txt, tps.txt, rss_db.txt,
/// clusters.txt, lr_models.txt, nn_params.txt.
void save_artifacts(const std::filesystem::path& dir, const Artifacts& artifacts);
Artifacts load_artifacts(const std::filesystem::path& dir);

enum class SweepParameter { k, eta, gamma, preference };
SweepParameter parse_sweep_parameter(std::string_view name);

/// One report per value with all other settings and seeds shared. Stages
/// the parameter does not touch are computed once. jobs > 1 runs values
/// concurrently.
std::vector<EvaluationReport> sweep(const Scenario& scenario, SweepParameter parameter, std::span<const double> values,
                                    std::span<const MethodId> methods, unsigned jobs = 1);

struct AblationResult {
  std::string label;  // rss, ssp, delta, combined
  SimilarityWeights omega;
  EvaluationReport report;
};

/// ROMAC with RSS-only, SSP-only, delta-only and combined weights, each
/// feeding CODE-NN.
std::vector<AblationResult> ablate_similarity(const Scenario& scenario, std::span<const MethodId> methods,
                                              unsigned jobs = 1);

}  // namespace salc
