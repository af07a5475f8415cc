#include "salc/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <future>
#include <numeric>
#include <sstream>

namespace salc {
namespace {

template <typename F>
auto in_stage(std::string_view stage, F&& body) {
  try {
    return body();
  } catch (const Error& e) {
    fail(e.kind(), std::string(stage) + ": " + e.what());
  }
}

bool wants(std::span<const MethodId> methods, DbKind db) {
  return std::any_of(methods.begin(), methods.end(), [db](const MethodId& m) { return m.db == db; });
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::io, "cannot write " + path.string());
  return out;
}

void check_written(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) fail(ErrorKind::io, "failed writing " + path.string());
}

std::vector<Point> exemplar_positions(const Artifacts& a) {
  std::vector<Point> out;
  for (std::size_t mu : a.clusters->exemplars) out.push_back(a.rps[mu]);
  return out;
}

void train_networks(const Scenario& sc, Artifacts& a) {
  a.networks.clear();
  a.nn_diverged = false;
  a.divergence_message.clear();
  const RssDatabase& db = *a.db;
  require(db.samples() >= 2, "CODE-NN needs at least one time sample");
  try {
    for (std::size_t l = 0; l < db.aps(); ++l) {
      const DeltaSamples all = preprocess(db, *a.clusters, l);
      const DeltaSamples early = all.columns(0, static_cast<Eigen::Index>(sc.pretrain_samples));
      NetworkParams init = init_network(a.clusters->n_mp(), db.points(), sc.nn_hidden, sc.init_seed(), l);
      init.input_scale = sc.nn_input_scale;
      TrainOptions pre = sc.pretrain_options(), fine = sc.finetune_options();
      pre.batch_seed = mix_seed(pre.batch_seed, {l});
      fine.batch_seed = mix_seed(fine.batch_seed, {l});
      const TrainResult p = pretrain(early, std::move(init), pre);
      a.networks.push_back(finetune(p.params, all, fine).params);
    }
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::divergence) throw;
    a.networks.clear();
    a.nn_diverged = true;
    a.divergence_message = e.what();
  }
}

}  // namespace

std::string_view db_name(DbKind db) {
  switch (db) {
    case DbKind::original: return "original";
    case DbKind::true_db: return "true";
    case DbKind::lr: return "lr";
    case DbKind::nn: return "nn";
  }
  return "?";
}

std::string_view estimator_name(Estimator e) { return e == Estimator::csle ? "csle" : "wknn"; }

std::string method_label(MethodId m) {
  return std::string(estimator_name(m.estimator)) + "+" + std::string(db_name(m.db));
}

std::vector<MethodId> all_methods() {
  std::vector<MethodId> out;
  for (Estimator e : {Estimator::csle, Estimator::wknn})
    for (DbKind d : {DbKind::original, DbKind::true_db, DbKind::lr, DbKind::nn}) out.push_back({e, d});
  return out;
}

std::vector<MethodId> parse_methods(std::string_view text) {
  std::vector<MethodId> out;
  std::string list(text);
  std::replace(list.begin(), list.end(), ',', ' ');
  std::istringstream ls(list);
  std::string token;
  while (ls >> token) {
    if (token == "all") {
      for (MethodId m : all_methods()) out.push_back(m);
      continue;
    }
    const auto plus = token.find('+');
    require(plus != std::string::npos, "method '" + token + "' must look like csle+nn");
    const std::string est = token.substr(0, plus), db = token.substr(plus + 1);
    bool matched = false;
    for (MethodId m : all_methods()) {
      const bool est_ok = est == "*" || est == estimator_name(m.estimator);
      const bool db_ok = db == "*" || db == db_name(m.db);
      if (est_ok && db_ok) {
        out.push_back(m);
        matched = true;
      }
    }
    require(matched, "unknown method '" + token + "'");
  }
  require(!out.empty(), "no methods selected");
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

MethodReport summarize(MethodId method, std::vector<EstimateRecord> records) {
  MethodReport r;
  r.method = method;
  r.records = std::move(records);
  if (r.records.empty()) return r;
  std::vector<double> errors;
  for (const EstimateRecord& rec : r.records) errors.push_back(rec.error_m);
  r.mean_m = std::accumulate(errors.begin(), errors.end(), 0.0) / static_cast<double>(errors.size());
  std::sort(errors.begin(), errors.end());
  const std::size_t n = errors.size();
  r.median_m = n % 2 == 1 ? errors[n / 2] : 0.5 * (errors[n / 2 - 1] + errors[n / 2]);
  for (std::size_t i = 0; i < n; ++i)
    r.cdf.push_back({errors[i], static_cast<double>(i + 1) / static_cast<double>(n)});
  return r;
}

const MethodReport* EvaluationReport::find(MethodId m) const {
  for (const MethodReport& r : methods)
    if (r.method == m) return &r;
  return nullptr;
}

void invalidate(Artifacts& a, Stage from) {
  switch (from) {
    case Stage::skeleton:
      a.skeleton.reset();
      a.ssp.reset();
      [[fallthrough]];
    case Stage::synth:
      a.rps.clear();
      a.tps.clear();
      a.db.reset();
      [[fallthrough]];
    case Stage::cluster:
      a.clusters.reset();
      a.lr.reset();
      a.networks.clear();
      a.nn_diverged = false;
      a.divergence_message.clear();
      break;
    case Stage::train_lr:
      a.lr.reset();
      break;
    case Stage::train_nn:
      a.networks.clear();
      a.nn_diverged = false;
      a.divergence_message.clear();
      break;
  }
}

void prepare_through(const Scenario& sc, Artifacts& a, Stage last) {
  sc.validate();
  in_stage("skeleton", [&] {
    if (!a.map) {
      try {
        a.map = FloorMap::load(sc.map_path);
      } catch (const Error&) {
        throw;
      } catch (const std::exception& e) {
        fail(ErrorKind::io, std::string("cannot load map: ") + e.what());
      }
    }
    if (!a.skeleton) a.skeleton = build_skeleton(*a.map, sc.skeleton);
    if (!a.ssp) a.ssp = shortest_path_matrix(*a.skeleton);
  });
  if (last == Stage::skeleton) return;

  in_stage("synth", [&] {
    if (a.rps.empty()) a.rps = reference_grid(*a.map, sc.rp_origin, sc.rp_pitch);
    require(a.rps.size() >= 2, "scenario yields fewer than two reference points");
    if (a.tps.empty()) a.tps = random_test_points(*a.map, sc.tp_count, sc.tp_seed());
    if (!a.db) a.db = build_database(a.rps, sc.aps, sc.environment(), sc.samples + 1);
    require(a.db->points() == a.rps.size() && a.db->aps() == sc.aps.size(), "database does not match the scenario");
  });
  if (last == Stage::synth) return;

  in_stage("cluster", [&] {
    if (a.clusters) return;
    const SimilarityMatrix sim =
        build_similarity(*a.db, a.rps, *a.skeleton, *a.ssp, sc.omega, sc.preference, sc.delta_orientation);
    a.clusters = affinity_propagation(sim.s, sc.affinity);
  });
  if (last == Stage::cluster) return;

  in_stage("train-lr", [&] {
    if (!a.lr) a.lr = fit_linear_models(*a.db, *a.clusters, sc.lr);
  });
  if (last == Stage::train_lr) return;

  in_stage("train-nn", [&] {
    if (a.networks.empty() && !a.nn_diverged) train_networks(sc, a);
  });
}

void prepare(const Scenario& sc, Artifacts& a, std::span<const MethodId> methods) {
  prepare_through(sc, a, Stage::cluster);
  if (wants(methods, DbKind::lr)) prepare_through(sc, a, Stage::train_lr);
  if (wants(methods, DbKind::nn)) {
    in_stage("train-nn", [&] {
      if (a.networks.empty() && !a.nn_diverged) train_networks(sc, a);
    });
  }
}

EvaluationReport evaluate(const Scenario& sc, const Artifacts& a, std::span<const MethodId> methods) {
  return in_stage("evaluate", [&] {
    require(a.db && a.clusters && !a.rps.empty(), "artifacts are incomplete");
    const bool use_lr = wants(methods, DbKind::lr);
    const bool use_nn = wants(methods, DbKind::nn) && !a.nn_diverged;
    require(!use_lr || a.lr, "CODE-LR models missing");
    require(!use_nn || a.networks.size() == sc.aps.size(), "CODE-NN networks missing");
    require(sc.k <= a.rps.size(), "k exceeds the number of reference points");

    const Environment env = sc.environment();
    const Environment clean = sc.noise_free_environment();
    const std::vector<Point> mp_positions = exemplar_positions(a);
    const Matrix original = a.db->snapshot(0);
    const Matrix mp_reference = mp_stream(*a.db, a.clusters->exemplars, 0);

    std::map<MethodId, std::vector<EstimateRecord>> records;
    std::map<DbKind, double> mae_sum;
    EvaluationReport report;
    report.clusters = *a.clusters;
    report.nn_diverged = a.nn_diverged;
    report.divergence_message = a.divergence_message;
    report.rps = a.rps;

    for (std::size_t i = 0; i < a.tps.size(); ++i) {
      const std::size_t t = sc.samples + 1 + i;
      const Matrix truth = synth_snapshot(a.rps, sc.aps, clean, t);
      const Vector user = synth_snapshot(std::span<const Point>(&a.tps[i], 1), sc.aps, env, t).row(0).transpose();
      const Matrix mp_now = synth_snapshot(mp_positions, sc.aps, env, t);

      std::map<DbKind, Matrix> dbs;
      dbs[DbKind::original] = original;
      dbs[DbKind::true_db] = truth;
      if (use_lr) dbs[DbKind::lr] = reconstruct_linear(*a.lr, mp_now);
      if (use_nn) dbs[DbKind::nn] = reconstruct_nn(a.networks, mp_now, mp_reference, original);

      for (const auto& [kind, m] : dbs) mae_sum[kind] += (m - truth).cwiseAbs().mean();
      if (i == 0) {
        report.snapshot_t = t;
        report.ground_truth = truth;
        report.snapshot_db = dbs;
      }
      for (const MethodId& id : methods) {
        const auto it = dbs.find(id.db);
        if (it == dbs.end()) continue;
        const PositionEstimate est =
            id.estimator == Estimator::csle
                ? csle_locate(it->second, *a.clusters, user, a.rps, sc.k, sc.med_aggregation)
                : wknn_baseline(it->second, user, a.rps, sc.k);
        records[id].push_back({i, a.tps[i], est.xy, distance(est.xy, a.tps[i])});
      }
    }
    for (const MethodId& id : methods) {
      if (id.db == DbKind::nn && !use_nn) continue;
      report.methods.push_back(summarize(id, std::move(records[id])));
    }
    if (!a.tps.empty())
      for (const auto& [kind, sum] : mae_sum) report.rss_mae[kind] = sum / static_cast<double>(a.tps.size());
    return report;
  });
}

EvaluationReport run_pipeline(const Scenario& scenario, std::span<const MethodId> methods) {
  Artifacts a;
  prepare(scenario, a, methods);
  return evaluate(scenario, a, methods);
}

void save_artifacts(const std::filesystem::path& dir, const Artifacts& a) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorKind::io, "cannot create " + dir.string() + ": " + ec.message());
  auto emit = [&](const char* name, auto&& writer) {
    const auto path = dir / name;
    std::ofstream out = open_out(path);
    writer(out);
    check_written(out, path);
  };
  if (a.skeleton) emit("skeleton.txt", [&](std::ostream& o) { write_skeleton(o, *a.skeleton); });
  if (!a.rps.empty()) emit("rps.txt", [&](std::ostream& o) { write_points(o, a.rps); });
  if (!a.tps.empty()) emit("tps.txt", [&](std::ostream& o) { write_points(o, a.tps); });
  if (a.db) emit("rss_db.txt", [&](std::ostream& o) { a.db->write(o); });
  if (a.clusters) emit("clusters.txt", [&](std::ostream& o) { a.clusters->write(o); });
  if (a.lr) emit("lr_models.txt", [&](std::ostream& o) { a.lr->write(o); });
  if (!a.networks.empty()) emit("nn_params.txt", [&](std::ostream& o) { write_networks(o, a.networks); });
}

Artifacts load_artifacts(const std::filesystem::path& dir) {
  Artifacts a;
  auto open = [&](const char* name) -> std::optional<std::ifstream> {
    const auto path = dir / name;
    if (!std::filesystem::exists(path)) return std::nullopt;
    std::ifstream in(path);
    if (!in) fail(ErrorKind::io, "cannot read " + path.string());
    return in;
  };
  if (auto in = open("skeleton.txt")) a.skeleton = read_skeleton(*in);
  if (auto in = open("rps.txt")) a.rps = read_points(*in);
  if (auto in = open("tps.txt")) a.tps = read_points(*in);
  if (auto in = open("rss_db.txt")) a.db = RssDatabase::read(*in);
  if (auto in = open("clusters.txt")) a.clusters = ClusterModel::read(*in);
  if (auto in = open("lr_models.txt")) {
    require(a.clusters.has_value(), "lr_models.txt needs clusters.txt");
    a.lr = LinearModelSet::read(*in, *a.clusters);
  }
  if (auto in = open("nn_params.txt")) a.networks = read_networks(*in);
  return a;
}

SweepParameter parse_sweep_parameter(std::string_view name) {
  if (name == "k") return SweepParameter::k;
  if (name == "eta") return SweepParameter::eta;
  if (name == "gamma") return SweepParameter::gamma;
  if (name == "preference") return SweepParameter::preference;
  fail(ErrorKind::validation, "sweep parameter must be one of k, eta, gamma, preference");
}

namespace {

template <typename Job>
auto run_jobs(std::size_t count, unsigned jobs, Job job) {
  using Result = decltype(job(std::size_t{0}));
  std::vector<Result> out;
  out.reserve(count);
  if (jobs <= 1) {
    for (std::size_t i = 0; i < count; ++i) out.push_back(job(i));
    return out;
  }
  for (std::size_t start = 0; start < count; start += jobs) {
    std::vector<std::future<Result>> batch;
    for (std::size_t i = start; i < std::min(count, start + jobs); ++i)
      batch.push_back(std::async(std::launch::async, job, i));
    for (auto& f : batch) out.push_back(f.get());
  }
  return out;
}

}  // namespace

std::vector<EvaluationReport> sweep(const Scenario& scenario, SweepParameter parameter, std::span<const double> values,
                                    std::span<const MethodId> methods, unsigned jobs) {
  Artifacts base;
  std::optional<Stage> redo;
  switch (parameter) {
    case SweepParameter::k: prepare(scenario, base, methods); break;
    case SweepParameter::eta:
    case SweepParameter::gamma:
      redo = Stage::train_nn;
      prepare_through(scenario, base, Stage::cluster);
      if (wants(methods, DbKind::lr)) prepare_through(scenario, base, Stage::train_lr);
      break;
    case SweepParameter::preference:
      redo = Stage::cluster;
      prepare_through(scenario, base, Stage::synth);
      break;
  }
  return run_jobs(values.size(), jobs, [&](std::size_t i) {
    Scenario sc = scenario;
    const double v = values[i];
    switch (parameter) {
      case SweepParameter::k:
        require(v >= 1 && v == std::floor(v), "k values must be positive integers");
        sc.k = static_cast<std::size_t>(v);
        break;
      case SweepParameter::eta: sc.nn_eta = v; break;
      case SweepParameter::gamma: sc.nn_gamma = v; break;
      case SweepParameter::preference: sc.preference = v; break;
    }
    Artifacts a = base;
    if (redo) invalidate(a, *redo);
    prepare(sc, a, methods);
    return evaluate(sc, a, methods);
  });
}

std::vector<AblationResult> ablate_similarity(const Scenario& scenario, std::span<const MethodId> methods,
                                              unsigned jobs) {
  const std::vector<std::pair<std::string, SimilarityWeights>> variants = {
      {"rss", {1.0, 0.0, 0.0}},
      {"ssp", {0.0, 1.0, 0.0}},
      {"delta", {0.0, 0.0, 1.0}},
      {"combined", scenario.omega},
  };
  Artifacts base;
  prepare_through(scenario, base, Stage::synth);
  return run_jobs(variants.size(), jobs, [&](std::size_t i) {
    Scenario sc = scenario;
    sc.omega = variants[i].second;
    Artifacts a = base;
    prepare(sc, a, methods);
    return AblationResult{variants[i].first, sc.omega, evaluate(sc, a, methods)};
  });
}

}  // namespace salc
