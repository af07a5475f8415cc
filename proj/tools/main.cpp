#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "salc/pipeline.hpp"
#include "salc/report.hpp"

namespace fs = std::filesystem;
using namespace salc;

namespace {

struct Common {
  std::string scenario_path = "data/reference.scenario";
  std::optional<std::uint64_t> seed;
  std::string out_dir = "out";
  std::string from_dir;
  bool fresh = false;
  std::vector<std::string> overrides;
  std::string methods = "all";
};

Scenario load_scenario(const Common& c) {
  Scenario sc = Scenario::load(c.scenario_path);
  for (const std::string& kv : c.overrides) {
    const auto eq = kv.find('=');
    require(eq != std::string::npos, "--set expects key=value, got '" + kv + "'");
    sc.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (c.seed) sc.seed = *c.seed;
  sc.validate();
  return sc;
}

// Stage commands resume from the output directory unless told otherwise.
Artifacts starting_artifacts(const Common& c, bool resume_by_default) {
  if (c.fresh) return {};
  const std::string dir = !c.from_dir.empty() ? c.from_dir : (resume_by_default ? c.out_dir : "");
  if (dir.empty() || !fs::exists(dir)) return {};
  return load_artifacts(dir);
}

void write_matrix_file(const fs::path& path, const Matrix& m) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::io, "cannot write " + path.string());
  write_similarity(out, m);
  if (!out) fail(ErrorKind::io, "failed writing " + path.string());
}

void print_summary(const EvaluationReport& r) {
  write_summary(std::cout, r);
  write_rss_mae(std::cout, r);
  std::cout << "clusters," << r.cluster_count() << '\n';
  if (r.nn_diverged) std::cout << "nn_diverged," << r.divergence_message << '\n';
}

void add_common(CLI::App* cmd, Common& c, bool with_methods) {
  cmd->add_option("-c,--scenario", c.scenario_path, "Scenario file")->capture_default_str();
  cmd->add_option("--seed", c.seed, "Override the scenario seed");
  cmd->add_option("-o,--out-dir", c.out_dir, "Output directory")->capture_default_str();
  cmd->add_option("--from", c.from_dir, "Load existing artifacts from this directory");
  cmd->add_flag("--fresh", c.fresh, "Ignore artifacts already in the output directory");
  cmd->add_option("--set", c.overrides, "Override a scenario key, key=value (repeatable)");
  if (with_methods)
    cmd->add_option("-m,--method", c.methods, "Methods, e.g. csle+nn,wknn+original or all")->capture_default_str();
}

int stage_command(const Common& c, Stage stage) {
  const Scenario sc = load_scenario(c);
  Artifacts a = starting_artifacts(c, true);
  if (stage == Stage::train_nn) {
    prepare_through(sc, a, Stage::cluster);
    const MethodId nn{Estimator::csle, DbKind::nn};
    prepare(sc, a, std::span<const MethodId>(&nn, 1));
  } else {
    prepare_through(sc, a, stage);
  }
  save_artifacts(c.out_dir, a);
  if (stage == Stage::cluster) {
    std::cout << "clusters " << a.clusters->n_mp() << (a.clusters->converged ? "" : " (not converged)") << '\n';
    a.clusters->write(std::cout);
  }
  if (a.nn_diverged) {
    std::cerr << "salc: " << a.divergence_message << '\n';
    return static_cast<int>(ErrorKind::divergence);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"salc: crowd-adaptive RSS fingerprint localization"};
  app.require_subcommand(1);
  Common c;

  struct StageCmd {
    const char* name;
    const char* help;
    Stage stage;
  };
  const std::vector<StageCmd> stages = {
      {"skeleton", "Build the map skeleton", Stage::skeleton},
      {"synth", "Synthesize the RP database and test points", Stage::synth},
      {"cluster", "ROMAC clustering; exemplars become monitor points", Stage::cluster},
      {"train-lr", "Fit CODE-LR models", Stage::train_lr},
      {"train-nn", "Train CODE-NN networks", Stage::train_nn},
  };
  std::vector<std::pair<CLI::App*, Stage>> stage_cmds;
  for (const StageCmd& s : stages) {
    CLI::App* cmd = app.add_subcommand(s.name, s.help);
    add_common(cmd, c, false);
    stage_cmds.emplace_back(cmd, s.stage);
  }

  std::size_t tp = 0;
  auto* reconstruct = app.add_subcommand("reconstruct", "Adaptive databases at one test point's time sample");
  add_common(reconstruct, c, true);
  reconstruct->add_option("--tp", tp, "Test point index")->capture_default_str();

  auto* locate = app.add_subcommand("locate", "Estimate test point positions");
  add_common(locate, c, true);

  auto* evaluate_cmd = app.add_subcommand("evaluate", "Full pipeline run with plot data");
  add_common(evaluate_cmd, c, true);

  std::string param;
  std::vector<double> values;
  unsigned jobs = 1;
  auto* sweep_cmd = app.add_subcommand("sweep", "One run per parameter value");
  add_common(sweep_cmd, c, true);
  sweep_cmd->add_option("-p,--param", param, "k, eta, gamma or preference")->required();
  sweep_cmd->add_option("-v,--values", values, "Values to try")->required()->delimiter(',');
  sweep_cmd->add_option("-j,--jobs", jobs, "Concurrent runs")->capture_default_str();

  auto* ablate = app.add_subcommand("ablate", "ROMAC similarity ablation");
  add_common(ablate, c, true);
  ablate->add_option("-j,--jobs", jobs, "Concurrent runs")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ErrorKind::validation);
  }

  try {
    for (const auto& [cmd, stage] : stage_cmds)
      if (cmd->parsed()) return stage_command(c, stage);

    const std::vector<MethodId> methods = parse_methods(c.methods);

    if (reconstruct->parsed()) {
      const Scenario sc = load_scenario(c);
      Artifacts a = starting_artifacts(c, true);
      prepare(sc, a, methods);
      require(tp < a.tps.size(), "test point index out of range");
      Scenario one = sc;
      Artifacts single = a;
      single.tps = {a.tps[tp]};
      // Evaluate TP `tp` alone at its own time sample.
      one.samples = sc.samples + tp;
      const EvaluationReport r = evaluate(one, single, methods);
      save_artifacts(c.out_dir, a);
      for (const auto& [db, m] : r.snapshot_db)
        write_matrix_file(fs::path(c.out_dir) / ("adaptive_" + std::string(db_name(db)) + ".txt"), m);
      write_rss_mae(std::cout, r);
      return a.nn_diverged ? static_cast<int>(ErrorKind::divergence) : 0;
    }

    if (locate->parsed() || evaluate_cmd->parsed()) {
      const Scenario sc = load_scenario(c);
      Artifacts a = starting_artifacts(c, locate->parsed());
      prepare(sc, a, methods);
      save_artifacts(c.out_dir, a);
      const EvaluationReport r = evaluate(sc, a, methods);
      if (locate->parsed()) {
        for (const MethodReport& m : r.methods) {
          const fs::path path = fs::path(c.out_dir) / ("estimates_" + method_label(m.method) + ".csv");
          std::ofstream out(path);
          if (!out) fail(ErrorKind::io, "cannot write " + path.string());
          write_estimates(out, m.records);
        }
      } else {
        emit_plot_data(r, c.out_dir);
      }
      print_summary(r);
      return r.nn_diverged ? static_cast<int>(ErrorKind::divergence) : 0;
    }

    if (sweep_cmd->parsed()) {
      const Scenario sc = load_scenario(c);
      const auto reports = sweep(sc, parse_sweep_parameter(param), values, methods, jobs);
      fs::create_directories(c.out_dir);
      const fs::path path = fs::path(c.out_dir) / "sweep.csv";
      std::ofstream out(path);
      if (!out) fail(ErrorKind::io, "cannot write " + path.string());
      set_exact_precision(out);
      out << "param,value,method,mean_m,median_m,clusters,nn_diverged\n";
      for (std::size_t i = 0; i < reports.size(); ++i) {
        for (const MethodReport& m : reports[i].methods)
          out << param << ',' << values[i] << ',' << method_label(m.method) << ',' << m.mean_m << ',' << m.median_m
              << ',' << reports[i].cluster_count() << ',' << reports[i].nn_diverged << '\n';
        if (reports[i].nn_diverged)
          out << param << ',' << values[i] << ",csle+nn,nan,nan," << reports[i].cluster_count() << ",1\n";
      }
      std::cout << "wrote " << path.string() << '\n';
      return 0;
    }

    if (ablate->parsed()) {
      const Scenario sc = load_scenario(c);
      const auto results = ablate_similarity(sc, methods, jobs);
      fs::create_directories(c.out_dir);
      const fs::path path = fs::path(c.out_dir) / "ablation.csv";
      std::ofstream out(path);
      if (!out) fail(ErrorKind::io, "cannot write " + path.string());
      set_exact_precision(out);
      out << "variant,clusters,method,mean_m,median_m\n";
      for (const AblationResult& r : results) {
        for (const MethodReport& m : r.report.methods)
          out << r.label << ',' << r.report.cluster_count() << ',' << method_label(m.method) << ',' << m.mean_m << ','
              << m.median_m << '\n';
        std::ofstream layout(fs::path(c.out_dir) / ("clusters_" + r.label + ".txt"));
        r.report.clusters.write(layout);
        std::cout << r.label << ": " << r.report.cluster_count() << " clusters\n";
      }
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "salc: " << e.what() << '\n';
    return static_cast<int>(e.kind());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "salc: " << e.what() << '\n';
    return static_cast<int>(ErrorKind::io);
  } catch (const std::exception& e) {
    std::cerr << "salc: " << e.what() << '\n';
    return static_cast<int>(ErrorKind::validation);
  }
  return 0;
}
