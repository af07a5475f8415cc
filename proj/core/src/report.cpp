#include "salc/report.hpp"

#include <fstream>
#include <ostream>
#include <sstream>

namespace salc {

void write_summary(std::ostream& out, const EvaluationReport& report) {
  set_exact_precision(out);
  out << "method,count,mean_m,median_m\n";
  for (const MethodReport& m : report.methods)
    out << method_label(m.method) << ',' << m.records.size() << ',' << m.mean_m << ',' << m.median_m << '\n';
}

void write_rss_mae(std::ostream& out, const EvaluationReport& report) {
  set_exact_precision(out);
  out << "db,rss_mae_db\n";
  for (const auto& [db, mae] : report.rss_mae) out << db_name(db) << ',' << mae << '\n';
}

void write_cdf(std::ostream& out, const MethodReport& method) {
  set_exact_precision(out);
  out << "error_m,cumulative\n";
  for (const CdfPoint& p : method.cdf) out << p.error_m << ',' << p.cumulative << '\n';
}

Matrix rss_error_grid(const EvaluationReport& report, DbKind db) {
  const auto it = report.snapshot_db.find(db);
  require(it != report.snapshot_db.end(), "report holds no " + std::string(db_name(db)) + " database");
  return (it->second - report.ground_truth).cwiseAbs();
}

void write_rss_error_grid(std::ostream& out, const EvaluationReport& report, DbKind db) {
  set_exact_precision(out);
  out << "rp,x,y,ap,error_db\n";
  if (report.snapshot_db.find(db) == report.snapshot_db.end()) return;
  const Matrix err = rss_error_grid(report, db);
  for (Eigen::Index n = 0; n < err.rows(); ++n)
    for (Eigen::Index l = 0; l < err.cols(); ++l) {
      const Point p = report.rps[static_cast<std::size_t>(n)];
      out << n << ',' << p.x << ',' << p.y << ',' << l << ',' << err(n, l) << '\n';
    }
}

std::vector<std::filesystem::path> emit_plot_data(const EvaluationReport& report, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorKind::io, "cannot create " + dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> written;
  auto emit = [&](const std::string& name, auto&& writer) {
    const auto path = dir / name;
    std::ofstream out(path);
    if (!out) fail(ErrorKind::io, "cannot write " + path.string());
    writer(out);
    out.flush();
    if (!out) fail(ErrorKind::io, "failed writing " + path.string());
    written.push_back(path);
  };
  emit("summary.csv", [&](std::ostream& o) { write_summary(o, report); });
  emit("rss_mae.csv", [&](std::ostream& o) { write_rss_mae(o, report); });
  for (const MethodReport& m : report.methods) {
    const std::string label = method_label(m.method);
    emit("cdf_" + label + ".csv", [&](std::ostream& o) { write_cdf(o, m); });
    emit("estimates_" + label + ".csv", [&](std::ostream& o) { write_estimates(o, m.records); });
  }
  for (const auto& [db, matrix] : report.snapshot_db)
    emit("rss_error_" + std::string(db_name(db)) + ".csv", [&](std::ostream& o) { write_rss_error_grid(o, report, db); });
  return written;
}

std::string report_fingerprint(const EvaluationReport& report) {
  std::ostringstream os;
  write_summary(os, report);
  write_rss_mae(os, report);
  report.clusters.write(os);
  os << "diverged " << report.nn_diverged << '\n';
  for (const MethodReport& m : report.methods) write_estimates(os, m.records);
  os << "snapshot " << report.snapshot_t << '\n';
  for (const auto& [db, matrix] : report.snapshot_db) {
    os << db_name(db) << '\n';
    write_similarity(os, matrix);
  }
  return os.str();
}

}  // namespace salc
