#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "salc/pipeline.hpp"

namespace salc {

/// `method,count,mean_m,median_m` per method.
void write_summary(std::ostream& out, const EvaluationReport& report);
/// `db,rss_mae_db` per database.
void write_rss_mae(std::ostream& out, const EvaluationReport& report);
/// `error_m,cumulative`.
void write_cdf(std::ostream& out, const MethodReport& method);
/// `rp,x,y,ap,error_db` with error |db - ground truth| at the snapshot time.
void write_rss_error_grid(std::ostream& out, const EvaluationReport& report, DbKind db);

/// Per-RP, per-AP |db - truth|.
Matrix rss_error_grid(const EvaluationReport& report, DbKind db);

/// Writes summary.csv, rss_mae.csv, and per method cdf_<label>.csv and
/// estimates_<label>.csv, and per database rss_error_<db>.csv. Returns the
/// files written.
std::vector<std::filesystem::path> emit_plot_data(const EvaluationReport& report, const std::filesystem::path& dir);

/// Full text dump of a report; equal reports give equal text.
std::string report_fingerprint(const EvaluationReport& report);

}  // namespace salc
