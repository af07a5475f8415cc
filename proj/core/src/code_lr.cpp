#include "salc/code_lr.hpp"

#include <algorithm>
#include <istream>
#include <numeric>
#include <ostream>
#include <string>

namespace salc {

LinearFit fit_series(std::span<const double> mp, std::span<const double> rp, const LinearFitOptions& options) {
  require(mp.size() == rp.size() && !mp.empty(), "regression series must be non-empty and equally long");
  require(options.learning_rate > 0.0 && options.epochs >= 0, "invalid regression options");
  const auto n = static_cast<double>(mp.size());
  const double mean_x = std::accumulate(mp.begin(), mp.end(), 0.0) / n;
  const double mean_y = std::accumulate(rp.begin(), rp.end(), 0.0) / n;
  double var_x = 0.0;
  for (double x : mp) var_x += (x - mean_x) * (x - mean_x);
  var_x /= n;

  LinearFit fit;
  if (!(var_x > 1e-18)) {
    fit.bias = mean_y;
    fit.degenerate = true;
    return fit;
  }
  const double sd_x = std::sqrt(var_x);

  // Descent on J = 1/2 sum_k (c z_k + b - y_k)^2 in standardised input z.
  // Per-sample gradients of each epoch are accumulated in sample order and
  // applied as one averaged step.
  double c = 0.0, b = 0.0;
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    double grad_c = 0.0, grad_b = 0.0;
    for (std::size_t k = 0; k < mp.size(); ++k) {
      const double z = (mp[k] - mean_x) / sd_x;
      const double residual = c * z + b - rp[k];
      grad_b += residual;
      grad_c += z * residual;
    }
    const double step_c = options.learning_rate * grad_c / n;
    const double step_b = options.learning_rate * grad_b / n;
    c -= step_c;
    b -= step_b;
    fit.epochs_run = epoch + 1;
    // Change measured in the reported (de-standardised) parameters.
    const double delta_coeff = step_c / sd_x;
    const double delta_bias = step_b - step_c * mean_x / sd_x;
    if (std::max(std::abs(delta_coeff), std::abs(delta_bias)) < options.tolerance) break;
  }

  fit.coeff = c / sd_x;
  fit.bias = b - c * mean_x / sd_x;
  return fit;
}

LinearModelSet fit_linear_models(const RssDatabase& db, const ClusterModel& clusters,
                                 const LinearFitOptions& options) {
  require(db.samples() >= 2, "regression needs at least one time sample besides the reference");
  require(clusters.size() == db.points(), "cluster model does not match the database");
  const auto n_rp = static_cast<Eigen::Index>(db.points());
  const auto n_ap = static_cast<Eigen::Index>(db.aps());

  LinearModelSet models;
  models.coeff = Matrix::Zero(n_rp, n_ap);
  models.bias = Matrix::Zero(n_rp, n_ap);
  models.degenerate.setConstant(n_rp, n_ap, false);
  models.clusters = clusters;
  for (std::size_t n = 0; n < db.points(); ++n) {
    const std::size_t mp = clusters.exemplar_of[n];
    for (std::size_t l = 0; l < db.aps(); ++l) {
      const LinearFit fit = fit_series(db.series(mp, l).subspan(1), db.series(n, l).subspan(1), options);
      models.coeff(n, l) = fit.coeff;
      models.bias(n, l) = fit.bias;
      models.degenerate(n, l) = fit.degenerate;
    }
  }
  return models;
}

Matrix reconstruct_linear(const LinearModelSet& models, const Matrix& mp_rss_now) {
  const ClusterModel& cm = models.clusters;
  require(mp_rss_now.cols() == models.coeff.cols(), "monitor readings have the wrong number of APs");
  for (std::size_t m = 0; m < cm.n_mp(); ++m) {
    const bool present = static_cast<Eigen::Index>(m) < mp_rss_now.rows() &&
                         mp_rss_now.row(static_cast<Eigen::Index>(m)).allFinite();
    if (!present) {
      fail(ErrorKind::validation, "missing monitor reading for cluster " + std::to_string(m) + " (exemplar " +
                                      std::to_string(cm.exemplars[m]) + ")");
    }
  }
  Matrix out(models.coeff.rows(), models.coeff.cols());
  for (Eigen::Index n = 0; n < out.rows(); ++n) {
    const auto m = static_cast<Eigen::Index>(cm.cluster_of(static_cast<std::size_t>(n)));
    for (Eigen::Index l = 0; l < out.cols(); ++l) out(n, l) = models.coeff(n, l) * mp_rss_now(m, l) + models.bias(n, l);
  }
  return out;
}

void LinearModelSet::write(std::ostream& out) const {
  set_exact_precision(out);
  out << coeff.rows() << ' ' << coeff.cols() << '\n';
  for (Eigen::Index n = 0; n < coeff.rows(); ++n)
    for (Eigen::Index l = 0; l < coeff.cols(); ++l)
      out << n << ' ' << l << ' ' << coeff(n, l) << ' ' << bias(n, l) << ' ' << (degenerate(n, l) ? 1 : 0) << '\n';
}

LinearModelSet LinearModelSet::read(std::istream& in, ClusterModel clusters) {
  Eigen::Index n_rp = 0, n_ap = 0;
  if (!(in >> n_rp >> n_ap) || n_rp <= 0 || n_ap <= 0) fail(ErrorKind::validation, "bad linear model header");
  require(static_cast<std::size_t>(n_rp) == clusters.size(), "linear models do not match the cluster model");
  LinearModelSet models;
  models.coeff = Matrix::Zero(n_rp, n_ap);
  models.bias = Matrix::Zero(n_rp, n_ap);
  models.degenerate.setConstant(n_rp, n_ap, false);
  models.clusters = std::move(clusters);
  for (Eigen::Index i = 0; i < n_rp * n_ap; ++i) {
    Eigen::Index n = 0, l = 0;
    double c = 0, b = 0;
    int flag = 0;
    if (!(in >> n >> l >> c >> b >> flag) || n < 0 || n >= n_rp || l < 0 || l >= n_ap)
      fail(ErrorKind::validation, "bad linear model record");
    models.coeff(n, l) = c;
    models.bias(n, l) = b;
    models.degenerate(n, l) = flag != 0;
  }
  return models;
}

}  // namespace salc
