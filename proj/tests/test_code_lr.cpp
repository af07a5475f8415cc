#include <doctest.h>

#include "support.hpp"

using namespace salc;
using namespace salc::test;

namespace {

std::vector<double> uniform_series(std::mt19937_64& gen, std::size_t n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = u(gen);
  return v;
}

double mae(const std::vector<double>& y, const std::function<double(std::size_t)>& pred) {
  double s = 0;
  for (std::size_t k = 0; k < y.size(); ++k) s += std::abs(y[k] - pred(k));
  return s / static_cast<double>(y.size());
}

}  // namespace

TEST_CASE("planted noise-free relation") {
  std::mt19937_64 gen(1);
  const std::vector<double> x = uniform_series(gen, 30, -80, -40);
  std::vector<double> y(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) y[k] = 2 * x[k] + 1;
  const LinearFit fit = fit_series(x, y);
  CHECK(std::abs(fit.coeff - 2.0) < 1e-3);
  CHECK(std::abs(fit.bias - 1.0) < 1e-3);
  CHECK_FALSE(fit.degenerate);

  for (int trial = 0; trial < 50; ++trial) {
    const double c = std::uniform_real_distribution<double>(-3, 3)(gen);
    const double b = std::uniform_real_distribution<double>(-50, 50)(gen);
    const std::vector<double> xs = uniform_series(gen, 5 + trial, -90, -20);
    std::vector<double> ys(xs.size());
    for (std::size_t k = 0; k < xs.size(); ++k) ys[k] = c * xs[k] + b;
    const LinearFit f = fit_series(xs, ys);
    CHECK(std::abs(f.coeff - c) < 1e-3);
    CHECK(std::abs(f.bias - b) < 1e-3);
  }
}

TEST_CASE("matches the closed-form least-squares oracle on noisy data") {
  std::mt19937_64 gen(2);
  std::normal_distribution<double> noise(0.0, 2.0);
  for (int trial = 0; trial < 100; ++trial) {
    const double c = std::uniform_real_distribution<double>(-2, 2)(gen);
    const std::vector<double> xs = uniform_series(gen, 10 + trial % 40, -85, -30);
    std::vector<double> ys(xs.size());
    for (std::size_t k = 0; k < xs.size(); ++k) ys[k] = c * xs[k] - 10 + noise(gen);
    const LinearFit f = fit_series(xs, ys);
    const Ols oracle = closed_form_ols(xs, ys);
    CHECK(std::abs(f.coeff - oracle.coeff) < 1e-3);
    CHECK(std::abs(f.bias - oracle.bias) < 1e-3);

    const double fitted = mae(ys, [&](std::size_t k) { return f.coeff * xs[k] + f.bias; });
    const double mean_y = std::accumulate(ys.begin(), ys.end(), 0.0) / static_cast<double>(ys.size());
    CHECK(fitted <= mae(ys, [&](std::size_t) { return mean_y; }) + 1e-6);
  }
}

TEST_CASE("constant monitor series is degenerate") {
  const std::vector<double> x(6, -55.0), y{-60, -61, -59, -62, -58, -60};
  const LinearFit f = fit_series(x, y);
  CHECK(f.degenerate);
  CHECK(f.coeff == 0.0);
  CHECK(f.bias == doctest::Approx(-60.0));
}

TEST_CASE("option validation") {
  const std::vector<double> x{1, 2}, y{1, 2}, short_y{1};
  CHECK_THROWS_AS(fit_series(x, short_y), Error);
  CHECK_THROWS_AS(fit_series(x, y, LinearFitOptions{0.0, 10, 1e-6}), Error);
  CHECK_THROWS_AS(fit_series({}, {}), Error);
}

TEST_CASE("per-RP fits follow the cluster exemplar") {
  // RP n tracks its exemplar as (n+1) * mp - n.
  const ClusterModel cm = make_cluster_model({0, 0, 2, 2, 2});
  std::vector<Point> pts(5);
  RssDatabase db(pts, 2, 12);
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-80, -40);
  for (std::size_t k = 0; k < 12; ++k)
    for (std::size_t l = 0; l < 2; ++l) {
      db.at(0, l, k) = u(gen);
      db.at(2, l, k) = u(gen);
      for (std::size_t n : {1, 3, 4}) db.at(n, l, k) = (n + 1.0) * db.at(cm.exemplar_of[n], l, k) - n;
    }
  const LinearModelSet models = fit_linear_models(db, cm);
  for (std::size_t n : {1, 3, 4})
    for (Eigen::Index l = 0; l < 2; ++l) {
      CHECK(std::abs(models.coeff(n, l) - (n + 1.0)) < 1e-3);
      CHECK(std::abs(models.bias(n, l) + double(n)) < 1e-3);
    }
  CHECK(std::abs(models.coeff(0, 0) - 1.0) < 1e-3);
  CHECK(std::abs(models.bias(2, 1)) < 1e-3);

  Matrix mp_now(2, 2);
  mp_now << -50, -60, -70, -45;
  const Matrix rec = reconstruct_linear(models, mp_now);
  for (std::size_t n : {1, 3, 4})
    for (Eigen::Index l = 0; l < 2; ++l)
      CHECK(std::abs(rec(n, l) - ((n + 1.0) * mp_now(cm.cluster_of(n), l) - n)) < 0.05);

  SUBCASE("missing monitor row names the cluster") {
    CHECK_THROWS_WITH(reconstruct_linear(models, mp_now.topRows(1)), doctest::Contains("cluster 1"));
    Matrix bad = mp_now;
    bad(0, 1) = std::nan("");
    CHECK_THROWS_WITH(reconstruct_linear(models, bad), doctest::Contains("cluster 0"));
  }

  SUBCASE("parameter database round trip") {
    std::ostringstream os;
    models.write(os);
    std::istringstream is(os.str());
    const LinearModelSet back = LinearModelSet::read(is, cm);
    CHECK(back.coeff == models.coeff);
    CHECK(back.bias == models.bias);
    CHECK(back.degenerate == models.degenerate);
  }
}

TEST_CASE("reconstruction identities") {
  const ClusterModel cm = make_cluster_model({1, 1, 1, 3});
  LinearModelSet models;
  models.clusters = cm;
  models.coeff = Matrix::Ones(4, 3);
  models.bias = Matrix::Zero(4, 3);
  models.degenerate.setConstant(4, 3, false);
  Matrix mp(2, 3);
  mp << -40, -50, -60, -70, -80, -90;
  const Matrix id = reconstruct_linear(models, mp);
  for (Eigen::Index n = 0; n < 4; ++n) CHECK(id.row(n) == mp.row(static_cast<Eigen::Index>(cm.cluster_of(n))));

  models.coeff.setZero();
  models.bias = Matrix::Constant(4, 3, -33.0);
  CHECK((reconstruct_linear(models, mp).array() == -33.0).all());

  std::mt19937_64 gen(9);
  models.coeff = Matrix::Random(4, 3);
  models.bias = 10 * Matrix::Random(4, 3);
  const Matrix zero = reconstruct_linear(models, Matrix::Zero(2, 3));
  const Matrix base = reconstruct_linear(models, mp) - zero;
  for (double a : {-2.0, 0.5, 3.0}) {
    const Matrix scaled = reconstruct_linear(models, a * mp) - zero;
    CHECK(scaled.isApprox(a * base, 1e-12));
  }
}

TEST_CASE("reference scenario fit beats the stale database at a held-out time") {
  Scenario sc = small_scenario();
  Artifacts a;
  prepare_through(sc, a, Stage::train_lr);
  const RssDatabase& db = *a.db;
  const std::size_t t = sc.samples + 1;
  const Environment clean = sc.noise_free_environment();
  const Matrix truth = synth_snapshot(a.rps, sc.aps, clean, t);
  const Matrix mp_now = synth_snapshot([&] {
    std::vector<Point> p;
    for (std::size_t e : a.clusters->exemplars) p.push_back(a.rps[e]);
    return p;
  }(), sc.aps, sc.environment(), t);
  const Matrix rec = reconstruct_linear(*a.lr, mp_now);
  const double err_rec = (rec - truth).cwiseAbs().mean();
  const double err_stale = (db.snapshot(0) - truth).cwiseAbs().mean();
  CHECK(err_rec < err_stale);
  CHECK(a.lr->coeff.allFinite());
  CHECK(a.lr->bias.allFinite());
}
