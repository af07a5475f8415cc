#include <doctest.h>

#include "support.hpp"

using namespace salc;
using namespace salc::test;

namespace {

std::vector<Point> selected_positions(const PositionEstimate& e, const std::vector<Point>& rps) {
  std::vector<Point> out;
  for (const WeightedRp& w : e.selected) out.push_back(rps[w.rp]);
  return out;
}

struct Fixture {
  std::vector<Point> rps;
  Matrix db;
  ClusterModel clusters;
};

Fixture random_fixture(std::mt19937_64& gen, std::size_t n, std::size_t aps) {
  std::uniform_real_distribution<double> pos(0, 10), rss(-80, -40);
  Fixture f;
  std::vector<std::size_t> ex(n);
  for (std::size_t i = 0; i < n; ++i) {
    f.rps.push_back({pos(gen), pos(gen)});
    ex[i] = i < 3 ? i : std::uniform_int_distribution<std::size_t>(0, 2)(gen);
  }
  f.clusters = make_cluster_model(ex);
  f.db.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(aps));
  for (Eigen::Index i = 0; i < f.db.size(); ++i) f.db.data()[i] = rss(gen);
  return f;
}

}  // namespace

TEST_CASE("modified Euclidean distance") {
  const ClusterModel cm = make_cluster_model({0, 0, 0, 3});
  Matrix db(4, 1);
  db << -50, -53, -56, -60;  // cluster std 3
  Vector user(1);
  user << -47;
  CHECK(med(0, 0, db, cm, user) == doctest::Approx(1.0));
  user << -56;
  CHECK(med(0, 0, db, cm, user) == doctest::Approx(2.0));
  CHECK(med(2, 0, db, cm, user) == 0.0);
  CHECK(cluster_sigma(3, 0, db, cm) == kSigmaFloorDb);
  user << -61;
  CHECK(med(3, 0, db, cm, user) == doctest::Approx(1.0 / kSigmaFloorDb));
  Matrix flat(4, 1);
  flat << -50, -50.1, -50, -60;
  CHECK(cluster_sigma(1, 0, flat, cm) == kSigmaFloorDb);
}

TEST_CASE("weights and top-k selection") {
  std::mt19937_64 gen(21);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 5 + trial % 20, k = 1 + trial % 5;
    const Fixture f = random_fixture(gen, n, 3);
    Vector user = f.db.row(trial % static_cast<int>(n)).transpose();
    if (trial % 3 == 0) user.array() += 1.5;

    // Per AP: oracle sort of the MEDs.
    const auto per_ap = csle_weights(f.db, f.clusters, user, k, MedAggregation::per_ap);
    REQUIRE(per_ap.size() == 3 * k);
    for (std::size_t l = 0; l < 3; ++l) {
      std::vector<double> d(n);
      for (std::size_t i = 0; i < n; ++i) d[i] = med(i, l, f.db, f.clusters, user);
      const auto expect = full_sort_top_k(d, k);
      for (std::size_t j = 0; j < k; ++j) {
        const WeightedRp& w = per_ap[l * k + j];
        CHECK(w.ap == l);
        CHECK(w.rp == expect[j]);
        CHECK(w.weight == doctest::Approx(1.0 / std::max(d[expect[j]], kDistanceFloor)));
      }
    }

    // Joint: oracle sort of the root-sum-square MED.
    const auto joint = csle_weights(f.db, f.clusters, user, k, MedAggregation::joint);
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0;
      for (std::size_t l = 0; l < 3; ++l) s += std::pow(med(i, l, f.db, f.clusters, user), 2);
      d[i] = std::sqrt(s);
    }
    const auto expect = full_sort_top_k(d, k);
    REQUIRE(joint.size() == k);
    for (std::size_t j = 0; j < k; ++j) {
      CHECK(joint[j].rp == expect[j]);
      CHECK(joint[j].weight > 0.0);
      CHECK(std::isfinite(joint[j].weight));
    }
  }
}

TEST_CASE("exact match carries the capped weight") {
  std::mt19937_64 gen(2);
  const Fixture f = random_fixture(gen, 12, 3);
  const Vector user = f.db.row(7).transpose();
  for (const WeightedRp& w : csle_weights(f.db, f.clusters, user, 1, MedAggregation::per_ap)) {
    CHECK(w.rp == 7);
    CHECK(w.weight == 1.0 / kDistanceFloor);
  }
  const PositionEstimate e = csle_locate(f.db, f.clusters, user, f.rps, 1);
  CHECK(e.xy == f.rps[7]);
  CHECK(wknn_baseline(f.db, user, f.rps, 1).xy == f.rps[7]);
  CHECK(csle_weights(f.db, f.clusters, user, 12).size() == 12);
}

TEST_CASE("ties go to the lower index") {
  const ClusterModel cm = make_cluster_model({0, 1, 2, 3});
  Matrix db(4, 1);
  db << -50, -52, -48, -52;
  Vector user(1);
  user << -50;
  const auto w = csle_weights(db, cm, user, 3);
  REQUIRE(w.size() == 3);
  CHECK(w[0].rp == 0);
  CHECK(w[1].rp == 1);
  CHECK(w[2].rp == 2);
}

TEST_CASE("estimate geometry") {
  const std::vector<Point> rps{{0, 0}, {4, 0}, {0, 4}, {9, 9}};
  const std::vector<WeightedRp> equal{{0, kAllAps, 2.0}, {1, kAllAps, 2.0}, {2, kAllAps, 2.0}};
  const PositionEstimate c = estimate(equal, rps, 3);
  CHECK(c.xy.x == doctest::Approx(4.0 / 3));
  CHECK(c.xy.y == doctest::Approx(4.0 / 3));
  const std::vector<WeightedRp> zero{{0, kAllAps, 0.0}, {1, kAllAps, 0.0}};
  CHECK_THROWS_AS(estimate(zero, rps, 2), Error);

  Matrix db(4, 2);
  db << -50, -60, -55, -65, -60, -70, -65, -75;
  Vector user(2);
  user << -57.5, -67.5;  // equidistant from rows 1 and 2
  const PositionEstimate w = wknn_baseline(db, user, rps, 2);
  CHECK(w.xy.x == doctest::Approx(2.0));
  CHECK(w.xy.y == doctest::Approx(2.0));
  Matrix same = Matrix::Constant(4, 2, -50.0);
  const PositionEstimate all = wknn_baseline(same, Vector::Constant(2, -40.0), rps, 4);
  CHECK(all.xy.x == doctest::Approx(13.0 / 4));
  CHECK(all.xy.y == doctest::Approx(13.0 / 4));
}

TEST_CASE("CsLE invariants") {
  std::mt19937_64 gen(31);
  std::uniform_real_distribution<double> shift(-20, 20), noise(-6, 6);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 4 + trial % 30, k = 1 + trial % 7;
    Fixture f = random_fixture(gen, n, 3);
    Vector user = f.db.row(static_cast<Eigen::Index>(trial % n)).transpose();
    for (Eigen::Index l = 0; l < 3; ++l) user(l) += noise(gen);
    const MedAggregation agg = trial % 2 ? MedAggregation::joint : MedAggregation::per_ap;
    const std::size_t kk = std::min(k, n);

    const PositionEstimate e = csle_locate(f.db, f.clusters, user, f.rps, kk, agg);
    CHECK(in_hull(selected_positions(e, f.rps), e.xy));
    for (const WeightedRp& w : e.selected) {
      CHECK(w.weight > 0.0);
      CHECK(std::isfinite(w.weight));
    }
    const PositionEstimate b = wknn_baseline(f.db, user, f.rps, kk);
    CHECK(in_hull(selected_positions(b, f.rps), b.xy));

    // Translation equivariance.
    const Point d{shift(gen), shift(gen)};
    std::vector<Point> moved = f.rps;
    for (Point& p : moved) p = p + d;
    const PositionEstimate em = csle_locate(f.db, f.clusters, user, moved, kk, agg);
    CHECK(em.xy.x == doctest::Approx(e.xy.x + d.x));
    CHECK(em.xy.y == doctest::Approx(e.xy.y + d.y));

    // Weight-scale invariance.
    std::vector<WeightedRp> scaled = e.selected;
    for (WeightedRp& w : scaled) w.weight *= 3.7;
    const PositionEstimate es = estimate(scaled, f.rps, kk);
    CHECK(es.xy.x == doctest::Approx(e.xy.x));
    CHECK(es.xy.y == doctest::Approx(e.xy.y));

    // Monotone relevance: moving one database entry towards the user
    // never lowers its weight.
    const auto rp = static_cast<Eigen::Index>(trial % n), l = static_cast<Eigen::Index>(trial % 3);
    Matrix closer = f.db;
    closer(rp, l) = user(l) + 0.5 * (f.db(rp, l) - user(l));
    // A singleton cluster keeps sigma fixed; other members' sigma may move.
    const auto& members = f.clusters.clusters[f.clusters.cluster_of(static_cast<std::size_t>(rp))];
    if (members.size() == 1) {
      CHECK(med(static_cast<std::size_t>(rp), static_cast<std::size_t>(l), closer, f.clusters, user) <=
            med(static_cast<std::size_t>(rp), static_cast<std::size_t>(l), f.db, f.clusters, user));
    }
    const double s_before = cluster_sigma(static_cast<std::size_t>(rp), static_cast<std::size_t>(l), f.db, f.clusters);
    const double s_after = cluster_sigma(static_cast<std::size_t>(rp), static_cast<std::size_t>(l), closer, f.clusters);
    if (s_after >= s_before)
      CHECK(med(static_cast<std::size_t>(rp), static_cast<std::size_t>(l), closer, f.clusters, user) <=
            med(static_cast<std::size_t>(rp), static_cast<std::size_t>(l), f.db, f.clusters, user));
  }
}

TEST_CASE("monotone relevance with the cluster spread held fixed") {
  const ClusterModel cm = make_cluster_model({0, 0, 0});
  Vector user(1);
  user << -50;
  double previous = 0.0;
  for (double gap : {8.0, 4.0, 2.0, 1.0, 0.5, 0.0}) {
    // Moving RP 1 while the other two mirror around it keeps sigma constant.
    Matrix db(3, 1);
    db << -50 - gap - 3, -50 - gap, -50 - gap + 3;
    const double w = 1.0 / std::max(med(1, 0, db, cm, user), kDistanceFloor);
    CHECK(w >= previous);
    previous = w;
  }
}

TEST_CASE("input validation") {
  std::mt19937_64 gen(1);
  const Fixture f = random_fixture(gen, 6, 3);
  CHECK_THROWS_AS(csle_weights(f.db, f.clusters, Vector::Zero(2), 1), Error);
  CHECK_THROWS_AS(csle_weights(f.db, f.clusters, Vector::Constant(3, -50), 0), Error);
  CHECK_THROWS_AS(csle_weights(f.db, f.clusters, Vector::Constant(3, -50), 7), Error);
  CHECK_THROWS_AS(wknn_baseline(f.db, Vector::Constant(3, std::nan("")), f.rps, 2), Error);
}

TEST_CASE("estimate records round trip") {
  const std::vector<EstimateRecord> recs{{0, {1.5, 2.25}, {1.0, 2.0}, 0.5590169943749474}, {3, {0.1, 0.2}, {0.3, 0.4}, 0.28284271247461906}};
  std::ostringstream os;
  write_estimates(os, recs);
  CHECK(os.str().rfind("tp_index,true_x,true_y,est_x,est_y,error_m\n", 0) == 0);
  std::istringstream is(os.str());
  const auto back = read_estimates(is);
  REQUIRE(back.size() == 2);
  CHECK(back[1].tp_index == 3);
  CHECK(back[0].truth == recs[0].truth);
  CHECK(back[1].estimate == recs[1].estimate);
  CHECK(back[1].error_m == recs[1].error_m);
}
