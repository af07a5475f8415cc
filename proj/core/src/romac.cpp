#include "salc/romac.hpp"

#include <algorithm>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>

namespace salc {
namespace {

void require_time_series(const RssDatabase& db) {
  require(db.samples() >= 2, "similarity needs the reference sample plus at least one time sample");
}

}  // namespace

double rss_difference(std::size_t i, std::size_t j, const RssDatabase& db) {
  require_time_series(db);
  require(i < db.points() && j < db.points(), "reference point index out of range");
  if (i == j) return 0.0;
  double sum = 0.0;
  for (std::size_t l = 0; l < db.aps(); ++l) {
    const auto a = db.series(i, l);
    const auto b = db.series(j, l);
    for (std::size_t k = 1; k < db.samples(); ++k) sum += std::abs(a[k] - b[k]);
  }
  return sum / static_cast<double>(db.aps() * (db.samples() - 1));
}

double time_variation_similarity(std::size_t i, std::size_t j, const RssDatabase& db) {
  require_time_series(db);
  require(i < db.points() && j < db.points(), "reference point index out of range");
  double sum = 0.0;
  for (std::size_t l = 0; l < db.aps(); ++l) {
    const auto a = db.series(i, l);
    const auto b = db.series(j, l);
    for (std::size_t k = 1; k < db.samples(); ++k) sum += (a[k] - a[0]) - (b[k] - b[0]);
  }
  return 1.0 / std::max(kDeltaEpsilon, std::abs(sum));
}

Matrix min_max_normalized(const Matrix& m) {
  double lo = kInfinity, hi = -kInfinity;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      if (i != j) {
        lo = std::min(lo, m(i, j));
        hi = std::max(hi, m(i, j));
      }
  Matrix out = Matrix::Zero(m.rows(), m.cols());
  if (!(hi > lo)) return out;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      if (i != j) out(i, j) = (m(i, j) - lo) / (hi - lo);
  return out;
}

double median_preference(const Matrix& s, Eigen::Index j) {
  std::vector<double> column;
  column.reserve(static_cast<std::size_t>(s.rows()));
  for (Eigen::Index i = 0; i < s.rows(); ++i)
    if (i != j) column.push_back(s(i, j));
  require(!column.empty(), "median preference needs at least two points");
  std::sort(column.begin(), column.end());
  const std::size_t n = column.size();
  return n % 2 == 1 ? column[n / 2] : 0.5 * (column[n / 2 - 1] + column[n / 2]);
}

SimilarityMatrix build_similarity(const RssDatabase& db, const Matrix& ssp_distances, const SimilarityWeights& weights,
                                  std::optional<double> preference, DeltaOrientation orientation) {
  const auto n = static_cast<Eigen::Index>(db.points());
  require(n >= 2, "clustering needs at least two reference points");
  require(ssp_distances.rows() == n && ssp_distances.cols() == n, "SSP distance matrix does not match the database");
  require(weights.rss >= 0 && weights.ssp >= 0 && weights.delta >= 0, "similarity weights must be non-negative");
  require(weights.rss + weights.ssp + weights.delta > 0, "similarity weights must not all be zero");
  require_time_series(db);

  SimilarityMatrix out;
  out.weights = weights;
  out.d_rss = Matrix::Zero(n, n);
  out.delta = Matrix::Zero(n, n);
  out.d_ssp = ssp_distances;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const auto a = static_cast<std::size_t>(i), b = static_cast<std::size_t>(j);
      out.d_rss(i, j) = out.d_rss(j, i) = rss_difference(a, b, db);
      out.delta(i, j) = out.delta(j, i) = time_variation_similarity(a, b, db);
    }
  }

  const Matrix rss = min_max_normalized(out.d_rss);
  const Matrix ssp = min_max_normalized(out.d_ssp);
  Matrix delta = min_max_normalized(out.delta);
  if (orientation == DeltaOrientation::inverted) {
    delta = (1.0 - delta.array()).matrix();
    delta.diagonal().setZero();
  }

  out.s = -(weights.rss * rss + weights.ssp * ssp + weights.delta * delta);
  const Vector diag = [&] {
    Vector d(n);
    for (Eigen::Index j = 0; j < n; ++j) d(j) = preference ? *preference : median_preference(out.s, j);
    return d;
  }();
  out.s.diagonal() = diag;
  return out;
}

SimilarityMatrix build_similarity(const RssDatabase& db, std::span<const Point> rps, const Skeleton& skeleton,
                                  const SspMatrix& d, const SimilarityWeights& weights,
                                  std::optional<double> preference, DeltaOrientation orientation) {
  require(rps.size() == db.points(), "reference point positions do not match the database");
  return build_similarity(db, ssp_distance_matrix(rps, skeleton, d), weights, preference, orientation);
}

std::size_t ClusterModel::cluster_of(std::size_t rp) const {
  require(rp < exemplar_of.size(), "reference point index out of range");
  const auto it = std::lower_bound(exemplars.begin(), exemplars.end(), exemplar_of[rp]);
  return static_cast<std::size_t>(it - exemplars.begin());
}

ClusterModel make_cluster_model(std::vector<std::size_t> exemplar_of) {
  ClusterModel model;
  model.exemplar_of = std::move(exemplar_of);
  model.exemplars = model.exemplar_of;
  std::sort(model.exemplars.begin(), model.exemplars.end());
  model.exemplars.erase(std::unique(model.exemplars.begin(), model.exemplars.end()), model.exemplars.end());
  for (std::size_t mu : model.exemplars) {
    require(mu < model.exemplar_of.size(), "exemplar index out of range");
    require(model.exemplar_of[mu] == mu, "exemplar " + std::to_string(mu) + " is not its own exemplar");
  }
  model.clusters.assign(model.exemplars.size(), {});
  for (std::size_t i = 0; i < model.exemplar_of.size(); ++i) model.clusters[model.cluster_of(i)].push_back(i);
  return model;
}

ClusterModel affinity_propagation(const Matrix& s, const AffinityOptions& options) {
  require(s.rows() == s.cols() && s.rows() >= 1, "similarity matrix must be square and non-empty");
  require(options.damping >= 0.0 && options.damping < 1.0, "damping must lie in [0, 1)");
  require(options.max_iter >= 1 && options.stable_iters >= 1, "iteration limits must be positive");
  const Eigen::Index n = s.rows();
  if (n == 1) {
    ClusterModel model = make_cluster_model({0});
    model.converged = true;
    return model;
  }

  const double lambda = options.damping;
  Matrix r = Matrix::Zero(n, n);
  Matrix a = Matrix::Zero(n, n);
  std::vector<std::size_t> previous;
  std::vector<std::size_t> assignment(static_cast<std::size_t>(n));
  int stable = 0;
  int iter = 0;
  bool converged = false;

  for (iter = 1; iter <= options.max_iter; ++iter) {
    // Responsibilities: r(i,j) = s(i,j) - max_{j' != j} (a(i,j') + s(i,j')).
    for (Eigen::Index i = 0; i < n; ++i) {
      double first = -kInfinity, second = -kInfinity;
      Eigen::Index first_idx = 0;
      for (Eigen::Index j = 0; j < n; ++j) {
        const double v = a(i, j) + s(i, j);
        if (v > first) {
          second = first;
          first = v;
          first_idx = j;
        } else if (v > second) {
          second = v;
        }
      }
      for (Eigen::Index j = 0; j < n; ++j) {
        const double fresh = s(i, j) - (j == first_idx ? second : first);
        r(i, j) = lambda * r(i, j) + (1.0 - lambda) * fresh;
      }
    }

    // Availabilities.
    for (Eigen::Index j = 0; j < n; ++j) {
      double positive = 0.0;
      for (Eigen::Index i = 0; i < n; ++i)
        if (i != j) positive += std::max(0.0, r(i, j));
      for (Eigen::Index i = 0; i < n; ++i) {
        const double fresh =
            i == j ? positive : std::min(0.0, r(j, j) + positive - std::max(0.0, r(i, j)));
        a(i, j) = lambda * a(i, j) + (1.0 - lambda) * fresh;
      }
    }

    // Exemplar set: every point's best candidate; ties to the lowest index.
    const Matrix evidence = r + a;
    std::vector<bool> is_exemplar(static_cast<std::size_t>(n), false);
    std::vector<Eigen::Index> choice(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Index best = 0;
      for (Eigen::Index j = 1; j < n; ++j)
        if (evidence(i, j) > evidence(i, best)) best = j;
      choice[static_cast<std::size_t>(i)] = best;
      is_exemplar[static_cast<std::size_t>(best)] = true;
    }
    // Before the messages settle, points can pick each other (i -> j, j -> i)
    // with neither choosing itself, or every point can pick itself with no
    // positive self-evidence. Neither counts towards convergence.
    bool self_chosen = true;
    for (Eigen::Index j = 0; j < n; ++j)
      if (is_exemplar[static_cast<std::size_t>(j)] && (choice[static_cast<std::size_t>(j)] != j || evidence(j, j) <= 0.0))
        self_chosen = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      if (is_exemplar[ui]) {
        assignment[ui] = ui;
        continue;
      }
      Eigen::Index best = -1;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (!is_exemplar[static_cast<std::size_t>(j)]) continue;
        if (best < 0 || evidence(i, j) > evidence(i, best)) best = j;
      }
      assignment[ui] = static_cast<std::size_t>(best);
    }

    stable = self_chosen && assignment == previous ? stable + 1 : 0;
    previous = assignment;
    if (stable >= options.stable_iters) {
      converged = true;
      break;
    }
  }

  ClusterModel model = make_cluster_model(previous);
  model.converged = converged;
  model.iterations = std::min(iter, options.max_iter);
  return model;
}

double net_similarity(const Matrix& s, const ClusterModel& model) {
  double total = 0.0;
  for (std::size_t i = 0; i < model.size(); ++i) {
    const auto e = static_cast<Eigen::Index>(model.exemplar_of[i]);
    total += s(static_cast<Eigen::Index>(i), e);
  }
  return total;
}

void ClusterModel::write(std::ostream& out) const {
  for (std::size_t m = 0; m < clusters.size(); ++m) {
    out << m << ": " << exemplars[m] << " : ";
    for (std::size_t k = 0; k < clusters[m].size(); ++k) out << (k ? "," : "") << clusters[m][k];
    out << '\n';
  }
}

ClusterModel ClusterModel::read(std::istream& in) {
  std::map<std::size_t, std::size_t> owner;
  std::string line;
  std::size_t expected = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    for (char& c : line)
      if (c == ':' || c == ',') c = ' ';
    std::istringstream ls(line);
    std::size_t m = 0, exemplar = 0, member = 0;
    if (!(ls >> m >> exemplar)) fail(ErrorKind::validation, "bad cluster line");
    require(m == expected++, "cluster lines must be numbered 0, 1, 2, ...");
    while (ls >> member) {
      require(owner.emplace(member, exemplar).second, "reference point " + std::to_string(member) + " in two clusters");
    }
  }
  std::vector<std::size_t> exemplar_of(owner.size());
  for (const auto& [rp, ex] : owner) {
    require(rp < exemplar_of.size(), "cluster members must cover 0..N-1");
    exemplar_of[rp] = ex;
  }
  ClusterModel model = make_cluster_model(std::move(exemplar_of));
  model.converged = true;
  return model;
}

void write_similarity(std::ostream& out, const Matrix& s) {
  set_exact_precision(out);
  out << s.rows() << '\n';
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    for (Eigen::Index j = 0; j < s.cols(); ++j) out << (j ? " " : "") << s(i, j);
    out << '\n';
  }
}

}  // namespace salc
