#include "salc/code_nn.hpp"

#include <algorithm>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

namespace salc {
namespace {

void check_input(const NetworkParams& params, Eigen::Index rows) {
  require(!params.weights.empty(), "network has no layers");
  require(rows == params.weights.front().cols(), "network input has length " + std::to_string(rows) +
                                                     ", expected " + std::to_string(params.input_size()));
}

NetworkParams zeros_like(const NetworkParams& params) {
  NetworkParams out = params;
  for (Matrix& w : out.weights) w.setZero();
  for (Vector& b : out.biases) b.setZero();
  return out;
}

std::string format_rate(double eta) {
  std::ostringstream os;
  os << eta;
  return os.str();
}

TrainResult descend(NetworkParams params, const Matrix& inputs, const Matrix& targets, const TrainOptions& options) {
  require(inputs.cols() > 0, "training needs at least one sample");
  require(inputs.cols() == targets.cols(), "inputs and targets differ in sample count");
  require(options.gamma > 0.0, "Huber threshold must be positive");
  require(options.learning_rate >= 0.0 && options.iters >= 0, "invalid training options");
  check_input(params, inputs.rows());
  require(targets.rows() == static_cast<Eigen::Index>(params.output_size()), "targets do not match the network output");

  const Eigen::Index total = inputs.cols();
  const bool minibatch = options.batch_size > 0 && static_cast<Eigen::Index>(options.batch_size) < total;
  std::vector<Eigen::Index> order(static_cast<std::size_t>(total));
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 shuffler(options.batch_seed);
  std::size_t cursor = order.size();
  Matrix batch_in, batch_target;

  auto diverged = [&] {
    fail(ErrorKind::divergence, "training diverged (non-finite loss) at learning rate eta=" +
                                    format_rate(options.learning_rate));
  };

  TrainResult result;
  result.loss.reserve(static_cast<std::size_t>(options.iters) + 1);
  NetworkParams grad = zeros_like(params);
  for (int it = 0; it < options.iters; ++it) {
    double loss = 0.0;
    if (minibatch) {
      const auto b = static_cast<Eigen::Index>(options.batch_size);
      batch_in.resize(inputs.rows(), b);
      batch_target.resize(targets.rows(), b);
      for (Eigen::Index c = 0; c < b; ++c) {
        if (cursor == order.size()) {
          std::shuffle(order.begin(), order.end(), shuffler);
          cursor = 0;
        }
        const Eigen::Index col = order[cursor++];
        batch_in.col(c) = inputs.col(col);
        batch_target.col(c) = targets.col(col);
      }
      loss = loss_and_gradient(params, batch_in, batch_target, options.gamma, grad);
    } else {
      loss = loss_and_gradient(params, inputs, targets, options.gamma, grad);
    }
    if (!std::isfinite(loss)) diverged();
    result.loss.push_back(loss);
    for (std::size_t h = 0; h < params.weights.size(); ++h) {
      params.weights[h].noalias() -= options.learning_rate * grad.weights[h];
      params.biases[h].noalias() -= options.learning_rate * grad.biases[h];
    }
  }
  const double final_loss = batch_loss(params, inputs, targets, options.gamma);
  if (!std::isfinite(final_loss) || !params.all_finite()) diverged();
  result.loss.push_back(final_loss);
  result.params = std::move(params);
  return result;
}

}  // namespace

std::vector<std::size_t> NetworkParams::hidden_sizes() const {
  std::vector<std::size_t> sizes;
  for (std::size_t h = 0; h + 1 < weights.size(); ++h) sizes.push_back(static_cast<std::size_t>(weights[h].rows()));
  return sizes;
}

bool NetworkParams::same_shape(const NetworkParams& other) const {
  if (weights.size() != other.weights.size()) return false;
  for (std::size_t h = 0; h < weights.size(); ++h) {
    if (weights[h].rows() != other.weights[h].rows() || weights[h].cols() != other.weights[h].cols()) return false;
    if (biases[h].size() != other.biases[h].size()) return false;
  }
  return true;
}

bool NetworkParams::all_finite() const {
  for (std::size_t h = 0; h < weights.size(); ++h)
    if (!weights[h].allFinite() || !biases[h].allFinite()) return false;
  return true;
}

bool operator==(const NetworkParams& a, const NetworkParams& b) {
  if (a.ap_index != b.ap_index || a.seed != b.seed || a.input_scale != b.input_scale || !a.same_shape(b)) return false;
  for (std::size_t h = 0; h < a.weights.size(); ++h)
    if (a.weights[h] != b.weights[h] || a.biases[h] != b.biases[h]) return false;
  return true;
}

NetworkParams init_network(std::size_t n_mp, std::size_t n_rp, std::span<const std::size_t> hidden,
                           std::uint64_t seed, std::size_t ap_index) {
  require(n_mp > 0 && n_rp > 0, "network input and output sizes must be positive");
  NetworkParams params;
  params.ap_index = ap_index;
  params.seed = seed;
  std::mt19937_64 gen(mix_seed(seed, {ap_index}));
  std::size_t fan_in = n_mp;
  std::vector<std::size_t> sizes(hidden.begin(), hidden.end());
  sizes.push_back(n_rp);
  for (std::size_t out : sizes) {
    require(out > 0, "layer sizes must be positive");
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    Matrix w(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(fan_in));
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = dist(gen);
    params.weights.push_back(std::move(w));
    params.biases.push_back(Vector::Zero(static_cast<Eigen::Index>(out)));
    fan_in = out;
  }
  return params;
}

DeltaSamples DeltaSamples::columns(Eigen::Index first, Eigen::Index count) const {
  return {input.middleCols(first, count), target.middleCols(first, count), averaged.middleCols(first, count)};
}

DeltaSamples preprocess(const RssDatabase& db, const ClusterModel& clusters, std::size_t ap, std::size_t first,
                        std::size_t last) {
  if (last == 0) last = db.samples();
  require(ap < db.aps(), "AP index out of range");
  require(clusters.size() == db.points(), "cluster model does not match the database");
  require(first >= 1 && first <= last && last <= db.samples(), "invalid sample range for preprocessing");
  const auto k_count = static_cast<Eigen::Index>(last - first);
  const auto n_mp = static_cast<Eigen::Index>(clusters.n_mp());
  const auto n_rp = static_cast<Eigen::Index>(db.points());

  DeltaSamples out{Matrix(n_mp, k_count), Matrix(n_rp, k_count), Matrix(n_rp, k_count)};
  for (Eigen::Index k = 0; k < k_count; ++k) {
    const std::size_t t = first + static_cast<std::size_t>(k);
    for (Eigen::Index m = 0; m < n_mp; ++m) {
      const std::size_t mu = clusters.exemplars[static_cast<std::size_t>(m)];
      out.input(m, k) = db.at(mu, ap, t) - db.at(mu, ap, 0);
    }
    for (Eigen::Index n = 0; n < n_rp; ++n) {
      const auto rp = static_cast<std::size_t>(n);
      out.target(n, k) = db.at(rp, ap, t) - db.at(rp, ap, 0);
    }
    for (const auto& members : clusters.clusters) {
      double mean = 0.0;
      for (std::size_t n : members) mean += out.target(static_cast<Eigen::Index>(n), k);
      mean /= static_cast<double>(members.size());
      for (std::size_t n : members) out.averaged(static_cast<Eigen::Index>(n), k) = mean;
    }
  }
  return out;
}

Vector forward(const NetworkParams& params, const Vector& input) {
  check_input(params, input.size());
  Vector a = input / params.input_scale;
  for (std::size_t h = 0; h < params.weights.size(); ++h) {
    Vector z = params.weights[h] * a + params.biases[h];
    if (h + 1 < params.weights.size()) z = z.cwiseMax(0.0);
    a = std::move(z);
  }
  return a;
}

Matrix forward_batch(const NetworkParams& params, const Matrix& inputs) {
  check_input(params, inputs.rows());
  Matrix a = inputs / params.input_scale;
  for (std::size_t h = 0; h < params.weights.size(); ++h) {
    Matrix z = params.weights[h] * a;
    z.colwise() += params.biases[h];
    if (h + 1 < params.weights.size()) z = z.cwiseMax(0.0);
    a = std::move(z);
  }
  return a;
}

double huber(double residual, double gamma) {
  const double r = std::abs(residual);
  return r <= gamma ? 0.5 * r * r : gamma * r - 0.5 * gamma * gamma;
}

double huber_derivative(double residual, double gamma) { return std::clamp(residual, -gamma, gamma); }

double huber_loss(const Vector& target, const Vector& pred, double gamma) {
  require(target.size() == pred.size(), "Huber loss needs equally long vectors");
  require(gamma > 0.0, "Huber threshold must be positive");
  if (target.size() == 0) return 0.0;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < target.size(); ++i) sum += huber(target(i) - pred(i), gamma);
  return sum / static_cast<double>(target.size());
}

double batch_loss(const NetworkParams& params, const Matrix& inputs, const Matrix& targets, double gamma) {
  const Matrix pred = forward_batch(params, inputs);
  require(pred.rows() == targets.rows() && pred.cols() == targets.cols(), "targets do not match the network output");
  double sum = 0.0;
  for (Eigen::Index k = 0; k < pred.cols(); ++k)
    for (Eigen::Index i = 0; i < pred.rows(); ++i) sum += huber(targets(i, k) - pred(i, k), gamma);
  return sum / static_cast<double>(pred.size());
}

double loss_and_gradient(const NetworkParams& params, const Matrix& inputs, const Matrix& targets, double gamma,
                         NetworkParams& grad) {
  check_input(params, inputs.rows());
  const std::size_t layers = params.weights.size();
  if (!grad.same_shape(params)) grad = zeros_like(params);

  // Pre-activations z[h] and activations a[h] (a[0] is the input).
  std::vector<Matrix> z(layers), a(layers + 1);
  a[0] = inputs / params.input_scale;
  for (std::size_t h = 0; h < layers; ++h) {
    z[h].noalias() = params.weights[h] * a[h];
    z[h].colwise() += params.biases[h];
    a[h + 1] = h + 1 < layers ? Matrix(z[h].cwiseMax(0.0)) : z[h];
  }
  const Matrix& pred = a[layers];
  require(pred.rows() == targets.rows() && pred.cols() == targets.cols(), "targets do not match the network output");

  const double scale = 1.0 / static_cast<double>(pred.size());
  double loss = 0.0;
  Matrix delta(pred.rows(), pred.cols());
  for (Eigen::Index k = 0; k < pred.cols(); ++k) {
    for (Eigen::Index i = 0; i < pred.rows(); ++i) {
      const double r = targets(i, k) - pred(i, k);
      loss += huber(r, gamma);
      delta(i, k) = -huber_derivative(r, gamma) * scale;
    }
  }

  for (std::size_t h = layers; h-- > 0;) {
    grad.weights[h].noalias() = delta * a[h].transpose();
    grad.biases[h] = delta.rowwise().sum();
    if (h == 0) break;
    Matrix back = params.weights[h].transpose() * delta;
    delta = back.cwiseProduct((z[h - 1].array() > 0.0).cast<double>().matrix());
  }
  return loss * scale;
}

TrainResult pretrain(const DeltaSamples& samples, NetworkParams init, const TrainOptions& options) {
  require(samples.size() > 0, "pretraining needs at least one sample");
  return descend(std::move(init), samples.input, samples.averaged, options);
}

TrainResult finetune(const NetworkParams& pretrained, const DeltaSamples& samples, const TrainOptions& options) {
  require(samples.size() > 0, "fine-tuning needs at least one sample");
  return descend(pretrained, samples.input, samples.target, options);
}

Matrix reconstruct_nn(std::span<const NetworkParams> networks, const Matrix& mp_now, const Matrix& mp_reference,
                      const Matrix& rp_reference) {
  require(static_cast<Eigen::Index>(networks.size()) == rp_reference.cols(), "need one network per AP");
  require(mp_now.cols() == rp_reference.cols() && mp_reference.cols() == rp_reference.cols(),
          "monitor readings have the wrong number of APs");
  for (Eigen::Index m = 0; m < mp_reference.rows(); ++m) {
    if (m >= mp_now.rows() || !mp_now.row(m).allFinite()) {
      fail(ErrorKind::validation, "missing monitor reading for cluster " + std::to_string(m));
    }
  }
  Matrix out(rp_reference.rows(), rp_reference.cols());
  for (std::size_t l = 0; l < networks.size(); ++l) {
    const auto col = static_cast<Eigen::Index>(l);
    require(networks[l].output_size() == static_cast<std::size_t>(rp_reference.rows()),
            "network output does not match the RP count");
    const Vector delta_mp = mp_now.col(col) - mp_reference.col(col);
    out.col(col) = forward(networks[l], delta_mp) + rp_reference.col(col);
  }
  return out;
}

void write_networks(std::ostream& out, std::span<const NetworkParams> networks) {
  set_exact_precision(out);
  out << "salc-nn " << networks.size() << '\n';
  for (const NetworkParams& p : networks) {
    const auto hidden = p.hidden_sizes();
    out << p.ap_index << ' ' << p.seed << ' ' << p.input_size() << ' ' << p.output_size() << ' ' << p.input_scale << ' '
        << hidden.size();
    for (std::size_t d : hidden) out << ' ' << d;
    out << '\n';
    for (std::size_t h = 0; h < p.weights.size(); ++h) {
      const Matrix& w = p.weights[h];
      for (Eigen::Index i = 0; i < w.rows(); ++i) {
        for (Eigen::Index j = 0; j < w.cols(); ++j) out << (j ? " " : "") << w(i, j);
        out << '\n';
      }
      for (Eigen::Index i = 0; i < p.biases[h].size(); ++i) out << (i ? " " : "") << p.biases[h](i);
      out << '\n';
    }
  }
}

std::vector<NetworkParams> read_networks(std::istream& in) {
  std::string tag;
  std::size_t count = 0;
  if (!(in >> tag >> count) || tag != "salc-nn") fail(ErrorKind::validation, "not a network parameter file");
  std::vector<NetworkParams> networks;
  for (std::size_t c = 0; c < count; ++c) {
    NetworkParams p;
    std::size_t n_mp = 0, n_rp = 0, n_hidden = 0;
    if (!(in >> p.ap_index >> p.seed >> n_mp >> n_rp >> p.input_scale >> n_hidden) || !(p.input_scale > 0))
      fail(ErrorKind::validation, "bad network header");
    std::vector<std::size_t> sizes(n_hidden);
    for (std::size_t& d : sizes)
      if (!(in >> d)) fail(ErrorKind::validation, "bad network layer sizes");
    sizes.push_back(n_rp);
    std::size_t fan_in = n_mp;
    for (std::size_t out_size : sizes) {
      Matrix w(static_cast<Eigen::Index>(out_size), static_cast<Eigen::Index>(fan_in));
      Vector b(static_cast<Eigen::Index>(out_size));
      for (Eigen::Index i = 0; i < w.rows(); ++i)
        for (Eigen::Index j = 0; j < w.cols(); ++j)
          if (!(in >> w(i, j))) fail(ErrorKind::validation, "truncated network weights");
      for (Eigen::Index i = 0; i < b.size(); ++i)
        if (!(in >> b(i))) fail(ErrorKind::validation, "truncated network biases");
      p.weights.push_back(std::move(w));
      p.biases.push_back(std::move(b));
      fan_in = out_size;
    }
    networks.push_back(std::move(p));
  }
  return networks;
}

}  // namespace salc
