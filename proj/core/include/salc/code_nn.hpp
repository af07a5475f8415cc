#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "salc/common.hpp"
#include "salc/radio.hpp"
#include "salc/romac.hpp"

namespace salc {

// Per-AP fully connected network mapping monitor-point RSS deltas to the
// RSS deltas of every RP. Hidden layers use ReLU, the output is linear.

inline const std::vector<std::size_t> kDefaultHiddenSizes{64, 256, 512, 128, 64};

struct NetworkParams {
  std::vector<Matrix> weights;  // weights[h] is out x in
  std::vector<Vector> biases;
  std::size_t ap_index = 0;
  std::uint64_t seed = 0;
  // Inputs are divided by this before the first layer (dB per unit).
  double input_scale = 1.0;

  std::size_t input_size() const { return static_cast<std::size_t>(weights.front().cols()); }
  std::size_t output_size() const { return static_cast<std::size_t>(weights.back().rows()); }
  std::vector<std::size_t> hidden_sizes() const;
  bool same_shape(const NetworkParams& other) const;
  bool all_finite() const;

  friend bool operator==(const NetworkParams& a, const NetworkParams& b);
};

/// Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
NetworkParams init_network(std::size_t n_mp, std::size_t n_rp, std::span<const std::size_t> hidden,
                           std::uint64_t seed, std::size_t ap_index = 0);

/// Training pairs for one AP, one column per time sample.
struct DeltaSamples {
  Matrix input;     // N_mp x K, exemplar RSS minus its reference value
  Matrix target;    // N_rp x K, RP RSS minus its reference value
  Matrix averaged;  // N_rp x K, target averaged over each cluster

  Eigen::Index size() const { return input.cols(); }
  DeltaSamples columns(Eigen::Index first, Eigen::Index count) const;
};

/// Deltas for samples [first, last) of db relative to sample 0. last = 0
/// means all samples.
DeltaSamples preprocess(const RssDatabase& db, const ClusterModel& clusters, std::size_t ap, std::size_t first = 1,
                        std::size_t last = 0);

Vector forward(const NetworkParams& params, const Vector& input);
Matrix forward_batch(const NetworkParams& params, const Matrix& inputs);

double huber(double residual, double gamma);
/// d huber / d residual, i.e. the residual clipped to [-gamma, gamma].
double huber_derivative(double residual, double gamma);
/// Mean over components of huber(target - pred).
double huber_loss(const Vector& target, const Vector& pred, double gamma);

/// Mean per-sample huber_loss over the batch columns.
double batch_loss(const NetworkParams& params, const Matrix& inputs, const Matrix& targets, double gamma);

/// Same loss plus its gradient with respect to every parameter; grad takes
/// the shape of params.
double loss_and_gradient(const NetworkParams& params, const Matrix& inputs, const Matrix& targets, double gamma,
                         NetworkParams& grad);

struct TrainOptions {
  double learning_rate = 0.1;
  double gamma = 1.0;
  int iters = 2000;
  // 0 means full batch.
  std::size_t batch_size = 0;
  std::uint64_t batch_seed = 0;
};

struct TrainResult {
  NetworkParams params;
  // Loss at the start of every iteration plus the final loss.
  std::vector<double> loss;
};

/// Gradient descent towards the cluster-averaged targets.
TrainResult pretrain(const DeltaSamples& samples, NetworkParams init, const TrainOptions& options);

/// Continues from the pretrained parameters against the per-RP targets.
TrainResult finetune(const NetworkParams& pretrained, const DeltaSamples& samples, const TrainOptions& options);

/// Adaptive RP database: per-AP network output plus the RP reference RSS.
/// mp_now and mp_reference are N_mp x N_ap, rp_reference is N_rp x N_ap.
Matrix reconstruct_nn(std::span<const NetworkParams> networks, const Matrix& mp_now, const Matrix& mp_reference,
                      const Matrix& rp_reference);

/// Parameter file: `salc-nn <count>` then per network a shape header
/// `ap seed n_mp n_rp input_scale L d1 .. dL` followed by weights (row-major) and biases.
void write_networks(std::ostream& out, std::span<const NetworkParams> networks);
std::vector<NetworkParams> read_networks(std::istream& in);

}  // namespace salc
