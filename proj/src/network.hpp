// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "matrix.hpp"

namespace gn {

// Supported activations are all monotone non-decreasing; interval bound
// propagation relies on that.
enum class Activation { kRelu, kIdentity };

double activate(Activation a, double z);
// Derivative w.r.t. the pre-activation; ReLU uses the 0 subgradient at 0.
double activate_grad(Activation a, double z);

std::string activation_name(Activation a);
Activation activation_from_name(const std::string& name);

enum class TaskKind { kRegression, kBinary, kMulticlass, kMultilabel };

std::string task_name(TaskKind t);
TaskKind task_from_name(const std::string& name);

struct Layer {
  Matrix weights;  // fan_in x fan_out
  std::vector<double> bias;
  Activation activation = Activation::kRelu;

  std::size_t fan_in() const { return weights.rows(); }
  std::size_t fan_out() const { return weights.cols(); }
};

// Feedforward network whose last layer is affine (Identity). Selected input
// features are copied verbatim into the last layer's input vector, appended
// after the final hidden activation, so input-dependent conditions stay
// expressible at the output layer.
struct Network {
  std::size_t input_width = 0;
  std::vector<Layer> layers;               // hidden layers, then the output layer
  std::vector<std::size_t> skip_features;  // sorted input-feature indices

  std::size_t layer_count() const { return layers.size(); }
  std::size_t output_width() const { return layers.back().fan_out(); }
  // Width of the last layer's input: final hidden width + skip features.
  std::size_t latent_width() const { return layers.back().fan_in(); }
  std::size_t trained_latent_width() const { return latent_width() - skip_features.size(); }

  // Position of a skip feature inside the latent vector.
  std::size_t skip_slot(std::size_t feature_index) const;
  bool is_skip_feature(std::size_t feature_index) const;

  void validate() const;
};

struct NetworkArch {
  std::size_t input_width = 0;
  std::vector<std::size_t> hidden;
  std::size_t output_width = 0;
  std::vector<std::size_t> skip_features;
  Activation hidden_activation = Activation::kRelu;
};

// He fan-in normal initialization, biases zero. Deterministic per seed.
Network init_standard(const NetworkArch& arch, std::uint64_t seed);

struct ForwardTrace {
  // layer_inputs[n] is the input vector of layer n (0-based); layer_inputs[0]
  // is the raw input and layer_inputs[k-1] the latent vector of the last
  // layer (with skip copies in place).
  std::vector<std::vector<double>> layer_inputs;
  // Pre-activation values per layer, kept for backprop.
  std::vector<std::vector<double>> pre_activations;
  std::vector<double> output;
};

ForwardTrace forward(const Network& net, std::span<const double> x);
std::vector<double> predict(const Network& net, std::span<const double> x);
// Latent input of the last layer for a single instance.
std::vector<double> latent_input(const Network& net, std::span<const double> x);

struct Batch {
  std::vector<std::vector<double>> inputs;
  std::vector<std::vector<double>> targets;
};

struct GradientSet {
  std::vector<Matrix> weights;             // same shapes as Network layers
  std::vector<std::vector<double>> bias;
};

struct LossAndGradients {
  double loss = 0.0;
  GradientSet grads;
};

// Loss by task: mean squared error (regression), softmax cross-entropy
// (multiclass, one-hot targets), per-output logistic loss on logits
// (binary/multilabel, +-1 targets).
double loss_value(const Network& net, const Batch& batch, TaskKind task);
LossAndGradients backward(const Network& net, const Batch& batch, TaskKind task);

// Gradient step on layers 1..k-1 only; the output layer is never touched.
void apply_hidden_step(Network& net, const GradientSet& grads, double eta);
// Gradient step on every layer (unconstrained baseline training).
void apply_full_step(Network& net, const GradientSet& grads, double eta);

void set_last_layer(Network& net, const Matrix& weights, const std::vector<double>& bias);

}  // namespace gn
