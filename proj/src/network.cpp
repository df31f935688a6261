// SPDX-License-Identifier: Apache-2.0
#include "network.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "common.hpp"

namespace gn {

double activate(Activation a, double z) {
  switch (a) {
    case Activation::kRelu:
      return z > 0.0 ? z : 0.0;
    case Activation::kIdentity:
      return z;
  }
  fail(ErrorKind::kInternal, "unknown activation");
}

double activate_grad(Activation a, double z) {
  switch (a) {
    case Activation::kRelu:
      return z > 0.0 ? 1.0 : 0.0;
    case Activation::kIdentity:
      return 1.0;
  }
  fail(ErrorKind::kInternal, "unknown activation");
}

std::string activation_name(Activation a) {
  return a == Activation::kRelu ? "relu" : "identity";
}

Activation activation_from_name(const std::string& name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "identity") return Activation::kIdentity;
  fail(ErrorKind::kConfig, "unknown activation '" + name + "'");
}

std::string task_name(TaskKind t) {
  switch (t) {
    case TaskKind::kRegression: return "regression";
    case TaskKind::kBinary: return "binary";
    case TaskKind::kMulticlass: return "multiclass";
    case TaskKind::kMultilabel: return "multilabel";
  }
  fail(ErrorKind::kInternal, "unknown task kind");
}

TaskKind task_from_name(const std::string& name) {
  if (name == "regression") return TaskKind::kRegression;
  if (name == "binary") return TaskKind::kBinary;
  if (name == "multiclass") return TaskKind::kMulticlass;
  if (name == "multilabel") return TaskKind::kMultilabel;
  fail(ErrorKind::kConfig, "unknown task kind '" + name + "'");
}

std::size_t Network::skip_slot(std::size_t feature_index) const {
  for (std::size_t i = 0; i < skip_features.size(); ++i) {
    if (skip_features[i] == feature_index) {
      return trained_latent_width() + i;
    }
  }
  fail(ErrorKind::kInternal,
       "feature " + std::to_string(feature_index) + " is not a skip feature");
}

bool Network::is_skip_feature(std::size_t feature_index) const {
  return std::find(skip_features.begin(), skip_features.end(), feature_index) !=
         skip_features.end();
}

void Network::validate() const {
  if (layers.size() < 2) {
    fail(ErrorKind::kConfig, "network needs at least one hidden layer plus the output layer");
  }
  if (layers.back().activation != Activation::kIdentity) {
    fail(ErrorKind::kInternal, "output layer must be affine");
  }
  for (std::size_t f : skip_features) {
    if (f >= input_width) {
      fail(ErrorKind::kConfig, "skip feature index " + std::to_string(f) +
                                   " out of range for input width " +
                                   std::to_string(input_width));
    }
  }
  std::size_t expect = input_width;
  for (std::size_t n = 0; n < layers.size(); ++n) {
    const Layer& l = layers[n];
    if (l.fan_in() == 0 || l.fan_out() == 0) {
      fail(ErrorKind::kConfig, "zero-width layer " + std::to_string(n));
    }
    if (l.fan_in() != expect) {
      fail(ErrorKind::kInternal, "layer " + std::to_string(n) + " fan-in mismatch");
    }
    if (l.bias.size() != l.fan_out()) {
      fail(ErrorKind::kInternal, "layer " + std::to_string(n) + " bias size mismatch");
    }
    expect = l.fan_out();
    if (n + 1 == layers.size() - 1) {
      expect += skip_features.size();  // skip copies join before the last layer
    }
    for (double v : l.weights.data()) {
      if (!std::isfinite(v)) fail(ErrorKind::kInternal, "non-finite weight");
    }
    for (double v : l.bias) {
      if (!std::isfinite(v)) fail(ErrorKind::kInternal, "non-finite bias");
    }
  }
}

Network init_standard(const NetworkArch& arch, std::uint64_t seed) {
  if (arch.input_width == 0 || arch.output_width == 0 || arch.hidden.empty()) {
    fail(ErrorKind::kConfig, "architecture needs input, at least one hidden layer, and output");
  }
  for (std::size_t h : arch.hidden) {
    if (h == 0) fail(ErrorKind::kConfig, "zero-width hidden layer");
  }
  std::vector<std::size_t> skips(arch.skip_features);
  std::sort(skips.begin(), skips.end());
  skips.erase(std::unique(skips.begin(), skips.end()), skips.end());
  for (std::size_t f : skips) {
    if (f >= arch.input_width) {
      fail(ErrorKind::kConfig, "skip feature index " + std::to_string(f) +
                                   " out of range for input width " +
                                   std::to_string(arch.input_width));
    }
  }

  Network net;
  net.input_width = arch.input_width;
  net.skip_features = skips;

  std::mt19937_64 rng(seed);
  auto make_layer = [&rng](std::size_t fan_in, std::size_t fan_out, Activation act) {
    Layer l;
    l.weights = Matrix(fan_in, fan_out);
    l.bias.assign(fan_out, 0.0);
    l.activation = act;
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
    for (double& w : l.weights.data()) w = dist(rng);
    return l;
  };

  std::size_t prev = arch.input_width;
  for (std::size_t h : arch.hidden) {
    net.layers.push_back(make_layer(prev, h, arch.hidden_activation));
    prev = h;
  }
  net.layers.push_back(
      make_layer(prev + skips.size(), arch.output_width, Activation::kIdentity));
  net.validate();
  return net;
}

ForwardTrace forward(const Network& net, std::span<const double> x) {
  if (x.size() != net.input_width) {
    fail(ErrorKind::kData, "input width " + std::to_string(x.size()) +
                               " does not match network input width " +
                               std::to_string(net.input_width));
  }
  const std::size_t k = net.layer_count();
  ForwardTrace trace;
  trace.layer_inputs.resize(k);
  trace.pre_activations.resize(k);
  trace.layer_inputs[0].assign(x.begin(), x.end());

  for (std::size_t n = 0; n < k; ++n) {
    const Layer& l = net.layers[n];
    const std::vector<double>& in = trace.layer_inputs[n];
    std::vector<double> z(l.fan_out());
    for (std::size_t c = 0; c < l.fan_out(); ++c) {
      double acc = l.bias[c];
      for (std::size_t r = 0; r < l.fan_in(); ++r) {
        acc += l.weights(r, c) * in[r];
      }
      z[c] = acc;
    }
    trace.pre_activations[n] = z;
    std::vector<double> a(z.size());
    for (std::size_t c = 0; c < z.size(); ++c) a[c] = activate(l.activation, z[c]);
    if (n + 1 < k) {
      if (n + 1 == k - 1) {
        // Latent vector: hidden activations followed by exact skip copies.
        a.reserve(a.size() + net.skip_features.size());
        for (std::size_t f : net.skip_features) a.push_back(x[f]);
      }
      trace.layer_inputs[n + 1] = std::move(a);
    } else {
      trace.output = std::move(a);
    }
  }
  return trace;
}

std::vector<double> predict(const Network& net, std::span<const double> x) {
  return forward(net, x).output;
}

std::vector<double> latent_input(const Network& net, std::span<const double> x) {
  ForwardTrace t = forward(net, x);
  return t.layer_inputs.back();
}

namespace {

// d(loss)/d(output logits), averaged over the batch, plus the loss itself.
struct OutputGrad {
  double loss = 0.0;
  std::vector<std::vector<double>> dout;  // per instance
};

double logistic_loss(double target_pm1, double logit) {
  // log(1 + exp(-t*z)) computed without overflow
  double u = -target_pm1 * logit;
  return u > 0 ? u + std::log1p(std::exp(-u)) : std::log1p(std::exp(u));
}

OutputGrad output_gradients(const std::vector<std::vector<double>>& outputs,
                            const std::vector<std::vector<double>>& targets,
                            TaskKind task) {
  const std::size_t m = outputs.size();
  const double inv_m = 1.0 / static_cast<double>(m);
  OutputGrad og;
  og.dout.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    const auto& y = outputs[i];
    const auto& t = targets[i];
    if (t.size() != y.size()) {
      fail(ErrorKind::kData, "label width " + std::to_string(t.size()) +
                                 " does not match output width " + std::to_string(y.size()));
    }
    std::vector<double> d(y.size(), 0.0);
    switch (task) {
      case TaskKind::kRegression: {
        for (std::size_t o = 0; o < y.size(); ++o) {
          double diff = y[o] - t[o];
          og.loss += diff * diff * inv_m;
          d[o] = 2.0 * diff * inv_m;
        }
        break;
      }
      case TaskKind::kMulticlass: {
        // softmax cross-entropy against one-hot (or probability) targets
        double mx = *std::max_element(y.begin(), y.end());
        double zsum = 0.0;
        for (double v : y) zsum += std::exp(v - mx);
        double logz = std::log(zsum) + mx;
        for (std::size_t o = 0; o < y.size(); ++o) {
          double p = std::exp(y[o] - logz);
          og.loss += t[o] * (logz - y[o]) * inv_m;
          d[o] = (p - t[o]) * inv_m;
        }
        break;
      }
      case TaskKind::kBinary:
      case TaskKind::kMultilabel: {
        // per-output logistic on logits, targets +-1
        for (std::size_t o = 0; o < y.size(); ++o) {
          og.loss += logistic_loss(t[o], y[o]) * inv_m;
          double sig = 1.0 / (1.0 + std::exp(t[o] * y[o]));
          d[o] = -t[o] * sig * inv_m;
        }
        break;
      }
    }
    og.dout[i] = std::move(d);
  }
  return og;
}

}  // namespace

double loss_value(const Network& net, const Batch& batch, TaskKind task) {
  if (batch.inputs.empty()) fail(ErrorKind::kData, "empty batch");
  std::vector<std::vector<double>> outputs;
  outputs.reserve(batch.inputs.size());
  for (const auto& x : batch.inputs) outputs.push_back(predict(net, x));
  return output_gradients(outputs, batch.targets, task).loss;
}

LossAndGradients backward(const Network& net, const Batch& batch, TaskKind task) {
  if (batch.inputs.empty()) fail(ErrorKind::kData, "empty batch");
  if (batch.inputs.size() != batch.targets.size()) {
    fail(ErrorKind::kData, "batch inputs/targets size mismatch");
  }
  const std::size_t k = net.layer_count();
  const std::size_t m = batch.inputs.size();

  LossAndGradients out;
  out.grads.weights.reserve(k);
  out.grads.bias.reserve(k);
  for (const Layer& l : net.layers) {
    out.grads.weights.emplace_back(l.fan_in(), l.fan_out());
    out.grads.bias.emplace_back(l.fan_out(), 0.0);
  }

  std::vector<ForwardTrace> traces;
  traces.reserve(m);
  std::vector<std::vector<double>> outputs;
  outputs.reserve(m);
  for (const auto& x : batch.inputs) {
    traces.push_back(forward(net, x));
    outputs.push_back(traces.back().output);
  }
  OutputGrad og = output_gradients(outputs, batch.targets, task);
  out.loss = og.loss;

  for (std::size_t i = 0; i < m; ++i) {
    const ForwardTrace& tr = traces[i];
    // delta = dL/dz for the current layer, starting at the affine output
    std::vector<double> delta = og.dout[i];
    for (std::size_t n = k; n-- > 0;) {
      const Layer& l = net.layers[n];
      const std::vector<double>& in = tr.layer_inputs[n];
      Matrix& gw = out.grads.weights[n];
      std::vector<double>& gb = out.grads.bias[n];
      for (std::size_t c = 0; c < l.fan_out(); ++c) {
        gb[c] += delta[c];
        for (std::size_t r = 0; r < l.fan_in(); ++r) {
          gw(r, c) += in[r] * delta[c];
        }
      }
      if (n == 0) break;
      // push delta through the weights, then through the activation of the
      // previous layer; skip slots carry no gradient (no parameters behind them)
      const Layer& prev = net.layers[n - 1];
      std::vector<double> dprev(prev.fan_out(), 0.0);
      for (std::size_t r = 0; r < prev.fan_out(); ++r) {
        double acc = 0.0;
        for (std::size_t c = 0; c < l.fan_out(); ++c) {
          acc += l.weights(r, c) * delta[c];
        }
        dprev[r] = acc * activate_grad(prev.activation, tr.pre_activations[n - 1][r]);
      }
      delta = std::move(dprev);
    }
  }
  return out;
}

void apply_hidden_step(Network& net, const GradientSet& grads, double eta) {
  if (grads.weights.size() != net.layers.size()) {
    fail(ErrorKind::kInternal, "gradient set layer count mismatch");
  }
  for (std::size_t n = 0; n + 1 < net.layers.size(); ++n) {
    Layer& l = net.layers[n];
    if (!l.weights.same_shape(grads.weights[n])) {
      fail(ErrorKind::kInternal, "gradient shape mismatch at layer " + std::to_string(n));
    }
    for (std::size_t idx = 0; idx < l.weights.data().size(); ++idx) {
      l.weights.data()[idx] -= eta * grads.weights[n].data()[idx];
    }
    for (std::size_t c = 0; c < l.bias.size(); ++c) {
      l.bias[c] -= eta * grads.bias[n][c];
    }
  }
}

void apply_full_step(Network& net, const GradientSet& grads, double eta) {
  apply_hidden_step(net, grads, eta);
  Layer& last = net.layers.back();
  const std::size_t n = net.layers.size() - 1;
  for (std::size_t idx = 0; idx < last.weights.data().size(); ++idx) {
    last.weights.data()[idx] -= eta * grads.weights[n].data()[idx];
  }
  for (std::size_t c = 0; c < last.bias.size(); ++c) {
    last.bias[c] -= eta * grads.bias[n][c];
  }
}

void set_last_layer(Network& net, const Matrix& weights, const std::vector<double>& bias) {
  Layer& last = net.layers.back();
  if (!last.weights.same_shape(weights) || bias.size() != last.bias.size()) {
    fail(ErrorKind::kInternal, "last-layer shape mismatch");
  }
  for (double v : weights.data()) {
    if (!std::isfinite(v)) fail(ErrorKind::kInternal, "non-finite last-layer weight");
  }
  for (double v : bias) {
    if (!std::isfinite(v)) fail(ErrorKind::kInternal, "non-finite last-layer bias");
  }
  last.weights = weights;
  last.bias = bias;
}

}  // namespace gn
