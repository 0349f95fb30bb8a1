#include "tsac/network.hpp"

#include <cmath>

namespace tsac {

double activation_value(Activation act, double x) {
  switch (act) {
    case Activation::Tanh:
      return std::tanh(x);
    case Activation::Softplus:
      // log(1+e^x) computed without overflow on either tail.
      return x > 30.0 ? x : std::log1p(std::exp(x));
  }
  return 0.0;
}

double activation_derivative(Activation act, double x) {
  switch (act) {
    case Activation::Tanh: {
      const double t = std::tanh(x);
      return 1.0 - t * t;
    }
    case Activation::Softplus:
      return 1.0 / (1.0 + std::exp(-x));
  }
  return 0.0;
}

int Network::param_count() const {
  int n = 0;
  for (std::size_t l = 1; l < layer_sizes.size(); ++l)
    n += layer_sizes[l] * layer_sizes[l - 1] + layer_sizes[l];
  return n;
}

Vec Network::forward(std::span<const double> params, std::span<const double> input) const {
  if (static_cast<int>(input.size()) != input_dim())
    throw ShapeMismatch("network forward: input size");
  if (static_cast<int>(params.size()) != param_count())
    throw ShapeMismatch("network forward: parameter size");
  Vec act(input.begin(), input.end());
  std::size_t off = 0;
  const std::size_t depth = layer_sizes.size() - 1;
  for (std::size_t l = 1; l <= depth; ++l) {
    const int in = layer_sizes[l - 1];
    const int out = layer_sizes[l];
    Vec next(static_cast<std::size_t>(out));
    for (int i = 0; i < out; ++i) {
      double z = params[off + static_cast<std::size_t>(out * in + i)];  // bias
      const std::size_t row = off + static_cast<std::size_t>(i * in);
      for (int j = 0; j < in; ++j) z += params[row + static_cast<std::size_t>(j)] * act[static_cast<std::size_t>(j)];
      next[static_cast<std::size_t>(i)] = l == depth ? z : activation_value(activation, z);
    }
    act = std::move(next);
    off += static_cast<std::size_t>(out * in + out);
  }
  return act;
}

void Network::backward_acc(std::span<const double> params, std::span<const double> input,
                           std::span<const double> cotangent, double scale,
                           std::span<double> acc) const {
  if (static_cast<int>(cotangent.size()) != output_dim())
    throw ShapeMismatch("network backward: cotangent size");
  if (static_cast<int>(input.size()) != input_dim())
    throw ShapeMismatch("network backward: input size");
  if (static_cast<int>(params.size()) != param_count() ||
      acc.size() != params.size())
    throw ShapeMismatch("network backward: parameter size");

  const std::size_t depth = layer_sizes.size() - 1;
  // Forward pass keeping pre-activations and activations per layer.
  std::vector<Vec> acts(depth + 1);
  std::vector<Vec> pre(depth + 1);
  acts[0].assign(input.begin(), input.end());
  std::vector<std::size_t> offsets(depth + 1, 0);
  std::size_t off = 0;
  for (std::size_t l = 1; l <= depth; ++l) {
    offsets[l] = off;
    const int in = layer_sizes[l - 1];
    const int out = layer_sizes[l];
    pre[l].resize(static_cast<std::size_t>(out));
    acts[l].resize(static_cast<std::size_t>(out));
    for (int i = 0; i < out; ++i) {
      double z = params[off + static_cast<std::size_t>(out * in + i)];
      const std::size_t row = off + static_cast<std::size_t>(i * in);
      for (int j = 0; j < in; ++j) z += params[row + static_cast<std::size_t>(j)] * acts[l - 1][static_cast<std::size_t>(j)];
      pre[l][static_cast<std::size_t>(i)] = z;
      acts[l][static_cast<std::size_t>(i)] = l == depth ? z : activation_value(activation, z);
    }
    off += static_cast<std::size_t>(out * in + out);
  }

  // Backward pass: delta = d<out,cot>/d(pre-activation of layer l).
  Vec delta(cotangent.begin(), cotangent.end());
  for (std::size_t l = depth; l >= 1; --l) {
    const int in = layer_sizes[l - 1];
    const int out = layer_sizes[l];
    const std::size_t base = offsets[l];
    if (l != depth)
      for (int i = 0; i < out; ++i)
        delta[static_cast<std::size_t>(i)] *=
            activation_derivative(activation, pre[l][static_cast<std::size_t>(i)]);
    for (int i = 0; i < out; ++i) {
      const double d = scale * delta[static_cast<std::size_t>(i)];
      const std::size_t row = base + static_cast<std::size_t>(i * in);
      for (int j = 0; j < in; ++j)
        acc[row + static_cast<std::size_t>(j)] += d * acts[l - 1][static_cast<std::size_t>(j)];
      acc[base + static_cast<std::size_t>(out * in + i)] += d;
    }
    if (l == 1) break;
    Vec prev(static_cast<std::size_t>(in), 0.0);
    for (int j = 0; j < in; ++j) {
      double s = 0.0;
      for (int i = 0; i < out; ++i)
        s += params[base + static_cast<std::size_t>(i * in + j)] * delta[static_cast<std::size_t>(i)];
      prev[static_cast<std::size_t>(j)] = s;
    }
    delta = std::move(prev);
  }
}

Vec Network::backward(std::span<const double> params, std::span<const double> input,
                      std::span<const double> cotangent) const {
  Vec grad(params.size(), 0.0);
  backward_acc(params, input, cotangent, 1.0, grad);
  return grad;
}

Vec Network::init_params(Rng& rng, double scale) const {
  Vec p(static_cast<std::size_t>(param_count()));
  for (double& v : p) v = rng.uniform(-scale, scale);
  return p;
}

Vec finite_diff_gradient(const std::function<double(const Vec&)>& loss, const Vec& params,
                         double step) {
  if (step <= 0.0) throw Error("finite_diff_gradient: step must be positive");
  Vec grad(params.size(), 0.0);
  Vec probe = params;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + step;
    const double up = loss(probe);
    probe[i] = orig - step;
    const double down = loss(probe);
    probe[i] = orig;
    grad[i] = (up - down) / (2.0 * step);
  }
  return grad;
}

}  // namespace tsac
