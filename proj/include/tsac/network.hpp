#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "tsac/common.hpp"

namespace tsac {

// Activations restricted to C3 functions; no piecewise-linear options.
enum class Activation { Tanh, Softplus };

double activation_value(Activation act, double x);
double activation_derivative(Activation act, double x);

// Feed-forward net over flat parameters: per layer a row-major weight
// matrix then a bias vector; hidden layers use the activation, the output
// head is linear. layer_sizes = {in, hidden..., out}; two entries give a
// plain affine map.
struct Network {
  std::vector<int> layer_sizes;
  Activation activation = Activation::Tanh;

  int input_dim() const { return layer_sizes.front(); }
  int output_dim() const { return layer_sizes.back(); }
  int param_count() const;

  Vec forward(std::span<const double> params, std::span<const double> input) const;

  // Gradient of <output, cotangent> w.r.t. params.
  Vec backward(std::span<const double> params, std::span<const double> input,
               std::span<const double> cotangent) const;

  // Same, accumulated as acc += scale * grad; the allocation-free hot path.
  void backward_acc(std::span<const double> params, std::span<const double> input,
                    std::span<const double> cotangent, double scale,
                    std::span<double> acc) const;

  Vec init_params(Rng& rng, double scale = 0.1) const;
};

// Central finite differences of an arbitrary scalar loss; the independent
// oracle every analytic gradient is checked against.
Vec finite_diff_gradient(const std::function<double(const Vec&)>& loss, const Vec& params,
                         double step);

// One-hot helpers for state/action encodings.
inline Vec one_hot(int index, int size) {
  Vec v(static_cast<std::size_t>(size), 0.0);
  v[static_cast<std::size_t>(index)] = 1.0;
  return v;
}

}  // namespace tsac
