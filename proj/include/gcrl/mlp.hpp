#pragma once

// Dense ReLU networks with exact reverse-mode gradients, Adam and Polyak
// averaging. All arithmetic is double precision.

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "gcrl/kernels.hpp"

namespace gcrl {

enum class OutputActivation : std::uint8_t { linear = 0, scaled_tanh = 1 };

struct DenseLayer {
  Matrix weights;  // out x in
  Vector bias;     // out
};

// Per-layer activations kept by forward_cached for backward.
struct ForwardCache {
  std::vector<Matrix> inputs;  // inputs[i] feeds layer i; inputs[0] is the network input
  Matrix output;
};

struct GradBundle {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
  Matrix input;  // d/dx, one column per sample; empty when not requested

  bool has_param_grads() const { return !weights.empty(); }
  GradBundle& operator+=(const GradBundle& other);
  GradBundle& scale(double k);
  bool all_finite() const;
};

class Mlp {
 public:
  Mlp() = default;
  Mlp(std::vector<int> layer_dims, OutputActivation output, double output_bound = 1.0);

  // Uniform +-1/sqrt(fan_in) on every layer; the last layer uses
  // +-final_layer_scale instead when final_layer_scale > 0.
  void initialize(std::mt19937_64& rng, double final_layer_scale = 0.0);
  void set_zero();

  const std::vector<int>& layer_dims() const { return dims_; }
  int input_dim() const { return dims_.front(); }
  int output_dim() const { return dims_.back(); }
  OutputActivation output_activation() const { return output_; }
  double output_bound() const { return bound_; }
  std::size_t layer_count() const { return layers_.size(); }
  DenseLayer& layer(std::size_t i) { return layers_[i]; }
  const DenseLayer& layer(std::size_t i) const { return layers_[i]; }

  std::size_t parameter_count() const;
  bool same_architecture(const Mlp& other) const;

  Vector forward(const Vector& x) const;
  Matrix forward(const Matrix& x) const;
  ForwardCache forward_cached(const Matrix& x) const;

  // Gradients of sum_j <upstream[:, j], f(x_j)> with respect to every
  // parameter (when want_params) and every input column (when want_input).
  GradBundle backward(const ForwardCache& cache, const Matrix& upstream, bool want_params = true,
                      bool want_input = true) const;
  GradBundle backward(const Vector& x, const Vector& upstream) const;

  // Visits parameter arrays in declaration order: W0, b0, W1, b1, ...
  template <typename F>
  void for_each_block(F&& f) {
    for (auto& l : layers_) {
      f(std::span<double>(l.weights.data(), static_cast<std::size_t>(l.weights.size())));
      f(std::span<double>(l.bias.data(), static_cast<std::size_t>(l.bias.size())));
    }
  }
  template <typename F>
  void for_each_block(F&& f) const {
    for (const auto& l : layers_) {
      f(std::span<const double>(l.weights.data(), static_cast<std::size_t>(l.weights.size())));
      f(std::span<const double>(l.bias.data(), static_cast<std::size_t>(l.bias.size())));
    }
  }

  friend bool operator==(const Mlp& a, const Mlp& b);

 private:
  void check_input(const Matrix& x) const;

  std::vector<int> dims_;
  std::vector<DenseLayer> layers_;
  OutputActivation output_ = OutputActivation::linear;
  double bound_ = 1.0;
};

GradBundle zero_grads_like(const Mlp& net);

struct AdamState {
  double lr = 2e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::int64_t step_count = 0;
  std::vector<double> m;
  std::vector<double> v;

  static AdamState for_parameters(std::size_t n, double lr);
  friend bool operator==(const AdamState&, const AdamState&) = default;
};

// One bias-corrected Adam step on a flat parameter array.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& opt);
// Same update over every parameter block of net, in declaration order.
void adam_step(Mlp& net, const GradBundle& grads, AdamState& opt);

// target <- rho * target + (1 - rho) * online.
void polyak_update(Mlp& target, const Mlp& online, double rho);

}  // namespace gcrl
