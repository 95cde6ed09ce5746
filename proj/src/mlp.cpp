#include "gcrl/mlp.hpp"

#include <cmath>

namespace gcrl {

GradBundle& GradBundle::operator+=(const GradBundle& other) {
  if (weights.size() != other.weights.size()) throw DimensionError("GradBundle +=: layer count mismatch");
  for (std::size_t i = 0; i < weights.size(); ++i) {
    weights[i] += other.weights[i];
    biases[i] += other.biases[i];
  }
  return *this;
}

GradBundle& GradBundle::scale(double k) {
  for (auto& w : weights) w *= k;
  for (auto& b : biases) b *= k;
  input *= k;
  return *this;
}

bool GradBundle::all_finite() const {
  for (const auto& w : weights)
    if (!w.allFinite()) return false;
  for (const auto& b : biases)
    if (!b.allFinite()) return false;
  return input.allFinite();
}

Mlp::Mlp(std::vector<int> layer_dims, OutputActivation output, double output_bound)
    : dims_(std::move(layer_dims)), output_(output), bound_(output_bound) {
  if (dims_.size() < 2) throw DimensionError("Mlp needs at least an input and an output size");
  for (int d : dims_)
    if (d < 1) throw DimensionError("Mlp layer sizes must be positive");
  if (output_ == OutputActivation::scaled_tanh && !(bound_ > 0.0)) {
    throw DimensionError("scaled-tanh bound must be positive");
  }
  layers_.resize(dims_.size() - 1);
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    layers_[i].weights = Matrix::Zero(dims_[i + 1], dims_[i]);
    layers_[i].bias = Vector::Zero(dims_[i + 1]);
  }
}

void Mlp::initialize(std::mt19937_64& rng, double final_layer_scale) {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    double limit = 1.0 / std::sqrt(static_cast<double>(dims_[i]));
    if (i + 1 == layers_.size() && final_layer_scale > 0.0) limit = final_layer_scale;
    std::uniform_real_distribution<double> u(-limit, limit);
    auto& l = layers_[i];
    for (Eigen::Index k = 0; k < l.weights.size(); ++k) l.weights.data()[k] = u(rng);
    for (Eigen::Index k = 0; k < l.bias.size(); ++k) l.bias(k) = u(rng);
  }
}

void Mlp::set_zero() {
  for (auto& l : layers_) {
    l.weights.setZero();
    l.bias.setZero();
  }
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += static_cast<std::size_t>(l.weights.size() + l.bias.size());
  return n;
}

bool Mlp::same_architecture(const Mlp& other) const {
  return dims_ == other.dims_ && output_ == other.output_ && bound_ == other.bound_;
}

bool operator==(const Mlp& a, const Mlp& b) {
  if (!a.same_architecture(b)) return false;
  for (std::size_t i = 0; i < a.layers_.size(); ++i) {
    if (a.layers_[i].weights != b.layers_[i].weights || a.layers_[i].bias != b.layers_[i].bias) return false;
  }
  return true;
}

void Mlp::check_input(const Matrix& x) const {
  if (dims_.empty()) throw DimensionError("Mlp is empty");
  if (x.rows() != dims_.front()) {
    throw DimensionError("Mlp input has " + std::to_string(x.rows()) + " rows, expected " +
                         std::to_string(dims_.front()));
  }
}

Vector Mlp::forward(const Vector& x) const {
  Matrix out = forward(Matrix(x));
  return out.col(0);
}

Matrix Mlp::forward(const Matrix& x) const {
  check_input(x);
  Matrix h = x;
  Matrix next;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    kernels::affine(layers_[i].weights, layers_[i].bias, h, next);
    if (i + 1 < layers_.size()) kernels::relu_inplace(next);
    std::swap(h, next);
  }
  if (output_ == OutputActivation::scaled_tanh) h = bound_ * h.array().tanh();
  return h;
}

ForwardCache Mlp::forward_cached(const Matrix& x) const {
  check_input(x);
  ForwardCache cache;
  cache.inputs.resize(layers_.size());
  cache.inputs[0] = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    Matrix& out = (i + 1 < layers_.size()) ? cache.inputs[i + 1] : cache.output;
    kernels::affine(layers_[i].weights, layers_[i].bias, cache.inputs[i], out);
    if (i + 1 < layers_.size()) kernels::relu_inplace(out);
  }
  if (output_ == OutputActivation::scaled_tanh) cache.output = bound_ * cache.output.array().tanh();
  return cache;
}

GradBundle Mlp::backward(const ForwardCache& cache, const Matrix& upstream, bool want_params,
                         bool want_input) const {
  if (cache.inputs.size() != layers_.size()) throw DimensionError("backward: cache does not match network");
  if (upstream.rows() != dims_.back() || upstream.cols() != cache.output.cols()) {
    throw DimensionError("backward: upstream gradient shape mismatch");
  }
  GradBundle out;
  if (want_params) {
    out.weights.resize(layers_.size());
    out.biases.resize(layers_.size());
  }

  Matrix grad = upstream;
  if (output_ == OutputActivation::scaled_tanh) {
    // d(b tanh z)/dz = b (1 - tanh^2 z) = b - y^2 / b
    grad = grad.array() * (bound_ - cache.output.array().square() / bound_);
  }
  Matrix d_in;
  for (std::size_t idx = layers_.size(); idx-- > 0;) {
    const bool need_input = idx > 0 || want_input;
    kernels::affine_backward(layers_[idx].weights, cache.inputs[idx], grad,
                             want_params ? &out.weights[idx] : nullptr, want_params ? &out.biases[idx] : nullptr,
                             need_input ? &d_in : nullptr);
    if (idx > 0) {
      kernels::relu_backward_inplace(cache.inputs[idx], d_in);
      std::swap(grad, d_in);
    }
  }
  if (want_input) out.input = std::move(d_in);
  return out;
}

GradBundle Mlp::backward(const Vector& x, const Vector& upstream) const {
  return backward(forward_cached(Matrix(x)), Matrix(upstream));
}

GradBundle zero_grads_like(const Mlp& net) {
  GradBundle g;
  for (std::size_t i = 0; i < net.layer_count(); ++i) {
    g.weights.push_back(Matrix::Zero(net.layer(i).weights.rows(), net.layer(i).weights.cols()));
    g.biases.push_back(Vector::Zero(net.layer(i).bias.size()));
  }
  return g;
}

AdamState AdamState::for_parameters(std::size_t n, double lr) {
  AdamState s;
  s.lr = lr;
  s.m.assign(n, 0.0);
  s.v.assign(n, 0.0);
  return s;
}

namespace {

struct AdamCoefficients {
  double lr, beta1, beta2, epsilon, correction1, correction2;
};

AdamCoefficients begin_step(AdamState& opt) {
  ++opt.step_count;
  const double t = static_cast<double>(opt.step_count);
  return {opt.lr, opt.beta1, opt.beta2, opt.epsilon, 1.0 - std::pow(opt.beta1, t), 1.0 - std::pow(opt.beta2, t)};
}

void apply_block(const AdamCoefficients& k, double* p, const double* g, double* m, double* v, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = k.beta1 * m[i] + (1.0 - k.beta1) * g[i];
    v[i] = k.beta2 * v[i] + (1.0 - k.beta2) * g[i] * g[i];
    const double m_hat = m[i] / k.correction1;
    const double v_hat = v[i] / k.correction2;
    p[i] -= k.lr * m_hat / (std::sqrt(v_hat) + k.epsilon);
  }
}

}  // namespace

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& opt) {
  if (params.size() != grads.size() || opt.m.size() != params.size() || opt.v.size() != params.size()) {
    throw DimensionError("adam_step: parameter / gradient / moment size mismatch");
  }
  const auto k = begin_step(opt);
  apply_block(k, params.data(), grads.data(), opt.m.data(), opt.v.data(), params.size());
}

void adam_step(Mlp& net, const GradBundle& grads, AdamState& opt) {
  if (grads.weights.size() != net.layer_count() || opt.m.size() != net.parameter_count() ||
      opt.v.size() != net.parameter_count()) {
    throw DimensionError("adam_step: network / gradient / moment size mismatch");
  }
  const auto k = begin_step(opt);
  std::size_t offset = 0;
  for (std::size_t i = 0; i < net.layer_count(); ++i) {
    auto& l = net.layer(i);
    if (grads.weights[i].size() != l.weights.size() || grads.biases[i].size() != l.bias.size()) {
      throw DimensionError("adam_step: gradient block shape mismatch");
    }
    const auto nw = static_cast<std::size_t>(l.weights.size());
    apply_block(k, l.weights.data(), grads.weights[i].data(), opt.m.data() + offset, opt.v.data() + offset, nw);
    offset += nw;
    const auto nb = static_cast<std::size_t>(l.bias.size());
    apply_block(k, l.bias.data(), grads.biases[i].data(), opt.m.data() + offset, opt.v.data() + offset, nb);
    offset += nb;
  }
}

void polyak_update(Mlp& target, const Mlp& online, double rho) {
  if (!target.same_architecture(online)) throw DimensionError("polyak_update: architecture mismatch");
  for (std::size_t i = 0; i < target.layer_count(); ++i) {
    auto& t = target.layer(i);
    const auto& o = online.layer(i);
    t.weights = rho * t.weights + (1.0 - rho) * o.weights;
    t.bias = rho * t.bias + (1.0 - rho) * o.bias;
  }
}

}  // namespace gcrl
