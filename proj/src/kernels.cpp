#include "gcrl/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <limits>
#include <vector>

namespace gcrl::kernels {
namespace {

void check_affine_shapes(const Matrix& weights, const Vector& bias, const Matrix& in) {
  if (weights.cols() != in.rows() || weights.rows() != bias.size()) {
    throw DimensionError("affine: weight/input/bias shape mismatch");
  }
}

// Splits [0, n) into one contiguous block per thread.
struct Blocks {
  Eigen::Index n;
  Eigen::Index count;

  Blocks(Eigen::Index n_, int threads) : n(n_), count(std::max<Eigen::Index>(1, std::min<Eigen::Index>(n_, threads))) {}
  Eigen::Index begin(Eigen::Index i) const { return n * i / count; }
  Eigen::Index size(Eigen::Index i) const { return n * (i + 1) / count - begin(i); }
};

}  // namespace

int max_threads() { return omp_get_max_threads(); }

void affine(const Matrix& weights, const Vector& bias, const Matrix& in, Matrix& out) {
  check_affine_shapes(weights, bias, in);
  out.resize(weights.rows(), in.cols());
  const Blocks blocks(in.cols(), max_threads());
  if (blocks.count == 1) {
    out.noalias() = weights * in;
    out.colwise() += bias;
    return;
  }
#pragma omp parallel for schedule(static)
  for (Eigen::Index b = 0; b < blocks.count; ++b) {
    const auto c0 = blocks.begin(b);
    const auto nc = blocks.size(b);
    out.middleCols(c0, nc).noalias() = weights * in.middleCols(c0, nc);
    out.middleCols(c0, nc).colwise() += bias;
  }
}

void affine_backward(const Matrix& weights, const Matrix& in, const Matrix& grad_out,
                     Matrix* d_weights, Vector* d_bias, Matrix* d_in) {
  if (grad_out.rows() != weights.rows() || in.rows() != weights.cols() || in.cols() != grad_out.cols()) {
    throw DimensionError("affine_backward: shape mismatch");
  }
  const int threads = max_threads();
  if (d_weights) {
    d_weights->resize(weights.rows(), weights.cols());
    const Blocks rows(weights.rows(), threads);
    if (rows.count == 1) {
      d_weights->noalias() = grad_out * in.transpose();
    } else {
#pragma omp parallel for schedule(static)
      for (Eigen::Index b = 0; b < rows.count; ++b) {
        const auto r0 = rows.begin(b);
        const auto nr = rows.size(b);
        d_weights->middleRows(r0, nr).noalias() = grad_out.middleRows(r0, nr) * in.transpose();
      }
    }
  }
  if (d_bias) {
    *d_bias = grad_out.rowwise().sum();
  }
  if (d_in) {
    d_in->resize(weights.cols(), grad_out.cols());
    const Blocks cols(grad_out.cols(), threads);
    if (cols.count == 1) {
      d_in->noalias() = weights.transpose() * grad_out;
    } else {
#pragma omp parallel for schedule(static)
      for (Eigen::Index b = 0; b < cols.count; ++b) {
        const auto c0 = cols.begin(b);
        const auto nc = cols.size(b);
        d_in->middleCols(c0, nc).noalias() = weights.transpose() * grad_out.middleCols(c0, nc);
      }
    }
  }
}

void relu_inplace(Matrix& m) {
  double* data = m.data();
  const Eigen::Index n = m.size();
#pragma omp parallel for schedule(static) if (n > 1 << 16)
  for (Eigen::Index i = 0; i < n; ++i) {
    data[i] = data[i] > 0.0 ? data[i] : 0.0;
  }
}

void relu_backward_inplace(const Matrix& activated, Matrix& grad) {
  if (activated.rows() != grad.rows() || activated.cols() != grad.cols()) {
    throw DimensionError("relu_backward: shape mismatch");
  }
  const double* a = activated.data();
  double* g = grad.data();
  const Eigen::Index n = grad.size();
#pragma omp parallel for schedule(static) if (n > 1 << 16)
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(a[i] > 0.0)) g[i] = 0.0;
  }
}

std::size_t update_min_distances(std::span<const Vec2> points, Vec2 p, std::span<double> dist) {
  if (points.size() != dist.size()) throw DimensionError("update_min_distances: size mismatch");
  const auto n = static_cast<std::ptrdiff_t>(points.size());
  if (n == 0) return 0;

  std::size_t best = 0;
  double best_value = -1.0;
#pragma omp parallel if (n > 4096)
  {
    std::size_t local_best = 0;
    double local_value = -1.0;
#pragma omp for schedule(static) nowait
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      const double d = distance(points[i], p);
      if (d < dist[i]) dist[i] = d;
      if (dist[i] > local_value) {
        local_value = dist[i];
        local_best = static_cast<std::size_t>(i);
      }
    }
#pragma omp critical
    {
      if (local_value > best_value || (local_value == best_value && local_best < best)) {
        best_value = local_value;
        best = local_best;
      }
    }
  }
  return best;
}

void knn_mean_distances(std::span<const Vec2> points, std::size_t k, std::span<double> out) {
  const std::size_t n = points.size();
  if (out.size() != n) throw DimensionError("knn_mean_distances: size mismatch");
  if (k == 0 || k >= n) throw DimensionError("knn_mean_distances: need 0 < k < number of points");
#pragma omp parallel
  {
    std::vector<double> d(n - 1);
#pragma omp for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
      std::size_t m = 0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j != static_cast<std::size_t>(i)) d[m++] = distance(points[i], points[j]);
      }
      std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k - 1), d.end());
      std::sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k));
      double sum = 0.0;
      for (std::size_t q = 0; q < k; ++q) sum += d[q];
      out[i] = sum / static_cast<double>(k);
    }
  }
}

namespace reference {

void affine(const Matrix& weights, const Vector& bias, const Matrix& in, Matrix& out) {
  check_affine_shapes(weights, bias, in);
  out.resize(weights.rows(), in.cols());
  for (Eigen::Index c = 0; c < in.cols(); ++c) {
    for (Eigen::Index r = 0; r < weights.rows(); ++r) {
      double acc = bias(r);
      for (Eigen::Index k = 0; k < weights.cols(); ++k) acc += weights(r, k) * in(k, c);
      out(r, c) = acc;
    }
  }
}

void affine_backward(const Matrix& weights, const Matrix& in, const Matrix& grad_out,
                     Matrix* d_weights, Vector* d_bias, Matrix* d_in) {
  if (grad_out.rows() != weights.rows() || in.rows() != weights.cols() || in.cols() != grad_out.cols()) {
    throw DimensionError("affine_backward: shape mismatch");
  }
  if (d_weights) {
    d_weights->setZero(weights.rows(), weights.cols());
    for (Eigen::Index r = 0; r < weights.rows(); ++r)
      for (Eigen::Index k = 0; k < weights.cols(); ++k)
        for (Eigen::Index c = 0; c < in.cols(); ++c) (*d_weights)(r, k) += grad_out(r, c) * in(k, c);
  }
  if (d_bias) {
    d_bias->setZero(weights.rows());
    for (Eigen::Index r = 0; r < weights.rows(); ++r)
      for (Eigen::Index c = 0; c < grad_out.cols(); ++c) (*d_bias)(r) += grad_out(r, c);
  }
  if (d_in) {
    d_in->setZero(weights.cols(), grad_out.cols());
    for (Eigen::Index c = 0; c < grad_out.cols(); ++c)
      for (Eigen::Index k = 0; k < weights.cols(); ++k)
        for (Eigen::Index r = 0; r < weights.rows(); ++r) (*d_in)(k, c) += weights(r, k) * grad_out(r, c);
  }
}

void relu_inplace(Matrix& m) {
  for (Eigen::Index c = 0; c < m.cols(); ++c)
    for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = std::max(m(r, c), 0.0);
}

void relu_backward_inplace(const Matrix& activated, Matrix& grad) {
  if (activated.rows() != grad.rows() || activated.cols() != grad.cols()) {
    throw DimensionError("relu_backward: shape mismatch");
  }
  for (Eigen::Index c = 0; c < grad.cols(); ++c)
    for (Eigen::Index r = 0; r < grad.rows(); ++r)
      if (activated(r, c) <= 0.0) grad(r, c) = 0.0;
}

std::size_t update_min_distances(std::span<const Vec2> points, Vec2 p, std::span<double> dist) {
  if (points.size() != dist.size()) throw DimensionError("update_min_distances: size mismatch");
  std::size_t best = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    dist[i] = std::min(dist[i], distance(points[i], p));
    if (dist[i] > dist[best]) best = i;
  }
  return best;
}

void knn_mean_distances(std::span<const Vec2> points, std::size_t k, std::span<double> out) {
  const std::size_t n = points.size();
  if (out.size() != n) throw DimensionError("knn_mean_distances: size mismatch");
  if (k == 0 || k >= n) throw DimensionError("knn_mean_distances: need 0 < k < number of points");
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> d;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) d.push_back(distance(points[i], points[j]));
    std::sort(d.begin(), d.end());
    double sum = 0.0;
    for (std::size_t q = 0; q < k; ++q) sum += d[q];
    out[i] = sum / static_cast<double>(k);
  }
}

}  // namespace reference
}  // namespace gcrl::kernels
