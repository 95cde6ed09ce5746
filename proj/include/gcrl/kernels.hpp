#pragma once

// Data-parallel inner loops shared by the network engine, the landmark
// sampler and the entropy diagnostic. Every kernel has an OpenMP version in
// gcrl::kernels and a plain serial version in gcrl::kernels::reference; the
// two are compared by tests/test_kernels.cpp and bench/kernels_bench.cpp.
//
// Matrices are column-major with one sample per column.

#include <Eigen/Dense>

#include <cstddef>
#include <span>

#include "gcrl/types.hpp"

namespace gcrl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace kernels {

// out = weights * in + bias (bias broadcast over columns). out is resized.
void affine(const Matrix& weights, const Vector& bias, const Matrix& in, Matrix& out);

// Gradients of an affine layer. Any of the output pointers may be null.
//   d_weights = grad_out * in^T, d_bias = row sums of grad_out,
//   d_in = weights^T * grad_out
void affine_backward(const Matrix& weights, const Matrix& in, const Matrix& grad_out,
                     Matrix* d_weights, Vector* d_bias, Matrix* d_in);

void relu_inplace(Matrix& m);

// Zero grad where the post-activation is not positive.
void relu_backward_inplace(const Matrix& activated, Matrix& grad);

// dist[i] = min(dist[i], |points[i] - p|). Returns the index of the largest
// updated distance (lowest index on ties).
std::size_t update_min_distances(std::span<const Vec2> points, Vec2 p, std::span<double> dist);

// out[i] = mean distance from points[i] to its k nearest other points.
void knn_mean_distances(std::span<const Vec2> points, std::size_t k, std::span<double> out);

int max_threads();

namespace reference {

void affine(const Matrix& weights, const Vector& bias, const Matrix& in, Matrix& out);
void affine_backward(const Matrix& weights, const Matrix& in, const Matrix& grad_out,
                     Matrix* d_weights, Vector* d_bias, Matrix* d_in);
void relu_inplace(Matrix& m);
void relu_backward_inplace(const Matrix& activated, Matrix& grad);
std::size_t update_min_distances(std::span<const Vec2> points, Vec2 p, std::span<double> dist);
void knn_mean_distances(std::span<const Vec2> points, std::size_t k, std::span<double> out);

}  // namespace reference
}  // namespace kernels
}  // namespace gcrl
