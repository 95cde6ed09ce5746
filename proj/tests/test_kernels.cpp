#include <doctest.h>

#include <random>
#include <vector>

#include "gcrl/kernels.hpp"

using namespace gcrl;

TEST_CASE("parallel affine kernels equal the serial reference") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    const int out = 1 + trial * 7;
    const int in = 2 + trial * 5;
    const int batch = 1 + trial * 13;
    const Matrix w = Matrix::Random(out, in);
    const Vector b = Vector::Random(out);
    const Matrix x = Matrix::Random(in, batch);
    Matrix y1;
    Matrix y2;
    kernels::affine(w, b, x, y1);
    kernels::reference::affine(w, b, x, y2);
    CHECK((y1 - y2).cwiseAbs().maxCoeff() < 1e-12);

    const Matrix up = Matrix::Random(out, batch);
    Matrix dw1, dw2, dx1, dx2;
    Vector db1, db2;
    kernels::affine_backward(w, x, up, &dw1, &db1, &dx1);
    kernels::reference::affine_backward(w, x, up, &dw2, &db2, &dx2);
    CHECK((dw1 - dw2).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((db1 - db2).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((dx1 - dx2).cwiseAbs().maxCoeff() < 1e-12);
    kernels::affine_backward(w, x, up, nullptr, &db1, nullptr);
    CHECK((db1 - db2).cwiseAbs().maxCoeff() < 1e-12);

    Matrix r1 = y1;
    Matrix r2 = y1;
    kernels::relu_inplace(r1);
    kernels::reference::relu_inplace(r2);
    CHECK(r1 == r2);
    Matrix g1 = up;
    Matrix g2 = up;
    kernels::relu_backward_inplace(r1, g1);
    kernels::reference::relu_backward_inplace(r2, g2);
    CHECK(g1 == g2);
  }
}

TEST_CASE("farthest-point update equals the reference including ties") {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> grid(0, 4);  // coarse lattice makes ties common
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Vec2> pts(200 + trial * 37);
    for (auto& p : pts) p = {static_cast<double>(grid(rng)), static_cast<double>(grid(rng))};
    std::vector<double> d1(pts.size(), 1e300);
    std::vector<double> d2 = d1;
    for (int step = 0; step < 5; ++step) {
      const Vec2 c = pts[static_cast<std::size_t>(grid(rng)) % pts.size()];
      const auto i1 = kernels::update_min_distances(pts, c, d1);
      const auto i2 = kernels::reference::update_min_distances(pts, c, d2);
      CHECK(i1 == i2);
      CHECK(d1 == d2);
    }
  }
}

TEST_CASE("k-NN mean distances equal the reference") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  for (std::size_t k : {1u, 3u, 10u}) {
    std::vector<Vec2> pts(150);
    for (auto& p : pts) p = {n(rng), n(rng)};
    std::vector<double> a(pts.size());
    std::vector<double> b(pts.size());
    kernels::knn_mean_distances(pts, k, a);
    kernels::reference::knn_mean_distances(pts, k, b);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-14));
  }
  CHECK(kernels::max_threads() >= 1);
}
