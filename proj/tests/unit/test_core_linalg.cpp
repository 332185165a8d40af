#include <doctest.h>

#include <cmath>
#include <limits>

#include "hyperattn/errors.hpp"
#include "hyperattn/exact.hpp"
#include "hyperattn/generators.hpp"
#include "hyperattn/matrix.hpp"
#include "hyperattn/random.hpp"
#include "hyperattn/spectral.hpp"
#include "oracles.hpp"

using namespace hyperattn;

namespace {

AttentionInputs zeros(std::size_t n, std::size_t d, std::uint64_t seed) {
  return AttentionInputs(Matrix(n, d), Matrix(n, d), gaussian_matrix(n, d, seed));
}

}  // namespace

TEST_CASE("matrix construction enforces shape and finiteness") {
  CHECK_THROWS_AS(Matrix(2, 2, {1.0, 2.0, 3.0}), InvalidArgument);
  CHECK_THROWS_AS(Matrix(1, 2, {1.0, std::numeric_limits<double>::quiet_NaN()}), InvalidArgument);
  CHECK_THROWS_AS(Matrix(1, 1, {std::numeric_limits<double>::infinity()}), InvalidArgument);
  Matrix m(2, 3, {1, 2, 3, 4, 5, 6});
  CHECK(m(1, 2) == 6.0);
  CHECK(m.transposed()(2, 1) == 6.0);
  CHECK(m.row_slice(1, 2).row(0)[0] == 4.0);
  CHECK_THROWS_AS(m.row_slice(1, 3), InvalidArgument);
}

TEST_CASE("attention inputs must share one shape") {
  CHECK_THROWS_AS(AttentionInputs(Matrix(3, 2), Matrix(3, 2), Matrix(2, 2)), InvalidArgument);
  CHECK_THROWS_AS(AttentionInputs(Matrix(3, 2), Matrix(3, 3), Matrix(3, 2)), InvalidArgument);
  CHECK_NOTHROW(AttentionInputs(Matrix(3, 2), Matrix(3, 2), Matrix(3, 2)));
}

TEST_CASE("diagonal estimate entries are positive") {
  CHECK_THROWS_AS(DiagonalEstimate({1.0, 0.0}), InvalidArgument);
  CHECK_THROWS_AS(DiagonalEstimate({1.0, -2.0}), InvalidArgument);
  CHECK_THROWS_AS(DiagonalEstimate({std::numeric_limits<double>::infinity()}), InvalidArgument);
  CHECK(DiagonalEstimate({0.5, 2.0}).size() == 2);
}

TEST_CASE("exact_attention_matrix of zero inputs is all ones") {
  const Matrix a = exact_attention_matrix(Matrix(4, 2), Matrix(4, 2), 0.0);
  CHECK(a == Matrix::filled(4, 4, 1.0));
}

TEST_CASE("exact_attention_matrix follows the exponent law under a shift") {
  const Matrix q = gaussian_matrix(6, 3, 1);
  const Matrix k = gaussian_matrix(6, 3, 2);
  const double c = 2.5;
  const Matrix a0 = exact_attention_matrix(q, k, 0.0);
  const Matrix ac = exact_attention_matrix(q, k, c);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 6; ++j)
      CHECK(ac(i, j) == doctest::Approx(std::exp(-c) * a0(i, j)).epsilon(1e-14));
}

TEST_CASE("exact_attention_matrix matches the scalar oracle") {
  const Matrix q = gaussian_matrix(3, 2, derive_seed(7, {1}));
  const Matrix k = gaussian_matrix(3, 2, derive_seed(7, {2}));
  const Matrix a = exact_attention_matrix(q, k, 0.0);
  const Matrix ref = oracle::from_rows(oracle::attention(q, k, 0.0));
  CHECK(oracle::max_rel_diff(a, ref) <= 1e-14);
}

TEST_CASE("exact_attention_matrix reports the overflowing entry") {
  Matrix q(3, 1, {0.0, 30.0, 0.0});
  Matrix k(3, 1, {0.0, 0.0, 30.0});
  try {
    exact_attention_matrix(q, k, 0.0);
    FAIL("expected ExpOverflow");
  } catch (const ExpOverflow& e) {
    CHECK(e.row() == 1);
    CHECK(e.col() == 2);
    CHECK(e.exponent() == doctest::Approx(900.0));
  }
  CHECK_NOTHROW(exact_attention_matrix(q, k, 300.0));
}

TEST_CASE("exact_row_sums") {
  CHECK(exact_row_sums(Matrix::filled(4, 4, 1.0)).values == std::vector<double>{4, 4, 4, 4});
  CHECK(exact_row_sums(Matrix::identity(3)).values == std::vector<double>{1, 1, 1});

  Matrix r = gaussian_matrix(5, 5, 99);
  for (double& x : r.data()) x = std::abs(x);
  const auto sums = exact_row_sums(r);
  for (std::size_t i = 0; i < 5; ++i) {
    long double s = 0.0L;
    for (std::size_t j = 0; j < 5; ++j) s += r(i, j);
    CHECK(sums[i] == doctest::Approx(static_cast<double>(s)).epsilon(1e-15));
  }
}

TEST_CASE("uniform softmax averages V") {
  const AttentionInputs in = zeros(5, 3, 4);
  const Matrix out = exact_attention(in, false);
  for (std::size_t t = 0; t < 3; ++t) {
    double mean = 0.0;
    for (std::size_t j = 0; j < 5; ++j) mean += in.v(j, t);
    mean /= 5.0;
    for (std::size_t i = 0; i < 5; ++i) CHECK(out(i, t) == doctest::Approx(mean).epsilon(1e-14));
  }
}

TEST_CASE("causal uniform softmax averages the prefix") {
  const AttentionInputs in = zeros(2, 3, 5);
  const Matrix out = exact_attention(in, true);
  for (std::size_t t = 0; t < 3; ++t) {
    CHECK(out(0, t) == doctest::Approx(in.v(0, t)).epsilon(1e-15));
    CHECK(out(1, t) == doctest::Approx(0.5 * (in.v(0, t) + in.v(1, t))).epsilon(1e-14));
  }
}

TEST_CASE("exact_attention matches the scalar softmax oracle") {
  const AttentionInputs in = generate_inputs(64, 8, {}, 3);
  for (bool causal : {false, true}) {
    const Matrix out = exact_attention(in, causal);
    const Matrix ref = oracle::times(oracle::softmax(in.q, in.k, causal), in.v);
    CHECK(oracle::max_scaled_diff(out, ref) <= 1e-12);
  }
}

TEST_CASE("softmax is shift invariant and row stochastic") {
  const AttentionInputs in = generate_inputs(32, 4, {}, 8);
  const Matrix a1 = exact_attention_matrix(in, -3.0);
  const Matrix a2 = exact_attention_matrix(in, 7.0);
  const auto d1 = exact_row_sums(a1);
  const auto d2 = exact_row_sums(a2);
  for (std::size_t i = 0; i < 32; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < 32; ++j) {
      CHECK(a1(i, j) / d1[i] == doctest::Approx(a2(i, j) / d2[i]).epsilon(1e-12));
      row += a1(i, j) / d1[i];
    }
    CHECK(row == doctest::Approx(1.0).epsilon(1e-12));
  }
  const Matrix p = softmax_matrix(in.q, in.k, false);
  for (std::size_t i = 0; i < 32; ++i) {
    double row = 0.0;
    for (double x : p.row(i)) row += x;
    CHECK(row == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(operator_norm(p).value >= 1.0 - 1e-6);
}

TEST_CASE("causal attention equals attention with the upper triangle removed") {
  const AttentionInputs in = generate_inputs(40, 6, {}, 12);
  const Matrix causal = exact_attention(in, true);
  Matrix a = exact_attention_matrix(in, 0.0);
  for (std::size_t i = 0; i < 40; ++i)
    for (std::size_t j = i + 1; j < 40; ++j) a(i, j) = 0.0;
  const auto d = exact_row_sums(a);
  const Matrix ref = matmul(scale_rows(a, [&] {
                              std::vector<double> inv(40);
                              for (std::size_t i = 0; i < 40; ++i) inv[i] = 1.0 / d[i];
                              return inv;
                            }()),
                            in.v);
  CHECK(oracle::max_scaled_diff(causal, ref) <= 1e-12);
}

TEST_CASE("exact causal row sums match the scalar oracle") {
  const AttentionInputs in = generate_inputs(20, 3, {}, 6);
  const auto sums = exact_causal_row_sums(in.q, in.k, 0.5);
  const auto a = oracle::attention(in.q, in.k, 0.5);
  for (std::size_t i = 0; i < 20; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j <= i; ++j) s += a[i][j];
    CHECK(sums[i] == doctest::Approx(s).epsilon(1e-13));
  }
}

TEST_CASE("auto_shift is zero for ordinary inputs and keeps large inputs finite") {
  const AttentionInputs in = generate_inputs(16, 4, {}, 1);
  CHECK(auto_shift(in.q, in.k) == 0.0);
  Matrix q = in.q;
  for (double& x : q.data()) x *= 400.0;
  const double s = auto_shift(q, in.k);
  CHECK(s > 0.0);
  CHECK_NOTHROW(exact_attention_matrix(q, in.k, s));
}

TEST_CASE("operator_norm examples") {
  Matrix diag(3, 3);
  diag(0, 0) = 3.0;
  diag(1, 1) = 1.0;
  diag(2, 2) = 0.5;
  const auto e = operator_norm(diag);
  CHECK(e.converged);
  CHECK(e.value == doctest::Approx(3.0).epsilon(1e-6));

  const auto ones = operator_norm(Matrix::filled(10, 10, 1.0));
  CHECK(ones.value == doctest::Approx(10.0).epsilon(1e-6));

  const Matrix r = gaussian_matrix(20, 20, 11);
  PowerIterationOptions opts;
  opts.seed = 11;
  const auto est = operator_norm(r, opts);
  CHECK(est.converged);
  CHECK(est.value == doctest::Approx(oracle::svd_norm(r)).epsilon(1e-6));
}

TEST_CASE("operator_norm flags non-convergence and rejects bad tolerance") {
  PowerIterationOptions opts;
  opts.max_iter = 1;
  const auto e = operator_norm(gaussian_matrix(8, 8, 2), opts);
  CHECK_FALSE(e.converged);
  CHECK(e.iterations == 1);
  opts.rel_tol = 0.0;
  CHECK_THROWS_AS(operator_norm(gaussian_matrix(2, 2, 2), opts), InvalidArgument);
}

TEST_CASE("operator_norm is symmetric under transpose") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Matrix m = gaussian_matrix(15, 9, seed);
    PowerIterationOptions opts;
    opts.seed = seed;
    const double a = operator_norm(m, opts).value;
    const double b = operator_norm(m.transposed(), opts).value;
    CHECK(std::abs(a - b) <= 2e-6 * a);
  }
}

TEST_CASE("gram_operator_norm matches the SVD oracle") {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const Matrix tall = gaussian_matrix(200, 7, seed);
    CHECK(gram_operator_norm(tall) == doctest::Approx(oracle::svd_norm(tall)).epsilon(1e-10));
    const Matrix wide = tall.transposed();
    CHECK(gram_operator_norm(wide) == doctest::Approx(oracle::svd_norm(wide)).epsilon(1e-10));
  }
  CHECK(gram_operator_norm(Matrix(4, 3)) == 0.0);
}

TEST_CASE("scaled_operator_norm equals the norm of the row-scaled matrix") {
  const Matrix m = gaussian_matrix(30, 12, 4);
  std::vector<double> s(30);
  for (std::size_t i = 0; i < 30; ++i) s[i] = 0.1 * static_cast<double>(i) - 1.0;
  CHECK(scaled_operator_norm(m, s).value ==
        doctest::Approx(oracle::svd_norm(scale_rows(m, s))).epsilon(1e-5));
}

TEST_CASE("stable_rank examples") {
  const auto id = stable_rank(Matrix::identity(6));
  CHECK(id.value == doctest::Approx(6.0).epsilon(1e-6));

  Matrix outer(5, 4);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 4; ++j)
      outer(i, j) = static_cast<double>(i + 1) * (static_cast<double>(j) - 1.5);
  CHECK(stable_rank(outer).value == doctest::Approx(1.0).epsilon(2e-6));

  const Matrix r = gaussian_matrix(16, 16, 21);
  const double sigma = oracle::svd_norm(r);
  const double fro = frobenius_norm(r);
  CHECK(stable_rank(r).value == doctest::Approx(fro * fro / (sigma * sigma)).epsilon(1e-5));

  CHECK_THROWS_AS(stable_rank(Matrix(3, 3)), InvalidArgument);
}

TEST_CASE("matmul helpers match Eigen") {
  const Matrix a = gaussian_matrix(7, 5, 1);
  const Matrix b = gaussian_matrix(5, 4, 2);
  const Eigen::MatrixXd ref = oracle::to_eigen(a) * oracle::to_eigen(b);
  const Matrix c = matmul(a, b);
  for (std::size_t i = 0; i < 7; ++i)
    for (std::size_t j = 0; j < 4; ++j) CHECK(c(i, j) == doctest::Approx(ref(i, j)).epsilon(1e-13));
  const Matrix bt = b.transposed();
  CHECK(oracle::max_scaled_diff(matmul_transposed(a, bt), c) <= 1e-15);
  CHECK_THROWS_AS(matmul(a, a), InvalidArgument);
}
