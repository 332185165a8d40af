#include <doctest.h>

#include <cmath>

#include "hyperattn/diagnostics.hpp"
#include "hyperattn/exact.hpp"
#include "hyperattn/generators.hpp"
#include "hyperattn/lsh.hpp"
#include "oracles.hpp"

using namespace hyperattn;

namespace {

GeneratorSpec scaled() {
  GeneratorSpec g;
  g.scale_inv_sqrt_d = true;
  return g;
}

}  // namespace

TEST_CASE("degenerate exact configuration passes with negligible error") {
  const std::size_t n = 128;
  const AttentionInputs in = generate_inputs(n, 8, scaled(), 1);
  HyperParams p;
  p.block_size = n;
  p.sample_count = n;
  p.complete_cover = true;
  const SpectralReport r = verify_spectral(in, MaskSpec::full(n, n), p, 0.5);
  CHECK(r.err_op <= 1e-9);
  CHECK(r.passed);
  CHECK(r.d_err_op <= 1e-9);
  CHECK(r.mode == "complete_cover");
}

TEST_CASE("zero epsilon fails for a sampled estimate") {
  const std::size_t n = 256;
  const AttentionInputs in = generate_inputs(n, 8, scaled(), 2);
  HyperParams p;
  p.block_size = 16;
  p.sample_count = 32;
  const MaskSpec mask = sort_lsh_mask(in.q, in.k, 16, {8, 2});
  const SpectralReport r = verify_spectral(in, mask, p, 0.0);
  CHECK(r.bound == 0.0);
  CHECK(r.err_op > 0.0);
  CHECK_FALSE(r.passed);
}

TEST_CASE("report quantities match dense oracles") {
  const std::size_t n = 160;
  const AttentionInputs in = generate_inputs(n, 6, scaled(), 3);
  HyperParams p;
  p.block_size = 16;
  p.sample_count = 40;
  p.seed = 5;
  const MaskSpec mask = sort_lsh_mask(in.q, in.k, 16, {8, 5});
  const SpectralReport r = verify_spectral(in, mask, p, 0.5);
  const HyperOutput out = hyper_attention(in, mask, p);

  const Eigen::MatrixXd pm = oracle::to_eigen(oracle::from_rows(oracle::softmax(in.q, in.k, false)));
  const Eigen::MatrixXd v = oracle::to_eigen(in.v);
  const Eigen::MatrixXd err = pm * v - oracle::to_eigen(out.attention);
  CHECK(r.err_op == doctest::Approx(oracle::svd_norm(err)).epsilon(1e-9));
  CHECK(r.v_op == doctest::Approx(oracle::svd_norm(v)).epsilon(1e-9));
  CHECK(r.softmax_op == doctest::Approx(oracle::svd_norm(pm)).epsilon(1e-5));
  CHECK(r.bound == doctest::Approx(0.5 * r.softmax_op * r.v_op).epsilon(1e-15));
  CHECK(r.passed == (r.err_op <= r.bound));

  // D~^-1 A from the oracle.
  const auto a = oracle::attention(in.q, in.k, out.shift);
  Eigen::MatrixXd da(n, n), diff(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    for (double x : a[i]) row += x;
    for (std::size_t j = 0; j < n; ++j) {
      da(i, j) = a[i][j] / out.d_tilde[i];
      diff(i, j) = da(i, j) - a[i][j] / row;
    }
  }
  CHECK(r.d_err_op == doctest::Approx(oracle::svd_norm(diff)).epsilon(1e-4));
  const double s = oracle::svd_norm(da);
  CHECK(r.srank_hat == doctest::Approx(da.squaredNorm() / (s * s)).epsilon(1e-4));

  double best = 0.0;
  for (std::size_t j = 0; j < n; ++j) best = std::max(best, pm.col(j).squaredNorm());
  CHECK(r.alpha_hat == doctest::Approx(n * best).epsilon(1e-10));
  CHECK(std::isfinite(r.kappa_hat));
  CHECK(r.kappa_hat >= 1.0);
}

TEST_CASE("reports are pure functions of their inputs") {
  const std::size_t n = 128;
  const AttentionInputs in = generate_inputs(n, 4, scaled(), 9);
  HyperParams p;
  p.block_size = 16;
  p.sample_count = 16;
  p.seed = 6;
  const MaskSpec mask = sort_lsh_mask(in.q, in.k, 16, {7, 6});
  const SpectralReport a = verify_spectral(in, mask, p, 0.5);
  const SpectralReport b = verify_spectral(in, mask, p, 0.5);
  CHECK(a.err_op == b.err_op);
  CHECK(a.d_err_op == b.d_err_op);
  CHECK(a.srank_hat == b.srank_hat);
}

TEST_CASE("causal report uses the causal softmax") {
  const std::size_t n = 256;
  const AttentionInputs in = generate_inputs(n, 6, scaled(), 4);
  HyperParams p;
  p.causal_base_threshold = 64;
  p.block_size = 16;
  p.sample_count = 32;
  const SpectralReport r = verify_spectral_causal(in, p, 0.5);
  CHECK(r.causal);
  CHECK(std::isnan(r.kappa_hat));
  const HyperOutput out = causal_hyper_attention(in, p);
  const Matrix err = subtract(exact_attention(in, true), out.attention);
  CHECK(r.err_op == doctest::Approx(oracle::svd_norm(err)).epsilon(1e-9));
  CHECK(r.softmax_op ==
        doctest::Approx(oracle::svd_norm(oracle::from_rows(oracle::softmax(in.q, in.k, true))))
            .epsilon(1e-5));
}

TEST_CASE("alpha of uniform softmax is one") {
  for (std::size_t n : {8u, 64u, 512u}) {
    const Matrix z(n, 3);
    CHECK(measure_alpha(z, z) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

// Every row puts almost all of its mass on one key, so that column has squared
// norm close to n and alpha = n * n.
TEST_CASE("one dominant column gives alpha close to n squared") {
  const std::size_t n = 256, d = 4;
  Matrix q = Matrix::filled(n, d, 1.0);
  Matrix k(n, d);
  for (std::size_t t = 0; t < d; ++t) k(17, t) = 10.0;
  const double alpha = measure_alpha(q, k);
  CHECK(alpha / (double(n) * n) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(measure_alpha(q, k, 32) <= 1.0);
}

TEST_CASE("alpha sweep shape and bounds") {
  const std::vector<std::size_t> grid{128, 256, 512};
  const auto rows = alpha_sweep(grid, 16, scaled(), 3);
  REQUIRE(rows.size() == 3);
  for (std::size_t t = 0; t < 3; ++t) {
    CHECK(rows[t].n == grid[t]);
    CHECK(rows[t].alpha >= 1.0);
    CHECK(rows[t].alpha <= static_cast<double>(grid[t]));
    CHECK(rows[t].alpha_over_n == doctest::Approx(rows[t].alpha / grid[t]).epsilon(1e-15));
  }
  const auto again = alpha_sweep(grid, 16, scaled(), 3);
  CHECK(again[2].alpha == rows[2].alpha);
}

TEST_CASE("diagonal error of the exact diagonal is zero") {
  const std::size_t n = 100;
  const AttentionInputs in = generate_inputs(n, 4, scaled(), 5);
  const auto d = exact_row_sums(exact_attention_matrix(in, 0.0));
  const DiagonalError e = diagonal_spectral_error(in.q, in.k, d, 0.0);
  CHECK(e.err_op <= 1e-12);
  CHECK(e.softmax_op >= 1.0 - 1e-6);
}
