#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "hyperattn/approx_d.hpp"
#include "hyperattn/generators.hpp"
#include "hyperattn/hyper.hpp"
#include "hyperattn/mask.hpp"
#include "hyperattn/matrix.hpp"

namespace hyperattn {

/// Outcome of one spectral verification run against the dense oracle.
struct SpectralReport {
  double err_op = 0.0;      // ||Att - approx||_op
  double bound = 0.0;       // epsilon * ||D^-1 A||_op * ||V||_op
  double softmax_op = 0.0;  // ||D^-1 A||_op (causal: ||D_C^-1 (M_C . A)||_op)
  double v_op = 0.0;
  double d_err_op = 0.0;    // ||(D~^-1 - D^-1) A||_op
  double alpha_hat = 0.0;
  double kappa_hat = 0.0;   // NaN when undefined or not applicable (causal)
  double srank_hat = 0.0;   // srank(D~^-1 A)
  bool passed = false;      // err_op <= bound
  bool causal = false;
  std::uint64_t seed = 0;
  std::size_t n = 0;
  std::size_t d = 0;
  double epsilon = 0.0;
  std::size_t block_size = 0;
  std::size_t sample_count = 0;
  std::string mode;
};

/// Runs hyper_attention and measures every quantity with the dense oracles.
SpectralReport verify_spectral(const AttentionInputs& inputs, const MaskSpec& mask,
                               const HyperParams& params, double epsilon);

/// Same for causal_hyper_attention.
SpectralReport verify_spectral_causal(const AttentionInputs& inputs, const HyperParams& params,
                                      double epsilon);

/// ||(D~^-1 - D^-1) A||_op and ||D^-1 A||_op for a row-sum estimate produced
/// at `shift`.
struct DiagonalError {
  double err_op = 0.0;
  double softmax_op = 0.0;
};
DiagonalError diagonal_spectral_error(const Matrix& q, const Matrix& k,
                                      const DiagonalEstimate& d_tilde, double shift);

struct AlphaRow {
  std::size_t n = 0;
  double alpha = 0.0;
  double alpha_over_n = 0.0;
};

/// alpha = n * max_i ||D^-1 A e_i||^2 over columns i >= exclude_prefix, one
/// row per grid point. Each point uses inputs drawn from (seed, n).
std::vector<AlphaRow> alpha_sweep(const std::vector<std::size_t>& n_grid, std::size_t d,
                                  const GeneratorSpec& generator, std::uint64_t seed,
                                  std::size_t exclude_prefix = 0);

/// alpha of fixed inputs (non-causal).
double measure_alpha(const Matrix& q, const Matrix& k, std::size_t exclude_prefix = 0);

}  // namespace hyperattn
