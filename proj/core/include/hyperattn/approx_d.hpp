#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "hyperattn/mask.hpp"
#include "hyperattn/matrix.hpp"

namespace hyperattn {

enum class ApproxDMode {
  /// Literal estimator: sampled tau, per-row caps C_i, lower clamp tau/kappa.
  Theoretical,
  /// Shared uniform column indices, no caps, no lower clamp.
  Practical,
};

struct ApproxDParams {
  double kappa = 4.0;
  double epsilon = 0.5;
  double alpha = 8.0;
  std::size_t m = 256;
  double cap_multiplier = 1.0;  // constant in front of C_i; +inf disables capping
  ApproxDMode mode = ApproxDMode::Practical;
  double shift = 0.0;
  std::uint64_t seed = 0;
  /// Draw a fresh column sample for every row instead of one shared sample.
  bool fresh_indices_per_row = false;
  /// When non-empty, used as the shared column sample (overrides m).
  std::vector<std::size_t> injected_indices;

  /// Checks kappa > 0, epsilon > 1/kappa^4, alpha > epsilon^2 kappa and
  /// 1 <= m <= cols.
  void validate(std::size_t cols) const;
  std::size_t sample_count() const noexcept {
    return injected_indices.empty() ? m : injected_indices.size();
  }
};

struct RowSumEstimate {
  std::vector<double> masked_part;        // <M_i, A_i>
  std::vector<double> unmasked_estimate;  // d_i
  double tau = 0.0;                       // sampled max unmasked row sum (theoretical mode)
  double lower_clamp = 0.0;               // tau / kappa, zero in practical mode
  std::vector<double> final;              // masked_part + max(d_i, lower_clamp)
  std::vector<std::size_t> indices;       // shared column sample; empty when fresh per row

  DiagonalEstimate diagonal() const { return DiagonalEstimate(final); }
};

/// <M^H_i, exp(K q_i - shift)> for every query row, O(d nnz(M^H)).
std::vector<double> masked_row_sums(const Matrix& q, const Matrix& k, const MaskSpec& mask,
                                    double shift);

struct TauEstimate {
  double tau = 0.0;
  std::vector<std::size_t> sample_set;
};

/// Max unmasked row sum over m query rows drawn without replacement.
TauEstimate estimate_tau(const Matrix& q, const Matrix& k, const MaskSpec& mask, std::size_t m,
                         double shift, std::uint64_t seed);

/// Near-linear estimate of the row sums of A = exp(Q K^T - shift).
RowSumEstimate approx_d(const Matrix& q, const Matrix& k, const MaskSpec& mask,
                        const ApproxDParams& params);

enum class KappaStatus { Finite, Infinite, Undefined };

struct KappaAlpha {
  double kappa = 0.0;
  double alpha = 0.0;
  KappaStatus kappa_status = KappaStatus::Finite;
};

/// kappa: max / min unmasked row sum over a probe set of rows.
/// alpha: n * max squared column norm of D^-1 A over a probe set of columns,
/// against the exact D. Quadratic; for diagnostics on desk-scale inputs.
KappaAlpha estimate_kappa_alpha(const Matrix& q, const Matrix& k, const MaskSpec& mask,
                                std::size_t probes, std::uint64_t seed);

/// Squared column norms of D^-1 A for the requested columns (exact D).
std::vector<double> softmax_column_sq_norms(const Matrix& q, const Matrix& k,
                                            const std::vector<std::size_t>& columns);

}  // namespace hyperattn
