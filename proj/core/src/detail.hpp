#pragma once

#include <cmath>
#include <cstddef>

#include "hyperattn/errors.hpp"

namespace hyperattn::detail {

inline double checked_exp(double logit, double shift, std::size_t i, std::size_t j) {
  const double arg = logit - shift;
  if (arg > kMaxExponent) throw ExpOverflow(i, j, arg);
  return std::exp(arg);
}

}  // namespace hyperattn::detail
