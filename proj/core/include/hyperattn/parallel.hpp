#pragma once

#include <cstddef>
#include <functional>

namespace hyperattn {

/// Worker count used by parallel loops. Defaults to HATN_THREADS when set,
/// otherwise the hardware concurrency.
std::size_t num_threads() noexcept;
void set_num_threads(std::size_t threads) noexcept;

/// Calls body(begin, end) over disjoint contiguous chunks of [0, count).
///
/// Each index is visited by exactly one chunk and chunk boundaries do not
/// influence per-index results, so output is identical for any thread count.
void parallel_for(std::size_t count,
                  const std::function<void(std::size_t begin, std::size_t end)>& body);

}  // namespace hyperattn
