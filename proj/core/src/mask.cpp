#include "hyperattn/mask.hpp"

#include <algorithm>
#include <numeric>

#include "hyperattn/errors.hpp"

namespace hyperattn {
namespace {

std::vector<std::size_t> invert_permutation(const std::vector<std::size_t>& perm,
                                            const char* name) {
  std::vector<std::size_t> inverse(perm.size(), perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i) {
    if (perm[i] >= perm.size() || inverse[perm[i]] != perm.size()) {
      throw InvalidArgument(std::string(name) + " is not a permutation");
    }
    inverse[perm[i]] = i;
  }
  return inverse;
}

std::size_t ceil_div(std::size_t a, std::size_t b) noexcept { return (a + b - 1) / b; }

}  // namespace

MaskSpec MaskSpec::block_perm(std::vector<std::size_t> perm_q, std::vector<std::size_t> perm_k,
                              std::size_t block_size) {
  if (block_size == 0) throw InvalidArgument("block size must be at least 1");
  MaskSpec mask;
  mask.rows_ = perm_q.size();
  mask.cols_ = perm_k.size();
  BlockPerm bp;
  bp.order_q = invert_permutation(perm_q, "perm_q");
  bp.order_k = invert_permutation(perm_k, "perm_k");
  bp.perm_q = std::move(perm_q);
  bp.perm_k = std::move(perm_k);
  bp.block_size = block_size;
  mask.repr_ = std::move(bp);
  return mask;
}

MaskSpec MaskSpec::sparse(std::size_t rows, std::size_t cols,
                          std::vector<std::pair<std::size_t, std::size_t>> entries) {
  for (std::size_t t = 0; t < entries.size(); ++t) {
    if (entries[t].first >= rows || entries[t].second >= cols)
      throw InvalidArgument("sparse mask entry out of range");
    if (t > 0 && !(entries[t - 1] < entries[t]))
      throw InvalidArgument("sparse mask entries must be strictly sorted");
  }
  MaskSpec mask;
  mask.rows_ = rows;
  mask.cols_ = cols;
  ExplicitSparse es;
  es.row_offsets.assign(rows + 1, 0);
  for (const auto& [i, j] : entries) ++es.row_offsets[i + 1];
  std::partial_sum(es.row_offsets.begin(), es.row_offsets.end(), es.row_offsets.begin());
  es.cols.reserve(entries.size());
  for (const auto& e : entries) es.cols.push_back(e.second);
  es.entries = std::move(entries);
  mask.repr_ = std::move(es);
  return mask;
}

MaskSpec MaskSpec::none(std::size_t rows, std::size_t cols) { return sparse(rows, cols, {}); }

MaskSpec MaskSpec::full(std::size_t rows, std::size_t cols) {
  std::vector<std::size_t> pq(rows);
  std::vector<std::size_t> pk(cols);
  std::iota(pq.begin(), pq.end(), std::size_t{0});
  std::iota(pk.begin(), pk.end(), std::size_t{0});
  return block_perm(std::move(pq), std::move(pk), std::max<std::size_t>({rows, cols, 1}));
}

bool MaskSpec::contains(std::size_t i, std::size_t j) const noexcept {
  if (const auto* bp = std::get_if<BlockPerm>(&repr_)) {
    return bp->perm_q[i] / bp->block_size == bp->perm_k[j] / bp->block_size;
  }
  const auto& es = std::get<ExplicitSparse>(repr_);
  auto first = es.cols.begin() + static_cast<std::ptrdiff_t>(es.row_offsets[i]);
  auto last = es.cols.begin() + static_cast<std::ptrdiff_t>(es.row_offsets[i + 1]);
  return std::binary_search(first, last, j);
}

std::size_t MaskSpec::nnz() const noexcept {
  if (is_block()) {
    std::size_t total = 0;
    for (std::size_t blk = 0; blk < block_count(); ++blk)
      total += block_queries(blk).size() * block_keys(blk).size();
    return total;
  }
  return std::get<ExplicitSparse>(repr_).entries.size();
}

std::span<const std::size_t> MaskSpec::row_columns(std::size_t i) const noexcept {
  if (const auto* bp = std::get_if<BlockPerm>(&repr_)) {
    return block_keys(bp->perm_q[i] / bp->block_size);
  }
  const auto& es = std::get<ExplicitSparse>(repr_);
  return {es.cols.data() + es.row_offsets[i], es.row_offsets[i + 1] - es.row_offsets[i]};
}

std::size_t MaskSpec::block_count() const noexcept {
  const auto* bp = std::get_if<BlockPerm>(&repr_);
  if (!bp) return 0;
  return std::max(ceil_div(rows_, bp->block_size), ceil_div(cols_, bp->block_size));
}

std::span<const std::size_t> MaskSpec::block_queries(std::size_t blk) const noexcept {
  const auto& bp = std::get<BlockPerm>(repr_);
  const std::size_t begin = std::min(rows_, blk * bp.block_size);
  const std::size_t end = std::min(rows_, begin + bp.block_size);
  return {bp.order_q.data() + begin, end - begin};
}

std::span<const std::size_t> MaskSpec::block_keys(std::size_t blk) const noexcept {
  const auto& bp = std::get<BlockPerm>(repr_);
  const std::size_t begin = std::min(cols_, blk * bp.block_size);
  const std::size_t end = std::min(cols_, begin + bp.block_size);
  return {bp.order_k.data() + begin, end - begin};
}

}  // namespace hyperattn
