#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <variant>
#include <vector>

namespace hyperattn {

/// Heavy-entry mask M^H over a rows x cols attention block.
///
/// Two representations:
///  - BlockPerm: query row i and key row j are masked together iff
///    floor(perm_q[i] / b) == floor(perm_k[j] / b). Blocks do not wrap and
///    the last block may be short.
///  - ExplicitSparse: a strictly sorted list of (row, col) entries.
class MaskSpec {
 public:
  struct BlockPerm {
    std::vector<std::size_t> perm_q;   // position of query row i in the sorted order
    std::vector<std::size_t> perm_k;   // position of key row j in the sorted order
    std::vector<std::size_t> order_q;  // inverse of perm_q
    std::vector<std::size_t> order_k;  // inverse of perm_k
    std::size_t block_size = 1;
  };
  struct ExplicitSparse {
    std::vector<std::pair<std::size_t, std::size_t>> entries;
    std::vector<std::size_t> row_offsets;  // CSR offsets into cols
    std::vector<std::size_t> cols;
  };

  MaskSpec() = default;

  static MaskSpec block_perm(std::vector<std::size_t> perm_q, std::vector<std::size_t> perm_k,
                             std::size_t block_size);
  static MaskSpec sparse(std::size_t rows, std::size_t cols,
                         std::vector<std::pair<std::size_t, std::size_t>> entries);
  /// No masked entries.
  static MaskSpec none(std::size_t rows, std::size_t cols);
  /// Every entry masked (a single block).
  static MaskSpec full(std::size_t rows, std::size_t cols);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool is_block() const noexcept { return std::holds_alternative<BlockPerm>(repr_); }
  const BlockPerm& block() const { return std::get<BlockPerm>(repr_); }
  const ExplicitSparse& explicit_entries() const { return std::get<ExplicitSparse>(repr_); }

  bool contains(std::size_t i, std::size_t j) const noexcept;
  std::size_t nnz() const noexcept;

  /// Masked columns of row i. Sorted for ExplicitSparse; in hash order for
  /// BlockPerm.
  std::span<const std::size_t> row_columns(std::size_t i) const noexcept;

  /// Number of diagonal blocks (BlockPerm only).
  std::size_t block_count() const noexcept;
  /// Query rows / key rows assigned to diagonal block `blk` (BlockPerm only).
  std::span<const std::size_t> block_queries(std::size_t blk) const noexcept;
  std::span<const std::size_t> block_keys(std::size_t blk) const noexcept;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::variant<ExplicitSparse, BlockPerm> repr_;
};

}  // namespace hyperattn
