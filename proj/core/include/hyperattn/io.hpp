#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "hyperattn/diagnostics.hpp"
#include "hyperattn/errors.hpp"
#include "hyperattn/matrix.hpp"

namespace hyperattn {

// Binary matrix file:
//   offset  size  field
//        0     4  magic "HATN"
//        4     4  version, u32 = 1
//        8     1  dtype, u8 (0 = f32, 1 = f64)
//        9     3  reserved, zero
//       12     8  rows, u64
//       20     8  cols, u64
//       28     -  rows * cols values, row-major
// All integers and values little-endian.

inline constexpr std::size_t kHeaderBytes = 28;
inline constexpr std::uint32_t kFormatVersion = 1;

enum class DType : std::uint8_t { F32 = 0, F64 = 1 };

enum class IoErrorCode {
  OpenFailed,
  BadMagic,
  VersionMismatch,
  BadDType,
  BadReserved,
  Truncated,
  TrailingBytes,
  NonFinite,
  WriteFailed,
};

std::string_view io_error_name(IoErrorCode code) noexcept;

class IoError : public Error {
 public:
  IoError(IoErrorCode code, const std::string& detail);
  IoErrorCode code() const noexcept { return code_; }

 private:
  IoErrorCode code_;
};

struct MatrixFileHeader {
  std::uint32_t version = kFormatVersion;
  DType dtype = DType::F64;
  std::uint64_t rows = 0;
  std::uint64_t cols = 0;
};

std::vector<std::uint8_t> encode_header(const MatrixFileHeader& header);
/// Throws IoError for a wrong magic, version, dtype, reserved bytes or a
/// short buffer.
MatrixFileHeader decode_header(std::span<const std::uint8_t> bytes);

/// f32 output rounds each value to nearest, ties to even.
std::vector<std::uint8_t> serialize_matrix(const Matrix& m, DType dtype = DType::F64);
Matrix parse_matrix(std::span<const std::uint8_t> bytes);

void write_matrix(const std::filesystem::path& path, const Matrix& m, DType dtype = DType::F64);
Matrix read_matrix(const std::filesystem::path& path);

// Reports.

std::string report_json(const SpectralReport& report);
/// {"reports": [...], "pass_rate": p, "threshold": t, "passed": bool}
std::string reports_json(const std::vector<SpectralReport>& reports, double threshold);

void write_alpha_csv(std::ostream& os, const std::vector<AlphaRow>& rows);

struct BenchRow {
  std::size_t n = 0;
  std::string variant;
  double median_seconds = 0.0;
  std::size_t repeats = 0;
};
void write_bench_csv(std::ostream& os, const std::vector<BenchRow>& rows);

}  // namespace hyperattn
