#include "hyperattn/io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <ostream>

#include <json.hpp>

namespace hyperattn {

std::string_view io_error_name(IoErrorCode code) noexcept {
  switch (code) {
    case IoErrorCode::OpenFailed:
      return "open_failed";
    case IoErrorCode::BadMagic:
      return "bad_magic";
    case IoErrorCode::VersionMismatch:
      return "version_mismatch";
    case IoErrorCode::BadDType:
      return "bad_dtype";
    case IoErrorCode::BadReserved:
      return "bad_reserved";
    case IoErrorCode::Truncated:
      return "truncated";
    case IoErrorCode::TrailingBytes:
      return "trailing_bytes";
    case IoErrorCode::NonFinite:
      return "non_finite";
    case IoErrorCode::WriteFailed:
      return "write_failed";
  }
  return "unknown";
}

IoError::IoError(IoErrorCode code, const std::string& detail)
    : Error(std::string(io_error_name(code)) + ": " + detail), code_(code) {}

namespace {

constexpr std::uint8_t kMagic[4] = {'H', 'A', 'T', 'N'};

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                               std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint8_t>>;
  const U bits = std::bit_cast<U>(value);
  for (std::size_t b = 0; b < sizeof(T); ++b)
    out.push_back(static_cast<std::uint8_t>((bits >> (8 * b)) & 0xffu));
}

template <typename T>
T get_le(const std::uint8_t* p) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                               std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint8_t>>;
  U bits = 0;
  for (std::size_t b = 0; b < sizeof(T); ++b) bits |= static_cast<U>(U{p[b]} << (8 * b));
  return std::bit_cast<T>(bits);
}

std::size_t dtype_size(DType d) { return d == DType::F32 ? 4 : 8; }

}  // namespace

std::vector<std::uint8_t> encode_header(const MatrixFileHeader& header) {
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  out.reserve(kHeaderBytes);
  put_le(out, header.version);
  out.push_back(static_cast<std::uint8_t>(header.dtype));
  out.insert(out.end(), 3, 0);
  put_le(out, header.rows);
  put_le(out, header.cols);
  return out;
}

MatrixFileHeader decode_header(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw IoError(IoErrorCode::BadMagic, "file does not start with HATN");
  if (bytes.size() < kHeaderBytes)
    throw IoError(IoErrorCode::Truncated, "header shorter than 28 bytes");
  MatrixFileHeader h;
  h.version = get_le<std::uint32_t>(bytes.data() + 4);
  if (h.version != kFormatVersion)
    throw IoError(IoErrorCode::VersionMismatch, "version " + std::to_string(h.version));
  const std::uint8_t dtype = bytes[8];
  if (dtype > 1) throw IoError(IoErrorCode::BadDType, "dtype " + std::to_string(dtype));
  h.dtype = static_cast<DType>(dtype);
  if (bytes[9] != 0 || bytes[10] != 0 || bytes[11] != 0)
    throw IoError(IoErrorCode::BadReserved, "reserved bytes must be zero");
  h.rows = get_le<std::uint64_t>(bytes.data() + 12);
  h.cols = get_le<std::uint64_t>(bytes.data() + 20);
  return h;
}

std::vector<std::uint8_t> serialize_matrix(const Matrix& m, DType dtype) {
  MatrixFileHeader h;
  h.dtype = dtype;
  h.rows = m.rows();
  h.cols = m.cols();
  std::vector<std::uint8_t> out = encode_header(h);
  out.reserve(kHeaderBytes + m.data().size() * dtype_size(dtype));
  for (double x : m.data()) {
    if (dtype == DType::F64) {
      put_le(out, x);
    } else {
      const float f = static_cast<float>(x);
      if (!std::isfinite(f)) throw IoError(IoErrorCode::NonFinite, "value overflows f32");
      put_le(out, f);
    }
  }
  return out;
}

Matrix parse_matrix(std::span<const std::uint8_t> bytes) {
  const MatrixFileHeader h = decode_header(bytes);
  const std::size_t width = dtype_size(h.dtype);
  if (h.cols != 0 && h.rows > (std::numeric_limits<std::uint64_t>::max() / h.cols) / width)
    throw IoError(IoErrorCode::Truncated, "declared shape exceeds any payload");
  const std::uint64_t count = h.rows * h.cols;
  const std::uint64_t payload = bytes.size() - kHeaderBytes;
  if (payload < count * width)
    throw IoError(IoErrorCode::Truncated, "payload has " + std::to_string(payload) +
                                              " bytes, expected " + std::to_string(count * width));
  if (payload > count * width)
    throw IoError(IoErrorCode::TrailingBytes, "payload longer than rows * cols values");

  std::vector<double> data(count);
  const std::uint8_t* p = bytes.data() + kHeaderBytes;
  for (std::uint64_t t = 0; t < count; ++t, p += width) {
    data[t] = h.dtype == DType::F64 ? get_le<double>(p) : static_cast<double>(get_le<float>(p));
    if (!std::isfinite(data[t]))
      throw IoError(IoErrorCode::NonFinite, "entry " + std::to_string(t) + " is not finite");
  }
  return Matrix(h.rows, h.cols, std::move(data));
}

void write_matrix(const std::filesystem::path& path, const Matrix& m, DType dtype) {
  const auto bytes = serialize_matrix(m, dtype);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError(IoErrorCode::OpenFailed, path.string());
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw IoError(IoErrorCode::WriteFailed, path.string());
}

Matrix read_matrix(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError(IoErrorCode::OpenFailed, path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)),
                                        std::istreambuf_iterator<char>());
  return parse_matrix(bytes);
}

namespace {

nlohmann::json to_json(const SpectralReport& r) {
  auto num = [](double x) -> nlohmann::json {
    if (std::isfinite(x)) return x;
    if (std::isnan(x)) return nullptr;
    return x > 0 ? "inf" : "-inf";
  };
  return {
      {"err_op", num(r.err_op)},
      {"bound", num(r.bound)},
      {"softmax_op", num(r.softmax_op)},
      {"v_op", num(r.v_op)},
      {"d_err_op", num(r.d_err_op)},
      {"alpha_hat", num(r.alpha_hat)},
      {"kappa_hat", num(r.kappa_hat)},
      {"srank_hat", num(r.srank_hat)},
      {"passed", r.passed},
      {"causal", r.causal},
      {"seed", r.seed},
      {"n", r.n},
      {"d", r.d},
      {"epsilon", r.epsilon},
      {"block_size", r.block_size},
      {"sample_count", r.sample_count},
      {"mode", r.mode},
  };
}

}  // namespace

std::string report_json(const SpectralReport& report) { return to_json(report).dump(2); }

std::string reports_json(const std::vector<SpectralReport>& reports, double threshold) {
  nlohmann::json arr = nlohmann::json::array();
  std::size_t passed = 0;
  for (const auto& r : reports) {
    arr.push_back(to_json(r));
    passed += r.passed ? 1 : 0;
  }
  const double rate =
      reports.empty() ? 0.0 : static_cast<double>(passed) / static_cast<double>(reports.size());
  nlohmann::json doc = {
      {"reports", arr},
      {"pass_rate", rate},
      {"threshold", threshold},
      {"passed", !reports.empty() && rate >= threshold},
  };
  return doc.dump(2);
}

void write_alpha_csv(std::ostream& os, const std::vector<AlphaRow>& rows) {
  os << "n,alpha,alpha_over_n\n";
  os.precision(17);
  for (const auto& r : rows) os << r.n << ',' << r.alpha << ',' << r.alpha_over_n << '\n';
}

void write_bench_csv(std::ostream& os, const std::vector<BenchRow>& rows) {
  os << "n,variant,median_seconds,repeats\n";
  os.precision(9);
  for (const auto& r : rows)
    os << r.n << ',' << r.variant << ',' << r.median_seconds << ',' << r.repeats << '\n';
}

}  // namespace hyperattn
