#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace hatn {

struct RunConfig {
  std::string subcommand;
  std::optional<std::size_t> n;
  std::size_t d = 64;
  std::uint64_t seed = 0;
  std::size_t b = 256;
  std::size_t m = 256;
  double epsilon = 0.5;
  std::string mask = "sortlsh";  // sortlsh | sketch | file | none
  std::string mask_file;
  std::string q_file, k_file, v_file;
  std::string mode = "practical";  // practical | theoretical
  bool causal = false;
  std::size_t causal_threshold = 4096;
  bool scale = false;
  std::string generator = "gaussian";
  double tau = 128.0;
  std::string out;
  std::size_t repeat = 1;
  std::optional<std::size_t> threads;
  bool allow_large = false;
  bool complete_cover = false;
  double threshold = 0.9;
  std::vector<std::size_t> grid;
  std::size_t exact_max = 8192;
  std::size_t exclude_prefix = 0;
  std::string dtype = "f64";
};

/// Thrown for configurations that are well-formed flags but invalid runs;
/// reported as a usage error.
struct UsageError {
  std::string message;
};

/// Largest n accepted by verify without --allow-large.
inline constexpr std::size_t kVerifyLimit = 8192;

int cmd_verify(const RunConfig& config, std::ostream& out);
int cmd_bench(const RunConfig& config, std::ostream& out, std::ostream& log);
int cmd_alpha(const RunConfig& config, std::ostream& out);
int cmd_gen(const RunConfig& config, std::ostream& log);

/// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace hatn
