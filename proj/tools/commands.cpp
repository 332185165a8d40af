#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>

#include <json.hpp>

#include "hyperattn/diagnostics.hpp"
#include "hyperattn/exact.hpp"
#include "hyperattn/generators.hpp"
#include "hyperattn/heavy_sketch.hpp"
#include "hyperattn/hyper.hpp"
#include "hyperattn/io.hpp"
#include "hyperattn/lsh.hpp"
#include "hyperattn/random.hpp"

namespace hatn {

using namespace hyperattn;

namespace {

GeneratorSpec generator_spec(const RunConfig& c) {
  GeneratorSpec g;
  g.kind = parse_generator(c.generator);
  g.scale_inv_sqrt_d = c.scale;
  return g;
}

ApproxDMode parse_mode(const std::string& mode) {
  if (mode == "practical") return ApproxDMode::Practical;
  if (mode == "theoretical") return ApproxDMode::Theoretical;
  throw UsageError{"unknown mode '" + mode + "'"};
}

HyperParams hyper_params(const RunConfig& c, std::uint64_t seed) {
  HyperParams p;
  p.block_size = c.b;
  p.sample_count = c.m;
  p.epsilon = c.epsilon;
  p.approx_d.mode = parse_mode(c.mode);
  p.causal_base_threshold = c.causal_threshold;
  p.complete_cover = c.complete_cover;
  p.offdiag_lsh_mask = c.mask != "none";
  p.seed = seed;
  return p;
}

bool have_files(const RunConfig& c) {
  return !c.q_file.empty() || !c.k_file.empty() || !c.v_file.empty();
}

AttentionInputs load_inputs(const RunConfig& c) {
  if (c.q_file.empty() || c.k_file.empty() || c.v_file.empty())
    throw UsageError{"--q, --k and --v must be given together"};
  AttentionInputs in(read_matrix(c.q_file), read_matrix(c.k_file), read_matrix(c.v_file));
  if (c.scale) {
    const double s = 1.0 / std::sqrt(static_cast<double>(in.d()));
    for (double& x : in.q.data()) x *= s;
    for (double& x : in.k.data()) x *= s;
  }
  return in;
}

// Mask files hold an nnz x 2 matrix of (row, col) index pairs.
MaskSpec load_mask(const std::string& path, std::size_t rows, std::size_t cols) {
  const Matrix pairs = read_matrix(path);
  if (pairs.rows() > 0 && pairs.cols() != 2)
    throw UsageError{"mask file must hold an nnz x 2 matrix of index pairs"};
  std::vector<std::pair<std::size_t, std::size_t>> entries;
  entries.reserve(pairs.rows());
  for (std::size_t t = 0; t < pairs.rows(); ++t) {
    const double i = pairs(t, 0), j = pairs(t, 1);
    if (i < 0 || j < 0 || i != std::floor(i) || j != std::floor(j) ||
        i >= static_cast<double>(rows) || j >= static_cast<double>(cols))
      throw UsageError{"mask file entry " + std::to_string(t) + " is not a valid index pair"};
    entries.emplace_back(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
  }
  return MaskSpec::sparse(rows, cols, std::move(entries));
}

MaskSpec build_mask(const RunConfig& c, const AttentionInputs& in, std::uint64_t seed) {
  const std::size_t n = in.n();
  if (c.mask == "sortlsh")
    return sort_lsh_mask(in.q, in.k, c.b,
                         {default_hash_bits(n), derive_seed(seed, {stream::kLsh})});
  if (c.mask == "sketch")
    return sketch_heavy_mask(in.q, in.k, SketchParams::with_defaults(c.tau, seed));
  if (c.mask == "file") {
    if (c.mask_file.empty()) throw UsageError{"--mask file needs --mask-file"};
    return load_mask(c.mask_file, n, in.k.rows());
  }
  if (c.mask == "none") return MaskSpec::none(n, in.k.rows());
  throw UsageError{"unknown mask source '" + c.mask + "'"};
}

nlohmann::json config_json(const RunConfig& c) {
  nlohmann::json j = {
      {"subcommand", c.subcommand}, {"d", c.d},           {"seed", c.seed},
      {"b", c.b},                   {"m", c.m},           {"epsilon", c.epsilon},
      {"mask", c.mask},             {"mode", c.mode},     {"causal", c.causal},
      {"scale", c.scale},           {"generator", c.generator},
      {"repeat", c.repeat},         {"complete_cover", c.complete_cover},
      {"threshold", c.threshold},   {"causal_threshold", c.causal_threshold},
  };
  j["n"] = c.n ? nlohmann::json(*c.n) : nlohmann::json(nullptr);
  if (c.mask == "sketch") j["tau"] = c.tau;
  if (c.mask == "file") j["mask_file"] = c.mask_file;
  if (have_files(c)) j["inputs"] = {c.q_file, c.k_file, c.v_file};
  return j;
}

// Output goes to --out when given, otherwise to the supplied stream.
template <typename Fn>
void emit(const RunConfig& c, std::ostream& fallback, Fn&& write) {
  if (c.out.empty()) {
    write(fallback);
    return;
  }
  std::ofstream os(c.out);
  if (!os) throw IoError(IoErrorCode::OpenFailed, c.out);
  write(os);
  if (!os) throw IoError(IoErrorCode::WriteFailed, c.out);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

template <typename Fn>
double time_median(std::size_t repeats, Fn&& fn) {
  using clock = std::chrono::steady_clock;
  fn();  // warm-up
  std::vector<double> seconds;
  for (std::size_t r = 0; r < repeats; ++r) {
    const auto t0 = clock::now();
    fn();
    seconds.push_back(std::chrono::duration<double>(clock::now() - t0).count());
  }
  return median(seconds);
}

}  // namespace

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t k = x.size();
  if (k < 2 || y.size() != k) return std::nan("");
  double mx = 0.0, my = 0.0;
  for (std::size_t t = 0; t < k; ++t) {
    mx += std::log(x[t]);
    my += std::log(y[t]);
  }
  mx /= k;
  my /= k;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t t = 0; t < k; ++t) {
    const double dx = std::log(x[t]) - mx;
    sxy += dx * (std::log(y[t]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

int cmd_verify(const RunConfig& c, std::ostream& out) {
  if (!c.n && !have_files(c)) throw UsageError{"verify needs --n or --q/--k/--v"};
  if (c.repeat == 0) throw UsageError{"--repeat must be at least 1"};
  const AttentionInputs from_files = have_files(c) ? load_inputs(c) : AttentionInputs{};
  const std::size_t n = have_files(c) ? from_files.n() : *c.n;
  if (n > kVerifyLimit && !c.allow_large)
    throw UsageError{"verify builds dense n x n oracles; n = " + std::to_string(n) +
                     " exceeds " + std::to_string(kVerifyLimit) + " (pass --allow-large)"};
  if (c.causal && c.mask != "sortlsh" && c.mask != "none")
    throw UsageError{"causal verification supports --mask sortlsh or none"};

  std::vector<SpectralReport> reports;
  for (std::size_t r = 0; r < c.repeat; ++r) {
    // Repeat r is reproducible alone with --seed seed+r --repeat 1.
    const std::uint64_t seed = c.seed + r;
    const AttentionInputs in =
        have_files(c) ? from_files : generate_inputs(n, c.d, generator_spec(c), seed);
    const HyperParams p = hyper_params(c, seed);
    reports.push_back(c.causal ? verify_spectral_causal(in, p, c.epsilon)
                               : verify_spectral(in, build_mask(c, in, seed), p, c.epsilon));
  }

  nlohmann::json doc = nlohmann::json::parse(reports_json(reports, c.threshold));
  doc["config"] = config_json(c);
  emit(c, out, [&](std::ostream& os) { os << doc.dump(2) << '\n'; });
  return doc["passed"].get<bool>() ? 0 : 1;
}

int cmd_bench(const RunConfig& c, std::ostream& out, std::ostream& log) {
  const std::vector<std::size_t> grid =
      c.grid.empty() ? std::vector<std::size_t>{1024, 2048, 4096, 8192, 16384, 32768, 65536}
                     : c.grid;
  const std::size_t repeats = std::max<std::size_t>(c.repeat, 5);
  std::vector<BenchRow> rows;
  std::map<std::string, std::vector<std::pair<double, double>>> series;
  const GeneratorSpec gen = generator_spec(c);

  for (std::size_t n : grid) {
    const AttentionInputs in = generate_inputs(n, c.d, gen, c.seed);
    const HyperParams p = hyper_params(c, c.seed);
    auto record = [&](const std::string& variant, double seconds) {
      rows.push_back({n, variant, seconds, repeats});
      series[variant].emplace_back(static_cast<double>(n), seconds);
      log << "n=" << n << ' ' << variant << ' ' << seconds << " s\n";
    };
    const std::string suffix = c.causal ? "_causal" : "";
    record("hyper" + suffix, time_median(repeats, [&] {
             if (c.causal)
               causal_hyper_attention(in, p);
             else
               hyper_attention_lsh(in, p);
           }));
    if (n <= c.exact_max)
      record("exact" + suffix, time_median(repeats, [&] { exact_attention(in, c.causal); }));
  }

  emit(c, out, [&](std::ostream& os) { write_bench_csv(os, rows); });

  for (const auto& [variant, pts] : series) {
    std::vector<double> x, y;
    for (const auto& [n, s] : pts) {
      x.push_back(n);
      y.push_back(s);
    }
    log << "slope " << variant << ' ' << loglog_slope(x, y) << '\n';
  }
  const std::string suffix = c.causal ? "_causal" : "";
  const auto& hyper = series["hyper" + suffix];
  const auto& exact = series["exact" + suffix];
  for (std::size_t t = 0; t < exact.size(); ++t)
    log << "speedup n=" << exact[t].first << ' ' << exact[t].second / hyper[t].second << '\n';
  return 0;
}

int cmd_alpha(const RunConfig& c, std::ostream& out) {
  const std::vector<std::size_t> grid =
      c.grid.empty() ? std::vector<std::size_t>{512, 1024, 2048, 4096} : c.grid;
  for (std::size_t n : grid)
    if (n > kVerifyLimit && !c.allow_large)
      throw UsageError{"alpha builds dense n x n softmax matrices; n = " + std::to_string(n) +
                       " exceeds " + std::to_string(kVerifyLimit) + " (pass --allow-large)"};
  const auto rows = alpha_sweep(grid, c.d, generator_spec(c), c.seed, c.exclude_prefix);
  emit(c, out, [&](std::ostream& os) { write_alpha_csv(os, rows); });
  return 0;
}

int cmd_gen(const RunConfig& c, std::ostream& log) {
  if (!c.n) throw UsageError{"gen needs --n"};
  if (c.out.empty()) throw UsageError{"gen needs --out PREFIX"};
  DType dtype;
  if (c.dtype == "f64")
    dtype = DType::F64;
  else if (c.dtype == "f32")
    dtype = DType::F32;
  else
    throw UsageError{"unknown dtype '" + c.dtype + "'"};
  const AttentionInputs in = generate_inputs(*c.n, c.d, generator_spec(c), c.seed);
  const std::pair<const char*, const Matrix*> parts[] = {{"q", &in.q}, {"k", &in.k}, {"v", &in.v}};
  for (const auto& [name, m] : parts) {
    const std::string path = c.out + "." + name + ".hatn";
    write_matrix(path, *m, dtype);
    log << path << '\n';
  }
  return 0;
}

}  // namespace hatn
