#include <CLI11.hpp>

#include <iostream>

#include "commands.hpp"
#include "hyperattn/errors.hpp"
#include "hyperattn/parallel.hpp"

namespace {

constexpr int kUsageExit = 2;
constexpr int kErrorExit = 3;

void add_common(CLI::App* cmd, hatn::RunConfig& c) {
  cmd->add_option("--d", c.d, "head dimension")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", c.seed, "base seed");
  cmd->add_option("--generator", c.generator, "synthetic inputs")
      ->check(CLI::IsMember({"gaussian", "planted", "orthogonal"}));
  cmd->add_flag("--scale", c.scale, "scale Q and K by 1/sqrt(d)");
  cmd->add_option("--out", c.out, "output path (stdout when omitted)");
  cmd->add_option("--threads", c.threads, "worker threads")
      ->envname("HATN_THREADS")
      ->check(CLI::PositiveNumber);
}

void add_attention(CLI::App* cmd, hatn::RunConfig& c) {
  cmd->add_option("--b", c.b, "sortLSH block size")->check(CLI::PositiveNumber);
  cmd->add_option("--m", c.m, "sample count")->check(CLI::PositiveNumber);
  cmd->add_option("--mode", c.mode)->check(CLI::IsMember({"practical", "theoretical"}));
  cmd->add_flag("--causal", c.causal, "causal attention");
  cmd->add_option("--causal-threshold", c.causal_threshold, "causal recursion base size")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--repeat", c.repeat, "repeats");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hatn: HyperAttention reference implementation"};
  app.require_subcommand(1);
  hatn::RunConfig c;

  auto* verify = app.add_subcommand("verify", "spectral error against the dense oracle");
  add_common(verify, c);
  add_attention(verify, c);
  verify->add_option("--n", c.n, "sequence length")->check(CLI::PositiveNumber);
  verify->add_option("--epsilon", c.epsilon)->check(CLI::NonNegativeNumber);
  verify->add_option("--mask", c.mask, "heavy-entry mask source")
      ->check(CLI::IsMember({"sortlsh", "sketch", "file", "none"}));
  verify->add_option("--mask-file", c.mask_file, "nnz x 2 matrix of (row, col) pairs");
  verify->add_option("--tau", c.tau, "sketch heaviness threshold");
  verify->add_option("--q", c.q_file, "Q matrix file");
  verify->add_option("--k", c.k_file, "K matrix file");
  verify->add_option("--v", c.v_file, "V matrix file");
  verify->add_flag("--complete-cover", c.complete_cover, "sample every column exactly once");
  verify->add_flag("--allow-large", c.allow_large, "allow n above the dense-oracle limit");
  verify->add_option("--threshold", c.threshold, "required pass rate")
      ->check(CLI::Range(0.0, 1.0));

  auto* bench = app.add_subcommand("bench", "wall-clock scaling of hyper and exact paths");
  add_common(bench, c);
  add_attention(bench, c);
  bench->add_option("--grid", c.grid, "sequence lengths")->delimiter(',');
  bench->add_option("--exact-max", c.exact_max, "largest n timed on the exact path");

  auto* alpha = app.add_subcommand("alpha", "alpha sweep over n");
  add_common(alpha, c);
  alpha->add_option("--grid", c.grid, "sequence lengths")->delimiter(',');
  alpha->add_option("--exclude-prefix", c.exclude_prefix, "leading columns to skip");
  alpha->add_flag("--allow-large", c.allow_large, "allow n above the dense-oracle limit");

  auto* gen = app.add_subcommand("gen", "write synthetic Q, K, V files");
  add_common(gen, c);
  gen->add_option("--n", c.n, "sequence length")->check(CLI::PositiveNumber);
  gen->add_option("--dtype", c.dtype)->check(CLI::IsMember({"f32", "f64"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageExit;
  }

  c.subcommand = app.get_subcommands().front()->get_name();
  if (c.threads) hyperattn::set_num_threads(*c.threads);

  try {
    if (c.subcommand == "verify") return hatn::cmd_verify(c, std::cout);
    if (c.subcommand == "bench") return hatn::cmd_bench(c, std::cout, std::cerr);
    if (c.subcommand == "alpha") return hatn::cmd_alpha(c, std::cout);
    return hatn::cmd_gen(c, std::cerr);
  } catch (const hatn::UsageError& e) {
    std::cerr << "usage error: " << e.message << '\n';
    return kUsageExit;
  } catch (const hyperattn::InvalidArgument& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsageExit;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kErrorExit;
  }
}
