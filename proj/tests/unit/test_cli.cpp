#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "hyperattn/io.hpp"

namespace {

struct Run {
  int status = -1;
  std::string out;
};

Run hatn(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " " HATN_BINARY " " + args + " 2>/dev/null";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  std::size_t got;
  while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, got);
  const int raw = pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

std::filesystem::path scratch(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("hatn_cli_" + name);
}

}  // namespace

TEST_CASE("usage errors exit with status 2") {
  CHECK(hatn("").status == 2);
  CHECK(hatn("verify --d 8").status == 2);
  CHECK(hatn("verify --n 0").status == 2);
  CHECK(hatn("verify --n 64 --mask bogus").status == 2);
  CHECK(hatn("verify --n 9000").status == 2);
  CHECK(hatn("verify --n 64 --mask file").status == 2);
  CHECK(hatn("frobnicate").status == 2);
  CHECK(hatn("--help").status == 0);
}

TEST_CASE("complete cover without a mask is exact") {
  const Run r = hatn("verify --n 64 --mask none --m 64 --complete-cover --d 8");
  REQUIRE(r.status == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["reports"].size() == 1);
  CHECK(j["reports"][0]["err_op"].get<double>() <= 1e-9);
  CHECK(j["reports"][0]["passed"] == true);
  CHECK(j["config"]["n"] == 64);
  CHECK(j["config"]["complete_cover"] == true);
}

TEST_CASE("verify reports are reproducible and repeat seeds are seed + r") {
  const Run a = hatn("verify --n 256 --d 8 --b 32 --m 32 --scale --repeat 3 --seed 10");
  const Run b = hatn("verify --n 256 --d 8 --b 32 --m 32 --scale --repeat 3 --seed 10");
  REQUIRE(a.status == b.status);
  CHECK(a.out == b.out);
  const auto ja = nlohmann::json::parse(a.out);
  const Run c = hatn("verify --n 256 --d 8 --b 32 --m 32 --scale --seed 12");
  const auto jc = nlohmann::json::parse(c.out);
  CHECK(ja["reports"][2] == jc["reports"][0]);
  CHECK(ja["reports"].size() == 3);
}

TEST_CASE("exit status follows the pass-rate threshold") {
  CHECK(hatn("verify --n 128 --d 8 --b 16 --m 16 --scale --epsilon 0 --threshold 0.5").status == 1);
  CHECK(hatn("verify --n 128 --d 8 --b 16 --m 16 --scale --epsilon 0 --threshold 0").status == 0);
}

TEST_CASE("gen writes readable matrices and verify accepts them") {
  const std::string prefix = scratch("gen").string();
  REQUIRE(hatn("gen --n 32 --d 4 --seed 3 --out " + prefix).status == 0);
  const auto q = hyperattn::read_matrix(prefix + ".q.hatn");
  CHECK(q.rows() == 32);
  CHECK(q.cols() == 4);
  const Run r = hatn("verify --q " + prefix + ".q.hatn --k " + prefix + ".k.hatn --v " + prefix +
                     ".v.hatn --b 8 --m 32 --complete-cover --mask none");
  REQUIRE(r.status == 0);
  CHECK(nlohmann::json::parse(r.out)["reports"][0]["err_op"].get<double>() <= 1e-9);

  REQUIRE(hatn("gen --n 8 --d 2 --dtype f32 --out " + prefix + "32").status == 0);
  CHECK(std::filesystem::file_size(prefix + "32.v.hatn") == hyperattn::kHeaderBytes + 8 * 2 * 4);
  for (const char* s : {".q.hatn", ".k.hatn", ".v.hatn", "32.q.hatn", "32.k.hatn", "32.v.hatn"})
    std::filesystem::remove(prefix + s);
}

TEST_CASE("mask file of index pairs") {
  const std::string prefix = scratch("mask").string();
  REQUIRE(hatn("gen --n 16 --d 4 --out " + prefix).status == 0);
  hyperattn::Matrix pairs(16, 2);
  for (std::size_t i = 0; i < 16; ++i) {
    pairs(i, 0) = double(i);
    pairs(i, 1) = double(i);
  }
  hyperattn::write_matrix(prefix + ".mask.hatn", pairs);
  const std::string files =
      " --q " + prefix + ".q.hatn --k " + prefix + ".k.hatn --v " + prefix + ".v.hatn";
  CHECK(hatn("verify --mask file --mask-file " + prefix + ".mask.hatn --m 16 --complete-cover" +
             files)
            .status == 0);
  pairs(3, 1) = 16.0;
  hyperattn::write_matrix(prefix + ".mask.hatn", pairs);
  CHECK(hatn("verify --mask file --mask-file " + prefix + ".mask.hatn" + files).status == 2);
  for (const char* s : {".q.hatn", ".k.hatn", ".v.hatn", ".mask.hatn"})
    std::filesystem::remove(prefix + s);
}

TEST_CASE("alpha writes a CSV table to --out") {
  const auto path = scratch("alpha.csv");
  REQUIRE(hatn("alpha --grid 64,128 --d 4 --scale --out " + path.string()).status == 0);
  std::ifstream in(path);
  std::string header, row1, row2;
  std::getline(in, header);
  std::getline(in, row1);
  std::getline(in, row2);
  CHECK(header == "n,alpha,alpha_over_n");
  CHECK(row1.rfind("64,", 0) == 0);
  CHECK(row2.rfind("128,", 0) == 0);
  std::filesystem::remove(path);
}

TEST_CASE("bench emits one row per variant and grid point") {
  const Run r = hatn("bench --grid 256,512 --d 8 --b 32 --m 32 --exact-max 256 --repeat 5");
  REQUIRE(r.status == 0);
  std::istringstream in(r.out);
  std::string line;
  std::getline(in, line);
  CHECK(line == "n,variant,median_seconds,repeats");
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 3);
}

TEST_CASE("threads flag and HATN_THREADS do not change results") {
  const std::string args = "verify --n 256 --d 8 --b 32 --m 32 --scale --seed 4";
  const Run one = hatn(args + " --threads 1");
  const Run env = hatn(args, "HATN_THREADS=3");
  const Run flag = hatn(args + " --threads 2", "HATN_THREADS=3");
  CHECK(one.out == env.out);
  CHECK(one.out == flag.out);
  CHECK(hatn(args + " --threads 0").status == 2);
}
