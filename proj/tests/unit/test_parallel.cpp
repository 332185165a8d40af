#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <vector>

#include "hyperattn/parallel.hpp"

using namespace hyperattn;

namespace {

struct ThreadGuard {
  std::size_t saved = num_threads();
  ~ThreadGuard() { set_num_threads(saved); }
};

}  // namespace

TEST_CASE("HATN_THREADS sets the default worker count") {
  const char* expect = std::getenv("HATN_EXPECT_THREADS");
  if (expect == nullptr) return;
  CHECK(num_threads() == std::strtoul(expect, nullptr, 10));
}

TEST_CASE("every index is visited exactly once") {
  ThreadGuard guard;
  for (std::size_t threads : {1u, 2u, 3u, 8u}) {
    set_num_threads(threads);
    for (std::size_t count : {0u, 1u, 15u, 16u, 17u, 1000u, 4099u}) {
      std::vector<std::atomic<int>> hits(count);
      parallel_for(count, [&](std::size_t begin, std::size_t end) {
        CHECK(begin < end);
        for (std::size_t i = begin; i < end; ++i) hits[i].fetch_add(1);
      });
      for (std::size_t i = 0; i < count; ++i) CHECK(hits[i].load() == 1);
    }
  }
}

TEST_CASE("thread count is clamped to at least one") {
  ThreadGuard guard;
  set_num_threads(0);
  CHECK(num_threads() == 1);
  set_num_threads(5);
  CHECK(num_threads() == 5);
}

TEST_CASE("exceptions propagate to the caller") {
  ThreadGuard guard;
  set_num_threads(4);
  CHECK_THROWS_AS(parallel_for(1000,
                               [](std::size_t begin, std::size_t) {
                                 if (begin > 0) throw std::runtime_error("worker");
                               }),
                  std::runtime_error);
  set_num_threads(1);
  CHECK_THROWS_AS(parallel_for(10, [](std::size_t, std::size_t) { throw std::logic_error("x"); }),
                  std::logic_error);
}
