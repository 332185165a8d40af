#include "hyperattn/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace hyperattn {
namespace {

std::size_t default_threads() noexcept {
  if (const char* env = std::getenv("HATN_THREADS")) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end != env && v > 0) return static_cast<std::size_t>(v);
  }
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

std::atomic<std::size_t>& thread_setting() noexcept {
  static std::atomic<std::size_t> threads{default_threads()};
  return threads;
}

// Loops shorter than this run inline.
constexpr std::size_t kMinChunk = 16;

}  // namespace

std::size_t num_threads() noexcept { return thread_setting().load(std::memory_order_relaxed); }

void set_num_threads(std::size_t threads) noexcept {
  thread_setting().store(std::max<std::size_t>(1, threads), std::memory_order_relaxed);
}

void parallel_for(std::size_t count,
                  const std::function<void(std::size_t, std::size_t)>& body) {
  const std::size_t workers = std::min(num_threads(), (count + kMinChunk - 1) / kMinChunk);
  if (workers <= 1) {
    if (count > 0) body(0, count);
    return;
  }
  const std::size_t chunk = (count + workers - 1) / workers;
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  auto run = [&](std::size_t begin, std::size_t end) {
    try {
      body(begin, end);
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  };
  for (std::size_t w = 1; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(count, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back(run, begin, end);
  }
  run(0, std::min(count, chunk));
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace hyperattn
