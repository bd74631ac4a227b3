#include "demud/parallel.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace demud {

std::size_t worker_count() {
  std::size_t requested = 0;
  if (const char* env = std::getenv("DEMUD_THREADS"); env != nullptr) {
    const char* end = env + std::strlen(env);
    std::size_t value = 0;
    auto [ptr, ec] = std::from_chars(env, end, value);
    if (ec == std::errc{} && ptr == end) requested = value;
  }
  if (requested == 0) requested = std::thread::hardware_concurrency();
  return std::max<std::size_t>(requested, 1);
}

void parallel_for(std::size_t n,
                  const std::function<void(std::size_t, std::size_t)>& body,
                  std::size_t min_chunk) {
  if (n == 0) return;
  const std::size_t chunks_wanted = std::max<std::size_t>(n / std::max<std::size_t>(min_chunk, 1), 1);
  const std::size_t workers = std::min(worker_count(), chunks_wanted);
  if (workers <= 1) {
    body(0, n);
    return;
  }

  const std::size_t chunk = (n + workers - 1) / workers;
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::jthread> threads;
  threads.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    threads.emplace_back([&, begin, end] {
      try {
        body(begin, end);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  threads.clear();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace demud
