#include "varfast/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace varfast {

std::size_t thread_count() {
  const char* raw = std::getenv("VARFAST_THREADS");
  if (raw == nullptr || *raw == '\0') return 1;
  try {
    const long v = std::stol(raw);
    return static_cast<std::size_t>(std::clamp(v, 1L, 64L));
  } catch (const std::exception&) {
    return 1;
  }
}

namespace {

// Nested regions run inline on the calling worker.
thread_local bool in_parallel_region = false;

}  // namespace

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = in_parallel_region ? 1 : std::min(thread_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto run = [&] {
    in_parallel_region = true;
    for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        next.store(n);
        break;
      }
    }
    in_parallel_region = false;
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t t = 1; t < workers; ++t) pool.emplace_back(run);
  run();
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace varfast
