#include "robustcov/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "robustcov/errors.hpp"

namespace robustcov {

namespace {

std::atomic<int> g_max_threads_override{0};

int detect_threads() {
  if (const char* env = std::getenv("ROBUSTCOV_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1 && v <= 1024) return static_cast<int>(v);
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace

void set_max_threads(int n) {
  if (n < 0) throw InvalidInputError("set_max_threads: negative thread count");
  g_max_threads_override.store(n);
}

int max_threads() {
  int v = g_max_threads_override.load();
  return v > 0 ? v : detect_threads();
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn,
                  int threads) {
  if (count == 0) return;
  int workers = threads > 0 ? threads : max_threads();
  if (static_cast<std::size_t>(workers) > count) workers = static_cast<int>(count);

  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }

  std::atomic<std::size_t> next{0};
  std::mutex err_mutex;
  std::size_t err_index = count;
  std::exception_ptr err;

  auto body = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(err_mutex);
        if (i < err_index) {
          err_index = i;
          err = std::current_exception();
        }
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers) - 1);
  for (int w = 1; w < workers; ++w) pool.emplace_back(body);
  body();
  for (auto& t : pool) t.join();

  if (err) std::rethrow_exception(err);
}

}  // namespace robustcov
