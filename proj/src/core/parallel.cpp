#include "echoprep/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace echoprep {

namespace {
std::atomic<int> g_default_jobs{1};
}

void set_default_jobs(int jobs) { g_default_jobs = std::max(1, jobs); }

int default_jobs() noexcept { return g_default_jobs.load(); }

int worker_count(std::size_t n, int jobs) noexcept {
  const int cap = jobs > 0 ? jobs : default_jobs();
  return static_cast<int>(std::max<std::size_t>(1, std::min<std::size_t>(n, cap)));
}

int parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t, int)>& task) {
  const int workers = worker_count(n, jobs);
  if (n == 0) return workers;
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) task(i, 0);
    return 1;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::mutex mu;
  std::size_t failed_index = n;
  std::exception_ptr error;
  const auto body = [&](int worker) {
    for (;;) {
      if (failed.load()) return;
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        task(i, worker);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (i < failed_index) {
          failed_index = i;
          error = std::current_exception();
        }
        failed = true;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (int w = 1; w < workers; ++w) pool.emplace_back(body, w);
  body(0);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
  return workers;
}

}  // namespace echoprep
