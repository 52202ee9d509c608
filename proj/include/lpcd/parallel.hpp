#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace lpcd {

//! Run fn(i) for i in [0, count) on up to `threads` workers. Each task owns
//! its output slot and any reduction happens afterwards in index order, so
//! results do not depend on the thread count.
template<typename Fn>
void
parallel_for(std::size_t count, int threads, Fn&& fn)
{
  if (count == 0) {
    return;
  }
  const unsigned hardware = std::max(1u, std::thread::hardware_concurrency());
  std::size_t workers = threads > 0 ? static_cast<std::size_t>(threads) : hardware;
  workers = std::min(workers, count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) {
      fn(i);
    }
    return;
  }
  std::atomic<std::size_t> next{ 0 };
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) {
        return;
      }
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) {
          error = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back(worker);
  }
  for (std::thread& t : pool) {
    t.join();
  }
  if (error) {
    std::rethrow_exception(error);
  }
}

} // namespace lpcd
