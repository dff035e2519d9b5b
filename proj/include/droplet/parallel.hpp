#pragma once

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "droplet/bigint.hpp"

namespace droplet {

inline unsigned default_threads() {
  return std::max(1u, std::thread::hardware_concurrency());
}

// Enumeration cap; DROPLET_BUDGET overrides the default of 10^7.
inline Index enumeration_budget() {
  if (const char* env = std::getenv("DROPLET_BUDGET")) {
    try {
      const long long v = std::stoll(env);
      if (v > 0) return static_cast<Index>(v);
    } catch (const std::exception&) {
    }
  }
  return 10'000'000;
}

// Runs body(i) for i in [0, n) on up to `threads` workers.  Work is handed
// out by static striding, so which worker runs an item never affects the
// item's result.  The first exception thrown by any worker is rethrown.
template <typename Body>
void parallel_for(std::size_t n, unsigned threads, Body&& body) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < n; i += threads) body(i);
      } catch (...) {
        const std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace droplet
