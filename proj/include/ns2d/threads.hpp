#pragma once

#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace ns2d {

/// Worker cap for cylinder-parallel evaluation: hardware concurrency,
/// clamped by the NS2D_THREADS environment variable when set.
inline unsigned thread_cap() {
  static const unsigned cap = [] {
    unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("NS2D_THREADS")) {
      char* end = nullptr;
      const long v = std::strtol(env, &end, 10);
      if (end && *end == '\0' && v >= 1 && v <= 1024) hw = static_cast<unsigned>(v);
    }
    return hw;
  }();
  return cap;
}

/// Run fn(chunk_begin, chunk_end) across workers over [0, count).
/// Results must go to disjoint preallocated slots so the merge is
/// deterministic regardless of the worker count.
template <class Fn>
void parallel_chunks(std::size_t count, Fn&& fn) {
  const unsigned workers = std::min<std::size_t>(thread_cap(), count);
  if (workers <= 1) {
    fn(std::size_t{0}, count);
    return;
  }
  std::vector<std::thread> pool;
  const std::size_t chunk = (count + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    const std::size_t lo = w * chunk;
    const std::size_t hi = std::min(count, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&fn, lo, hi] { fn(lo, hi); });
  }
  for (auto& t : pool) t.join();
}

}  // namespace ns2d
