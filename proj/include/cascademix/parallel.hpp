#pragma once

#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace cascademix {

inline unsigned resolve_threads(unsigned requested) {
  if (requested > 0) return requested;
  unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? hw : 1;
}

// Runs body(begin, end) over [0, n) split into fixed-size chunks pulled from
// an atomic counter. The chunking is independent of the worker count, so any
// reduction done per chunk and merged in chunk order is bit-reproducible
// regardless of --threads.
template <class Body>
void parallel_for(std::size_t n, unsigned threads, std::size_t chunk, Body&& body) {
  if (n == 0) return;
  threads = resolve_threads(threads);
  if (chunk == 0) chunk = 1;
  std::size_t n_chunks = (n + chunk - 1) / chunk;
  if (threads <= 1 || n_chunks <= 1) {
    for (std::size_t c = 0; c < n_chunks; ++c) {
      std::size_t b = c * chunk;
      body(b, std::min(n, b + chunk));
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      std::size_t c = next.fetch_add(1);
      if (c >= n_chunks) return;
      std::size_t b = c * chunk;
      body(b, std::min(n, b + chunk));
    }
  };
  std::vector<std::thread> pool;
  unsigned n_workers = static_cast<unsigned>(std::min<std::size_t>(threads, n_chunks));
  pool.reserve(n_workers - 1);
  for (unsigned t = 1; t < n_workers; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
}

}  // namespace cascademix
