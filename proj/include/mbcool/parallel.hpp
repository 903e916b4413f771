#pragma once

// Deterministic data parallelism.
//
// Work is split into fixed blocks of kBlockSize elements whatever the thread
// count. Reductions sum each block sequentially and then add the block
// partials in block order, so results are bitwise identical for any number
// of threads.

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace mbcool::parallel {

inline constexpr std::size_t kBlockSize = 4096;
inline constexpr const char* kThreadsEnv = "MBCOOL_THREADS";

/// Worker count from MBCOOL_THREADS; unset, 0 or unparsable means hardware concurrency.
inline std::size_t thread_count() {
  std::size_t requested = 0;
  if (const char* env = std::getenv(kThreadsEnv)) {
    try {
      requested = static_cast<std::size_t>(std::stoul(env));
    } catch (...) {
      requested = 0;
    }
  }
  if (requested == 0) requested = std::max(1u, std::thread::hardware_concurrency());
  return requested;
}

/// Calls body(block, begin, end) once per fixed block of [0, n).
template <class Body>
void for_each_block(std::size_t n, Body&& body) {
  const std::size_t blocks = (n + kBlockSize - 1) / kBlockSize;
  const std::size_t workers = std::min(thread_count(), blocks);
  auto run = [&](std::size_t first) {
    for (std::size_t b = first; b < blocks; b += std::max<std::size_t>(workers, 1)) {
      const std::size_t begin = b * kBlockSize;
      body(b, begin, std::min(n, begin + kBlockSize));
    }
  };
  if (workers <= 1) {
    run(0);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w)
      pool.emplace_back([&, w] {
        try {
          run(w);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    try {
      run(0);
    } catch (...) {
      errors[0] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

/// Elementwise loop; body(i) must only touch element i.
template <class Body>
void for_each_index(std::size_t n, Body&& body) {
  for_each_block(n, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) body(i);
  });
}

/// Sum of term(i) over [0, n) with a thread-count-independent order.
template <class Term>
double sum(std::size_t n, Term&& term) {
  const std::size_t blocks = (n + kBlockSize - 1) / kBlockSize;
  std::vector<double> partial(blocks, 0.0);
  for_each_block(n, [&](std::size_t b, std::size_t begin, std::size_t end) {
    double acc = 0.0;
    for (std::size_t i = begin; i < end; ++i) acc += term(i);
    partial[b] = acc;
  });
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

}  // namespace mbcool::parallel
