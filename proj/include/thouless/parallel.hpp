#pragma once

#include <cstddef>
#include <exception>
#include <optional>
#include <utility>
#include <vector>

#include <omp.h>

namespace thouless {

/// Selects between the OpenMP kernel and the serial reference path. Both
/// paths run the same per-index body, so results are identical bit for bit.
enum class Exec { serial, parallel };

inline void set_worker_count(int workers) {
  if (workers > 0) omp_set_num_threads(workers);
}

inline int worker_count() { return omp_get_max_threads(); }

/// Runs body(i) for i in [0, n). Exceptions are collected per index and the
/// one with the lowest index is rethrown, independent of scheduling.
template <class Body>
void parallel_for(Exec exec, std::size_t n, Body&& body) {
  if (exec == Exec::serial || n < 2) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

/// Ordered map: out[i] = fn(i), regardless of completion order.
template <class T, class Fn>
std::vector<T> parallel_map(Exec exec, std::size_t n, Fn&& fn) {
  std::vector<std::optional<T>> slots(n);
  parallel_for(exec, n, [&](std::size_t i) { slots[i].emplace(fn(i)); });
  std::vector<T> out;
  out.reserve(n);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

}  // namespace thouless
