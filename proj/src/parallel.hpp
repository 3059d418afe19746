#pragma once

#include <cstddef>
#include <exception>
#include <vector>

namespace difftomo::detail {

// Runs body(p) for p in [0, count) across OpenMP threads. Exceptions are
// captured per index and the lowest-index one is rethrown after the loop, so
// failures are reported deterministically.
template <class Body>
void for_each_transmitter(std::size_t count, Body&& body) {
  std::vector<std::exception_ptr> errors(count);
  const auto n = static_cast<std::ptrdiff_t>(count);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace difftomo::detail
