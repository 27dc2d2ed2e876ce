#pragma once

#include <cstddef>
#include <exception>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <omp.h>

namespace casc {

class TaskError : public std::runtime_error {
 public:
  TaskError(std::size_t index, const std::string& what)
      : std::runtime_error("task " + std::to_string(index) + " failed: " + what),
        index_(index) {}
  std::size_t index() const { return index_; }

 private:
  std::size_t index_;
};

namespace detail {

template <class R, class F>
std::optional<R> attempt(F& task, std::size_t i, std::string& error) {
  for (int tries = 0; tries < 2; ++tries) {
    try {
      return task(i);
    } catch (const std::exception& e) {
      error = e.what();
    } catch (...) {
      error = "unknown exception";
    }
  }
  return std::nullopt;
}

}  // namespace detail

/// Reference implementation: runs task(0..count-1) in order. A failing task is
/// retried once; a second failure aborts with TaskError naming the index.
template <class R, class F>
std::vector<R> serial_map(std::size_t count, F&& task) {
  std::vector<R> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::string error;
    auto r = detail::attempt<R>(task, i, error);
    if (!r) throw TaskError(i, error);
    out.push_back(std::move(*r));
  }
  return out;
}

/// Same contract as serial_map; results are written to slot i, so the output
/// does not depend on the worker count or scheduling. When several tasks fail
/// the lowest index is reported.
template <class R, class F>
std::vector<R> parallel_map(std::size_t count, F&& task, int workers) {
  if (workers <= 1 || count <= 1) return serial_map<R>(count, task);
  std::vector<std::optional<R>> slots(count);
  std::vector<std::string> errors(count);
  const long n = static_cast<long>(count);
#pragma omp parallel for schedule(dynamic) num_threads(workers)
  for (long i = 0; i < n; ++i) {
    slots[i] = detail::attempt<R>(task, static_cast<std::size_t>(i), errors[i]);
  }
  std::vector<R> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    if (!slots[i]) throw TaskError(i, errors[i]);
    out.push_back(std::move(*slots[i]));
  }
  return out;
}

}  // namespace casc
