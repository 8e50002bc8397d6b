#pragma once

#include <algorithm>
#include <cstdint>

namespace forum {

// Counts floats held in solver-allocated numeric buffers. Solvers register
// every buffer they materialize (lower-level iterates, gradient arrays,
// Gram matrices, unrolled trajectories) for the buffer's lifetime; peak()
// is the high-water mark. The counter is exact and deterministic: the same
// configuration yields the same numbers on every run and platform. Oracle
// internals and transient expression temporaries are not counted.
class WorkspaceMeter {
 public:
  void acquire(std::int64_t floats) {
    current_ += floats;
    peak_ = std::max(peak_, current_);
  }
  void release(std::int64_t floats) { current_ -= floats; }

  // Restarts peak tracking from the currently held amount. Used by the
  // driver to report a per-iteration peak.
  void mark() { peak_ = current_; }

  std::int64_t current() const { return current_; }
  std::int64_t peak() const { return peak_; }

 private:
  std::int64_t current_ = 0;
  std::int64_t peak_ = 0;
};

// RAII registration of one buffer with an optional meter.
class ScopedWorkspace {
 public:
  ScopedWorkspace(WorkspaceMeter* meter, std::int64_t floats)
      : meter_(meter), floats_(floats) {
    if (meter_) meter_->acquire(floats_);
  }
  ~ScopedWorkspace() {
    if (meter_) meter_->release(floats_);
  }
  ScopedWorkspace(const ScopedWorkspace&) = delete;
  ScopedWorkspace& operator=(const ScopedWorkspace&) = delete;

 private:
  WorkspaceMeter* meter_;
  std::int64_t floats_;
};

}  // namespace forum
