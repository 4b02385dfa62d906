#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <utility>

namespace shrums {

/// Single-slot latest-value channel: publish replaces the stored value and
/// bumps a version, readers pick up the newest value and may skip
/// intermediates. Every published value should be immutable (or cheap to
/// copy, e.g. a shared_ptr to const data).
template <class T>
class LatestSlot {
 public:
  void publish(T value) {
    {
      std::lock_guard lock(mutex_);
      value_ = std::move(value);
      ++version_;
    }
    cv_.notify_all();
  }

  uint64_t version() const {
    std::lock_guard lock(mutex_);
    return version_;
  }

  std::optional<std::pair<T, uint64_t>> latest() const {
    std::lock_guard lock(mutex_);
    if (!value_) return std::nullopt;
    return std::make_pair(*value_, version_);
  }

  /// Blocks until a version newer than `after` is available, the stop
  /// predicate fires, or the timeout expires.
  std::optional<std::pair<T, uint64_t>> wait_newer(uint64_t after,
                                                   const std::function<bool()>& stop,
                                                   std::chrono::milliseconds timeout) {
    std::unique_lock lock(mutex_);
    cv_.wait_for(lock, timeout, [&] { return version_ > after || stop(); });
    if (version_ > after && value_) return std::make_pair(*value_, version_);
    return std::nullopt;
  }

 private:
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  std::optional<T> value_;
  uint64_t version_ = 0;
};

/// Simulation clock advanced by the follower tick; other stages block on it.
class SimClock {
 public:
  double now() const {
    std::lock_guard lock(mutex_);
    return t_;
  }

  void advance(double dt) {
    {
      std::lock_guard lock(mutex_);
      t_ += dt;
    }
    cv_.notify_all();
  }

  void interrupt() { cv_.notify_all(); }

  /// Returns the current sim time once it reaches `target` or stop() fires.
  double wait_until(double target, const std::function<bool()>& stop) {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [&] { return t_ >= target || stop(); });
    return t_;
  }

 private:
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  double t_ = 0.0;
};

}  // namespace shrums
