#pragma once

#include <algorithm>
#include <chrono>
#include <memory>
#include <mutex>

namespace autograph {

/// Seconds since an arbitrary origin.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual double now() = 0;
};

class SteadyClock : public Clock {
 public:
  double now() override {
    using namespace std::chrono;
    return duration<double>(steady_clock::now().time_since_epoch()).count();
  }
};

/// Manually driven clock; optionally advances by `tick` on every read.
class FakeClock : public Clock {
 public:
  explicit FakeClock(double tick = 0.0) : tick_(tick) {}
  double now() override {
    std::lock_guard lock(mu_);
    const double t = t_;
    t_ += tick_;
    return t;
  }
  void advance(double seconds) {
    std::lock_guard lock(mu_);
    t_ += seconds;
  }

 private:
  std::mutex mu_;
  double t_ = 0.0;
  double tick_;
};

/// Wall-clock budget. New trials may start only while elapsed is within the
/// safety fraction; running trials stop at the same mark so the remainder is
/// left for ensembling and writing predictions.
class TimeBudget {
 public:
  TimeBudget(double total_seconds, std::shared_ptr<Clock> clock = std::make_shared<SteadyClock>(),
             double safety_fraction = 0.9)
      : total_(total_seconds),
        safety_(safety_fraction),
        clock_(std::move(clock)),
        started_at_(clock_->now()) {}

  double total() const { return total_; }
  double safety_fraction() const { return safety_; }
  double elapsed() const { return clock_->now() - started_at_; }
  double remaining() const { return std::max(0.0, total_ - elapsed()); }
  bool exhausted() const { return elapsed() >= total_; }
  /// True while a new trial (or another epoch) may begin.
  bool can_schedule() const { return elapsed() < safety_ * total_; }
  Clock& clock() const { return *clock_; }

 private:
  double total_;
  double safety_;
  std::shared_ptr<Clock> clock_;
  double started_at_;
};

}  // namespace autograph
