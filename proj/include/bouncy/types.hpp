#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace bouncy {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Position, velocity and inertia of the augmented dynamics.
struct AugmentedState {
  Vec x;
  Vec v;
  double p = 0.0;
};

enum class EventKind { Bounce, Boundary, Refresh, End };

struct EventRecord {
  double time = 0.0;
  EventKind kind = EventKind::End;
  Vec gradient_at_event;
  Vec position;  // state right after the event
  Vec velocity;
};

/// Event bookkeeping for one trajectory. Records are only kept when
/// requested; the counters are always maintained.
class EventLog {
 public:
  explicit EventLog(bool keep_records = false) : keep_records_(keep_records) {}

  void add(double time, EventKind kind, const Vec& gradient, const Vec& position = Vec(),
           const Vec& velocity = Vec()) {
    ++counts_[static_cast<std::size_t>(kind)];
    if (keep_records_) records_.push_back({time, kind, gradient, position, velocity});
  }

  void add(double time, EventKind kind) {
    ++counts_[static_cast<std::size_t>(kind)];
    if (keep_records_) records_.push_back({time, kind, Vec(), Vec(), Vec()});
  }

  std::size_t count(EventKind kind) const { return counts_[static_cast<std::size_t>(kind)]; }

  /// Bounce, boundary and refresh events; the terminal marker is excluded.
  std::size_t total() const {
    return count(EventKind::Bounce) + count(EventKind::Boundary) + count(EventKind::Refresh);
  }

  bool keeps_records() const { return keep_records_; }
  const std::vector<EventRecord>& records() const { return records_; }

  void merge(const EventLog& other) {
    for (std::size_t k = 0; k < counts_.size(); ++k) counts_[k] += other.counts_[k];
    if (keep_records_) records_.insert(records_.end(), other.records_.begin(), other.records_.end());
  }

 private:
  bool keep_records_;
  std::array<std::size_t, 4> counts_{};
  std::vector<EventRecord> records_;
};

}  // namespace bouncy
