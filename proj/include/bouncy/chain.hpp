#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bouncy/error.hpp"
#include "bouncy/types.hpp"

namespace bouncy {

/// Stored samples of one chain plus per-iteration bookkeeping.
struct Chain {
  Mat samples;                             // one row per stored (post-thinning) sample
  std::vector<std::size_t> event_counts;   // per iteration
  std::vector<double> travel_times;        // per iteration
  std::array<std::size_t, 3> kind_counts{};  // bounce, boundary, refresh totals
  double wall_seconds = 0.0;
  std::optional<double> acceptance_rate;
  std::size_t thin = 1;
  std::map<std::string, std::string> meta;

  Index size() const { return samples.rows(); }
  Index dimension() const { return samples.cols(); }

  std::size_t count(EventKind kind) const {
    return kind == EventKind::End ? 0 : kind_counts[static_cast<std::size_t>(kind)];
  }

  std::size_t total_events() const {
    std::size_t n = 0;
    for (auto c : event_counts) n += c;
    return n;
  }
};

/// Accumulates iterations into a Chain, keeping every `thin`-th position.
class ChainRecorder {
 public:
  ChainRecorder(std::size_t iterations, Index dim, std::size_t thin = 1) : thin_(thin) {
    require(iterations >= 1, "iterations must be at least 1");
    require(thin >= 1, "thin must be at least 1");
    chain_.samples.resize(static_cast<Index>((iterations + thin - 1) / thin), dim);
    chain_.event_counts.reserve(iterations);
    chain_.travel_times.reserve(iterations);
    chain_.thin = thin;
  }

  void record(const Vec& x, std::size_t events, double travel_time) {
    if (iteration_ % thin_ == 0) chain_.samples.row(static_cast<Index>(iteration_ / thin_)) = x.transpose();
    chain_.event_counts.push_back(events);
    chain_.travel_times.push_back(travel_time);
    ++iteration_;
  }

  void record(const Vec& x, const EventLog& events, double travel_time) {
    for (auto kind : {EventKind::Bounce, EventKind::Boundary, EventKind::Refresh}) tally(kind, events.count(kind));
    record(x, events.total(), travel_time);
  }

  void tally(EventKind kind, std::size_t n = 1) {
    if (kind != EventKind::End) chain_.kind_counts[static_cast<std::size_t>(kind)] += n;
  }

  Chain finish(double wall_seconds) {
    chain_.wall_seconds = wall_seconds;
    return std::move(chain_);
  }

  Chain& chain() { return chain_; }

 private:
  std::size_t thin_;
  std::size_t iteration_ = 0;
  Chain chain_;
};

}  // namespace bouncy
