#pragma once

#include <cstdint>

namespace moco {

/// Exact count of model evaluations. Forwards are single-input inference
/// calls; backwards are single-point input-gradient computations. Counters
/// only grow. Workers keep their own ledger and merge at the end.
class QueryLedger {
 public:
  void charge_forward(std::uint64_t n = 1) { forwards_ += n; }
  void charge_backward(std::uint64_t n = 1) { backwards_ += n; }
  void charge_gradient() {
    ++forwards_;
    ++backwards_;
  }
  void complete_generation() { ++generations_; }
  void add_seconds(double s) { seconds_ += s; }

  void merge(const QueryLedger& other) {
    forwards_ += other.forwards_;
    backwards_ += other.backwards_;
    generations_ += other.generations_;
    seconds_ += other.seconds_;
  }

  std::uint64_t forwards() const { return forwards_; }
  std::uint64_t backwards() const { return backwards_; }
  std::uint64_t generations_completed() const { return generations_; }
  double wall_seconds() const { return seconds_; }

 private:
  std::uint64_t forwards_ = 0;
  std::uint64_t backwards_ = 0;
  std::uint64_t generations_ = 0;
  double seconds_ = 0.0;
};

}  // namespace moco
