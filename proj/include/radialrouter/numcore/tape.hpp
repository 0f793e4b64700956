#pragma once

#include <cstdint>
#include <functional>
#include <string_view>
#include <utility>
#include <vector>

#include "radialrouter/numcore/tensor.hpp"

namespace radialrouter::num {

/// Per-thread tallies used by instrumentation tests and the FLOP formula check.
struct OpCounters {
  std::uint64_t multiply_adds = 0;    // forward matmul multiply-adds
  std::uint64_t attention_calls = 0;  // scaled-dot / multi-head invocations
  std::uint64_t ops_recorded = 0;

  void reset() { *this = OpCounters{}; }
};

inline OpCounters& counters() {
  thread_local OpCounters c;
  return c;
}

struct OpRecord {
  std::string_view name;
  std::vector<Tensor> inputs;
  Tensor output;
  std::function<void()> backward;
};

/// Computation record for reverse-mode differentiation.
///
/// Ops append themselves in execution order, which is a topological order of
/// the graph; `backward` replays the records in reverse. A non-recording tape
/// turns every op into a plain forward computation.
class Tape {
 public:
  explicit Tape(bool recording = true) : recording_(recording) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = default;
  Tape& operator=(Tape&&) = default;

  bool recording() const noexcept { return recording_; }
  std::size_t size() const noexcept { return ops_.size(); }
  const std::vector<OpRecord>& ops() const noexcept { return ops_; }

  /// True when an op over `inputs` has to be recorded.
  template <typename... Ts>
  bool tracks(const Ts&... inputs) const {
    return recording_ && (inputs.requires_grad() || ...);
  }
  bool tracks_any(std::span<const Tensor> inputs) const {
    if (!recording_) return false;
    for (const auto& t : inputs) {
      if (t.requires_grad()) return true;
    }
    return false;
  }

  void record(std::string_view name, std::vector<Tensor> inputs, Tensor output,
              std::function<void()> backward) {
    ++counters().ops_recorded;
    ops_.push_back(OpRecord{name, std::move(inputs), std::move(output), std::move(backward)});
  }

  /// Populates d(loss)/d(tensor) in every requires_grad leaf reachable from
  /// `loss`. Leaf gradients accumulate across calls; intermediate gradients
  /// are reset at the start of each call.
  void backward(const Tensor& loss) {
    if (!loss.defined() || loss.size() != 1) {
      throw ContractError("backward: loss must be a scalar tensor");
    }
    if (!loss.requires_grad()) {
      throw ContractError("backward: loss does not depend on any trainable tensor");
    }
    bool produced_here = false;
    for (auto& op : ops_) {
      op.output.zero_grad();
      if (op.output.same_storage(loss)) produced_here = true;
    }
    if (produced_here) {
      loss.grad()[0] = 1.0;
    } else {
      loss.grad()[0] += 1.0;
    }
    for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) it->backward();
  }

  void clear() { ops_.clear(); }

 private:
  bool recording_;
  std::vector<OpRecord> ops_;
};

}  // namespace radialrouter::num
