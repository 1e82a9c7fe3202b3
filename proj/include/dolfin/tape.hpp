#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "dolfin/tensor.hpp"

namespace dolfin {

/// Ordered record of executed operations. Replaying the recorded backward
/// closures in reverse execution order is a reverse topological traversal.
template <typename T>
class Tape {
 public:
  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool grad_enabled() const { return grad_enabled_; }

  template <typename... Ts>
  bool tracks(const Ts&... inputs) const {
    return grad_enabled_ && (inputs.requires_grad() || ...);
  }

  void record(std::vector<Tensor<T>> outputs, std::function<void()> backward);

  /// Seeds d(loss)/d(loss) = 1 and propagates. Intermediate gradients are
  /// reset first; leaf gradients accumulate across calls.
  void backward(const Tensor<T>& loss);

  std::size_t size() const { return backward_.size(); }

  /// Piecewise ops (relu, clamp, max-pooling) fold their branch decisions into
  /// a digest when tracing is on. Two forward passes with equal digests took
  /// the same branches everywhere.
  void set_branch_tracing(bool on) { trace_branches_ = on; }
  bool branch_tracing() const { return trace_branches_; }
  void note_branch(std::uint64_t decision);
  std::uint64_t branch_digest() const { return digest_; }

 private:
  bool grad_enabled_;
  bool trace_branches_ = false;
  std::uint64_t digest_ = 1469598103934665603ULL;
  std::vector<Tensor<T>> outputs_;
  std::vector<std::function<void()>> backward_;
};

extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace dolfin
