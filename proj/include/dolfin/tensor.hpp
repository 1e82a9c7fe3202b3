#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace dolfin {

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);
std::size_t shape_numel(const Shape& shape);

/// Dense row-major array that can take part in a gradient tape.
///
/// A Tensor is a shared handle: copies alias the same storage, the way graph
/// nodes do in any tape-based autodiff. Use clone() for an independent copy.
/// Rank is 0 (scalar), 1 (vector, treated as a single row) or 2 (matrix).
template <typename T>
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<T> data, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor filled(Shape shape, T value, bool requires_grad = false);
  static Tensor scalar(T value, bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  bool same_storage(const Tensor& other) const { return impl_ == other.impl_; }

  const Shape& shape() const { return impl_->shape; }
  std::size_t rank() const { return impl_->shape.size(); }
  std::size_t numel() const { return impl_->data.size(); }
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<T> data() { return impl_->data; }
  std::span<const T> data() const { return impl_->data; }
  T& operator[](std::size_t i) { return impl_->data[i]; }
  T operator[](std::size_t i) const { return impl_->data[i]; }
  T& operator()(std::size_t r, std::size_t c) { return impl_->data[r * cols() + c]; }
  T operator()(std::size_t r, std::size_t c) const { return impl_->data[r * cols() + c]; }
  T item() const;

  bool requires_grad() const { return impl_ && impl_->requires_grad; }
  void set_requires_grad(bool on) { impl_->requires_grad = on; }

  // The gradient buffer is tape bookkeeping rather than part of the value, so
  // it stays writable through const handles.
  bool has_grad() const { return !impl_->grad.empty(); }
  std::span<T> grad() const;
  /// Allocates a zero gradient buffer on first use.
  std::span<T> ensure_grad() const;
  void zero_grad() const;

  /// Same shape and values, fresh storage, no gradient.
  Tensor clone() const;
  /// Values converted to another scalar type.
  template <typename U>
  Tensor<U> cast() const {
    return Tensor<U>(shape(), std::vector<U>(impl_->data.begin(), impl_->data.end()),
                     requires_grad());
  }

 private:
  struct Impl {
    Shape shape;
    std::vector<T> data;
    std::vector<T> grad;
    bool requires_grad = false;
  };
  std::shared_ptr<Impl> impl_;
};

/// Row-contiguous packing of a batch of variable-length sequences.
/// Sequence i occupies rows [begin(i), end(i)) of a packed matrix.
class Segments {
 public:
  Segments() : offsets_{0} {}
  static Segments single(std::size_t length);
  static Segments from_lengths(std::span<const std::size_t> lengths);

  std::size_t count() const { return offsets_.size() - 1; }
  std::size_t begin(std::size_t i) const { return offsets_[i]; }
  std::size_t end(std::size_t i) const { return offsets_[i + 1]; }
  std::size_t length(std::size_t i) const { return offsets_[i + 1] - offsets_[i]; }
  std::size_t total() const { return offsets_.back(); }
  void push(std::size_t length) { offsets_.push_back(offsets_.back() + length); }

 private:
  std::vector<std::size_t> offsets_;
};

extern template class Tensor<float>;
extern template class Tensor<double>;

}  // namespace dolfin
