#include "dolfin/tensor.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "dolfin/error.hpp"

namespace dolfin {

std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << 'x';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<std::size_t>());
}

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> data, bool requires_grad)
    : impl_(std::make_shared<Impl>()) {
  if (shape.size() > 2) {
    throw DimensionError("tensor rank above 2 is not supported: " + shape_string(shape));
  }
  if (shape_numel(shape) != data.size()) {
    throw DimensionError("shape " + shape_string(shape) + " does not match " +
                         std::to_string(data.size()) + " values");
  }
  impl_->shape = std::move(shape);
  impl_->data = std::move(data);
  impl_->requires_grad = requires_grad;
}

template <typename T>
Tensor<T> Tensor<T>::zeros(Shape shape, bool requires_grad) {
  return filled(std::move(shape), T(0), requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::filled(Shape shape, T value, bool requires_grad) {
  const std::size_t n = shape_numel(shape);
  return Tensor(std::move(shape), std::vector<T>(n, value), requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::scalar(T value, bool requires_grad) {
  return Tensor(Shape{}, std::vector<T>{value}, requires_grad);
}

template <typename T>
std::size_t Tensor<T>::rows() const {
  return rank() == 2 ? impl_->shape[0] : 1;
}

template <typename T>
std::size_t Tensor<T>::cols() const {
  if (rank() == 0) return 1;
  return impl_->shape.back();
}

template <typename T>
T Tensor<T>::item() const {
  if (numel() != 1) {
    throw DimensionError("item() on non-scalar tensor " + shape_string(shape()));
  }
  return impl_->data[0];
}

template <typename T>
std::span<T> Tensor<T>::grad() const {
  if (impl_->grad.empty()) throw std::logic_error("tensor has no gradient buffer");
  return impl_->grad;
}

template <typename T>
std::span<T> Tensor<T>::ensure_grad() const {
  if (impl_->grad.size() != impl_->data.size()) impl_->grad.assign(impl_->data.size(), T(0));
  return impl_->grad;
}

template <typename T>
void Tensor<T>::zero_grad() const {
  std::fill(impl_->grad.begin(), impl_->grad.end(), T(0));
}

template <typename T>
Tensor<T> Tensor<T>::clone() const {
  return Tensor(impl_->shape, impl_->data, false);
}

Segments Segments::single(std::size_t length) {
  Segments s;
  s.push(length);
  return s;
}

Segments Segments::from_lengths(std::span<const std::size_t> lengths) {
  Segments s;
  for (std::size_t n : lengths) s.push(n);
  return s;
}

template class Tensor<float>;
template class Tensor<double>;

}  // namespace dolfin
