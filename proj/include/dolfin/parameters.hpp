#pragma once

#include <string>
#include <vector>

#include "dolfin/random.hpp"
#include "dolfin/tensor.hpp"

namespace dolfin {

template <typename T>
struct NamedParameter {
  std::string name;
  Tensor<T> tensor;
};

template <typename T>
using ParameterList = std::vector<NamedParameter<T>>;

/// Trainable tensor with entries uniform in [-bound, bound].
template <typename T>
Tensor<T> uniform_parameter(Shape shape, double bound, Rng& rng) {
  Tensor<T> t = Tensor<T>::zeros(std::move(shape), true);
  for (T& v : t.data()) v = static_cast<T>(rng.uniform(-bound, bound));
  return t;
}

template <typename T>
Tensor<T> zero_parameter(Shape shape) {
  return Tensor<T>::zeros(std::move(shape), true);
}

template <typename T>
void zero_grads(ParameterList<T>& params) {
  for (auto& p : params) {
    p.tensor.ensure_grad();
    p.tensor.zero_grad();
  }
}

}  // namespace dolfin
