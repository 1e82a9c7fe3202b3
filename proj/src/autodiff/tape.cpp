#include "dolfin/tape.hpp"

#include <stdexcept>

#include "dolfin/error.hpp"

namespace dolfin {

template <typename T>
void Tape<T>::record(std::vector<Tensor<T>> outputs, std::function<void()> backward) {
  for (auto& out : outputs) outputs_.push_back(std::move(out));
  backward_.push_back(std::move(backward));
}

template <typename T>
void Tape<T>::backward(const Tensor<T>& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw DimensionError("backward() needs a scalar loss, got " +
                         (loss.defined() ? shape_string(loss.shape()) : std::string("undefined")));
  }
  if (!loss.requires_grad()) {
    throw std::invalid_argument("backward(): loss was not produced on a recording tape");
  }
  for (auto& out : outputs_) {
    out.ensure_grad();
    out.zero_grad();
  }
  Tensor<T> seed = loss;
  seed.ensure_grad()[0] += T(1);
  for (auto it = backward_.rbegin(); it != backward_.rend(); ++it) (*it)();
}

template <typename T>
void Tape<T>::note_branch(std::uint64_t decision) {
  // FNV-1a over the 8 bytes of each decision.
  for (int i = 0; i < 8; ++i) {
    digest_ ^= (decision >> (8 * i)) & 0xffU;
    digest_ *= 1099511628211ULL;
  }
}

template class Tape<float>;
template class Tape<double>;

}  // namespace dolfin
