#include "dolfin/bolf.hpp"

#include <cmath>
#include <string>

#include "dolfin/error.hpp"

namespace dolfin {

template <typename T>
BolfParams<T> BolfParams<T>::init(std::size_t encoder_dim, std::size_t latent,
                                  std::size_t text_dim, std::size_t categories, Rng& rng) {
  if (encoder_dim == 0 || latent == 0 || text_dim == 0 || categories == 0) {
    throw UsageError("bolf: all dimensions must be positive");
  }
  auto fan_in = [](std::size_t n) { return std::sqrt(1.0 / static_cast<double>(n)); };
  BolfParams p;
  p.lsl_weight = uniform_parameter<T>(Shape{encoder_dim, latent}, fan_in(encoder_dim), rng);
  p.lsl_bias = zero_parameter<T>(Shape{latent});
  p.feature_table = uniform_parameter<T>(Shape{latent, text_dim}, fan_in(latent), rng);
  p.classifier_weight = uniform_parameter<T>(Shape{text_dim, categories}, fan_in(text_dim), rng);
  p.classifier_bias = zero_parameter<T>(Shape{categories});
  return p;
}

template <typename T>
void BolfParams<T>::append_parameters(ParameterList<T>& out, const std::string& prefix) const {
  out.push_back({prefix + "lsl.weight", lsl_weight});
  out.push_back({prefix + "lsl.bias", lsl_bias});
  out.push_back({prefix + "features", feature_table});
  out.push_back({prefix + "classifier.weight", classifier_weight});
  out.push_back({prefix + "classifier.bias", classifier_bias});
}

template <typename T>
LatentDistribution<T> latent_distributions(Tape<T>& tape, const EncodedSequence<T>& seq,
                                           const BolfParams<T>& params) {
  if (seq.width() != params.lsl_weight.rows()) {
    throw DimensionError("latent_distributions: encoder width " + std::to_string(seq.width()) +
                         " does not match LSL input " + std::to_string(params.lsl_weight.rows()));
  }
  Tensor<T> scores =
      add_row_bias(tape, matmul(tape, seq.vectors, params.lsl_weight), params.lsl_bias);
  return {softmax_rows(tape, scores), seq.segments};
}

template <typename T>
Tensor<T> truncated_sum(Tape<T>& tape, const LatentDistribution<T>& dist) {
  return clamp_max_one(tape, sum_rows(tape, dist.u, dist.segments));
}

template <typename T>
Tensor<T> compose_text_vector(Tape<T>& tape, const Tensor<T>& bag, const BolfParams<T>& params,
                              double dropout_rate, Rng* rng) {
  if (bag.cols() != params.latent()) {
    throw DimensionError("compose_text_vector: bag of width " + std::to_string(bag.cols()) +
                         " for " + std::to_string(params.latent()) + " latent features");
  }
  Tensor<T> s = relu(tape, matmul(tape, bag, params.feature_table));
  return dropout(tape, s, dropout_rate, rng);
}

template <typename T>
Tensor<T> classifier_logits(Tape<T>& tape, const Tensor<T>& text_vector, const Tensor<T>& weight,
                            const Tensor<T>& bias) {
  return add_row_bias(tape, matmul(tape, text_vector, weight), bias);
}

template <typename T>
Tensor<T> classify(Tape<T>& tape, const Tensor<T>& text_vector, const BolfParams<T>& params) {
  return softmax_rows(
      tape, classifier_logits(tape, text_vector, params.classifier_weight, params.classifier_bias));
}

#define DOLFIN_INSTANTIATE_BOLF(T)                                                              \
  template struct BolfParams<T>;                                                                \
  template LatentDistribution<T> latent_distributions(Tape<T>&, const EncodedSequence<T>&,      \
                                                      const BolfParams<T>&);                    \
  template Tensor<T> truncated_sum(Tape<T>&, const LatentDistribution<T>&);                     \
  template Tensor<T> compose_text_vector(Tape<T>&, const Tensor<T>&, const BolfParams<T>&,      \
                                         double, Rng*);                                         \
  template Tensor<T> classifier_logits(Tape<T>&, const Tensor<T>&, const Tensor<T>&,            \
                                       const Tensor<T>&);                                       \
  template Tensor<T> classify(Tape<T>&, const Tensor<T>&, const BolfParams<T>&);

DOLFIN_INSTANTIATE_BOLF(float)
DOLFIN_INSTANTIATE_BOLF(double)

}  // namespace dolfin
