#include "dolfin/baselines.hpp"

#include <cmath>
#include <stdexcept>

#include "dolfin/bolf.hpp"
#include "dolfin/error.hpp"

namespace dolfin {

template <typename T>
BaselineParams<T> BaselineParams<T>::init(std::size_t input_dim, std::size_t categories,
                                          Rng& rng) {
  if (input_dim == 0 || categories == 0) throw UsageError("baseline: dimensions must be positive");
  const double bound = std::sqrt(1.0 / static_cast<double>(input_dim));
  return {uniform_parameter<T>(Shape{input_dim, categories}, bound, rng),
          zero_parameter<T>(Shape{categories})};
}

template <typename T>
void BaselineParams<T>::append_parameters(ParameterList<T>& out, const std::string& prefix) const {
  out.push_back({prefix + "classifier.weight", classifier_weight});
  out.push_back({prefix + "classifier.bias", classifier_bias});
}

template <typename T>
Tensor<T> cnn_logits(Tape<T>& tape, const EncodedSequence<T>& seq, const BaselineParams<T>& params,
                     double dropout_rate, Rng* rng) {
  if (seq.kind != EncoderKind::conv) {
    throw std::invalid_argument("cnn_logits: sequence was not produced by a conv encoder");
  }
  Tensor<T> pooled = maxpool_over_time(tape, seq.vectors, seq.segments);
  return classifier_logits(tape, dropout(tape, pooled, dropout_rate, rng),
                           params.classifier_weight, params.classifier_bias);
}

template <typename T>
Tensor<T> bilstm_logits(Tape<T>& tape, const EncodedSequence<T>& seq,
                        const BaselineParams<T>& params, double dropout_rate, Rng* rng) {
  Tensor<T> ends = bilstm_endpoints(tape, seq);
  return classifier_logits(tape, dropout(tape, ends, dropout_rate, rng), params.classifier_weight,
                           params.classifier_bias);
}

template <typename T>
Tensor<T> cnn_forward(Tape<T>& tape, const Encoder<T>& encoder, const Tensor<T>& embedded,
                      const Segments& segments, const BaselineParams<T>& params,
                      double dropout_rate, Rng* rng) {
  const auto seq = encoder.encode(tape, embedded, segments);
  return softmax_rows(tape, cnn_logits(tape, seq, params, dropout_rate, rng));
}

template <typename T>
Tensor<T> bilstm_forward(Tape<T>& tape, const Encoder<T>& encoder, const Tensor<T>& embedded,
                         const Segments& segments, const BaselineParams<T>& params,
                         double dropout_rate, Rng* rng) {
  const auto seq = encoder.encode(tape, embedded, segments);
  return softmax_rows(tape, bilstm_logits(tape, seq, params, dropout_rate, rng));
}

#define DOLFIN_INSTANTIATE_BASELINES(T)                                                       \
  template struct BaselineParams<T>;                                                          \
  template Tensor<T> cnn_logits(Tape<T>&, const EncodedSequence<T>&, const BaselineParams<T>&, \
                                double, Rng*);                                                \
  template Tensor<T> bilstm_logits(Tape<T>&, const EncodedSequence<T>&,                       \
                                   const BaselineParams<T>&, double, Rng*);                   \
  template Tensor<T> cnn_forward(Tape<T>&, const Encoder<T>&, const Tensor<T>&,               \
                                 const Segments&, const BaselineParams<T>&, double, Rng*);    \
  template Tensor<T> bilstm_forward(Tape<T>&, const Encoder<T>&, const Tensor<T>&,            \
                                    const Segments&, const BaselineParams<T>&, double, Rng*);

DOLFIN_INSTANTIATE_BASELINES(float)
DOLFIN_INSTANTIATE_BASELINES(double)

}  // namespace dolfin
