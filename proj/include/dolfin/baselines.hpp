#pragma once

#include "dolfin/encoders.hpp"
#include "dolfin/parameters.hpp"

namespace dolfin {

/// Linear-softmax classifier on top of a pooled (CNN) or endpoint (BiLSTM) text vector.
template <typename T>
struct BaselineParams {
  Tensor<T> classifier_weight;  // [pooled width x categories]
  Tensor<T> classifier_bias;    // [categories]

  static BaselineParams init(std::size_t input_dim, std::size_t categories, Rng& rng);
  void append_parameters(ParameterList<T>& out, const std::string& prefix) const;
};

/// Max-over-time pooling, dropout (when rng is set), linear scores.
template <typename T>
Tensor<T> cnn_logits(Tape<T>& tape, const EncodedSequence<T>& seq, const BaselineParams<T>& params,
                     double dropout_rate = 0.0, Rng* rng = nullptr);

/// BiLSTM endpoint concatenation, dropout (when rng is set), linear scores.
template <typename T>
Tensor<T> bilstm_logits(Tape<T>& tape, const EncodedSequence<T>& seq,
                        const BaselineParams<T>& params, double dropout_rate = 0.0,
                        Rng* rng = nullptr);

/// Class distributions [count x categories] of the Kim-style CNN.
template <typename T>
Tensor<T> cnn_forward(Tape<T>& tape, const Encoder<T>& encoder, const Tensor<T>& embedded,
                      const Segments& segments, const BaselineParams<T>& params,
                      double dropout_rate = 0.0, Rng* rng = nullptr);

/// Class distributions [count x categories] of the BiLSTM classifier.
template <typename T>
Tensor<T> bilstm_forward(Tape<T>& tape, const Encoder<T>& encoder, const Tensor<T>& embedded,
                         const Segments& segments, const BaselineParams<T>& params,
                         double dropout_rate = 0.0, Rng* rng = nullptr);

extern template struct BaselineParams<float>;
extern template struct BaselineParams<double>;

}  // namespace dolfin
