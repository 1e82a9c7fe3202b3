#pragma once

#include <cstddef>
#include <vector>

#include "dolfin/ops.hpp"
#include "dolfin/parameters.hpp"

namespace dolfin {

enum class EncoderKind { conv, bilstm };

struct EncoderConfig {
  EncoderKind kind = EncoderKind::conv;
  std::vector<std::size_t> filter_sizes{3, 4, 5};
  std::size_t filters_per_size = 100;
  std::size_t lstm_hidden = 100;

  /// Width of each encoded position: sizes x filters for conv, 2 x hidden for BiLSTM.
  std::size_t output_dim() const;
  void validate() const;
};

/// Per-position context vectors for a packed batch of sequences. For BiLSTM
/// output, columns [0, hidden) hold the forward state and [hidden, 2 hidden)
/// the backward state.
template <typename T>
struct EncodedSequence {
  Tensor<T> vectors;
  Segments segments;
  EncoderKind kind = EncoderKind::conv;
  std::size_t hidden = 0;

  std::size_t width() const { return vectors.cols(); }
};

template <typename T>
struct LstmParams {
  Tensor<T> input_weight;      // [input_dim x 4h]
  Tensor<T> recurrent_weight;  // [h x 4h]
  Tensor<T> bias;              // [4h], gate order input, forget, candidate, output
};

template <typename T>
class Encoder {
 public:
  Encoder() = default;
  /// Conv weights are uniform in +-sqrt(1 / fan_in) with zero bias; LSTM
  /// weights uniform in +-0.1 with forget-gate bias 1.
  Encoder(std::size_t input_dim, EncoderConfig config, Rng& rng);

  const EncoderConfig& config() const { return config_; }
  std::size_t input_dim() const { return input_dim_; }
  std::size_t output_dim() const { return config_.output_dim(); }

  /// embedded is [total x input_dim], packed per `segments`.
  EncodedSequence<T> encode(Tape<T>& tape, const Tensor<T>& embedded,
                            const Segments& segments) const;

  void append_parameters(ParameterList<T>& out, const std::string& prefix) const;

 private:
  EncodedSequence<T> encode_conv(Tape<T>& tape, const Tensor<T>& embedded,
                                 const Segments& segments) const;
  EncodedSequence<T> encode_bilstm(Tape<T>& tape, const Tensor<T>& embedded,
                                   const Segments& segments) const;
  std::vector<Tensor<T>> run_direction(Tape<T>& tape, const Tensor<T>& input_gates,
                                       std::size_t begin, std::size_t length,
                                       const LstmParams<T>& params, bool reverse) const;

  EncoderConfig config_;
  std::size_t input_dim_ = 0;
  FilterBank<T> filters_;
  LstmParams<T> forward_;
  LstmParams<T> backward_;
};

/// [backward half of the first position | forward half of the last position]
/// for every sequence: [count x 2 hidden].
template <typename T>
Tensor<T> bilstm_endpoints(Tape<T>& tape, const EncodedSequence<T>& seq);

extern template class Encoder<float>;
extern template class Encoder<double>;

}  // namespace dolfin
