#include "dolfin/encoders.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "dolfin/error.hpp"

namespace dolfin {

std::size_t EncoderConfig::output_dim() const {
  return kind == EncoderKind::conv ? filter_sizes.size() * filters_per_size : 2 * lstm_hidden;
}

void EncoderConfig::validate() const {
  if (kind == EncoderKind::conv) {
    if (filter_sizes.empty()) throw UsageError("encoder: no filter sizes");
    for (std::size_t w : filter_sizes) {
      if (w == 0) throw UsageError("encoder: filter size must be positive");
    }
    if (filters_per_size == 0) throw UsageError("encoder: filters per size must be positive");
  } else if (lstm_hidden == 0) {
    throw UsageError("encoder: LSTM hidden size must be positive");
  }
}

namespace {

template <typename T>
LstmParams<T> init_lstm(std::size_t input_dim, std::size_t hidden, Rng& rng) {
  LstmParams<T> p{uniform_parameter<T>(Shape{input_dim, 4 * hidden}, 0.1, rng),
                  uniform_parameter<T>(Shape{hidden, 4 * hidden}, 0.1, rng),
                  uniform_parameter<T>(Shape{4 * hidden}, 0.1, rng)};
  for (std::size_t j = hidden; j < 2 * hidden; ++j) p.bias[j] = T(1);
  return p;
}

}  // namespace

template <typename T>
Encoder<T>::Encoder(std::size_t input_dim, EncoderConfig config, Rng& rng)
    : config_(std::move(config)), input_dim_(input_dim) {
  config_.validate();
  if (input_dim == 0) throw UsageError("encoder: input dimension must be positive");
  if (config_.kind == EncoderKind::conv) {
    filters_.widths = config_.filter_sizes;
    for (std::size_t width : config_.filter_sizes) {
      const double bound = std::sqrt(1.0 / static_cast<double>(width * input_dim));
      filters_.weights.push_back(
          uniform_parameter<T>(Shape{width * input_dim, config_.filters_per_size}, bound, rng));
      filters_.biases.push_back(zero_parameter<T>(Shape{config_.filters_per_size}));
    }
  } else {
    forward_ = init_lstm<T>(input_dim, config_.lstm_hidden, rng);
    backward_ = init_lstm<T>(input_dim, config_.lstm_hidden, rng);
  }
}

template <typename T>
EncodedSequence<T> Encoder<T>::encode(Tape<T>& tape, const Tensor<T>& embedded,
                                      const Segments& segments) const {
  if (segments.count() == 0) throw DimensionError("encode: empty batch");
  for (std::size_t s = 0; s < segments.count(); ++s) {
    if (segments.length(s) == 0) throw DimensionError("encode: empty sequence");
  }
  if (embedded.cols() != input_dim_ || embedded.rows() != segments.total()) {
    throw DimensionError("encode: expected [" + std::to_string(segments.total()) + "x" +
                         std::to_string(input_dim_) + "] input, got " +
                         shape_string(embedded.shape()));
  }
  return config_.kind == EncoderKind::conv ? encode_conv(tape, embedded, segments)
                                           : encode_bilstm(tape, embedded, segments);
}

template <typename T>
EncodedSequence<T> Encoder<T>::encode_conv(Tape<T>& tape, const Tensor<T>& embedded,
                                           const Segments& segments) const {
  return {conv1d_temporal(tape, embedded, segments, filters_, true), segments, EncoderKind::conv,
          0};
}

template <typename T>
std::vector<Tensor<T>> Encoder<T>::run_direction(Tape<T>& tape, const Tensor<T>& input_gates,
                                                 std::size_t begin, std::size_t length,
                                                 const LstmParams<T>& params,
                                                 bool reverse) const {
  const std::size_t hidden = config_.lstm_hidden;
  LstmState<T> state{Tensor<T>::zeros(Shape{1, hidden}), Tensor<T>::zeros(Shape{1, hidden})};
  std::vector<Tensor<T>> states(length);
  for (std::size_t step = 0; step < length; ++step) {
    const std::size_t pos = reverse ? length - 1 - step : step;
    Tensor<T> gates = slice_rows(tape, input_gates, begin + pos, 1);
    state = lstm_cell(tape, gates, state.h, state.c, params.recurrent_weight, params.bias);
    states[pos] = state.h;
  }
  return states;
}

template <typename T>
EncodedSequence<T> Encoder<T>::encode_bilstm(Tape<T>& tape, const Tensor<T>& embedded,
                                             const Segments& segments) const {
  const Tensor<T> forward_gates = matmul(tape, embedded, forward_.input_weight);
  const Tensor<T> backward_gates = matmul(tape, embedded, backward_.input_weight);
  std::vector<Tensor<T>> per_sequence;
  per_sequence.reserve(segments.count());
  for (std::size_t s = 0; s < segments.count(); ++s) {
    const auto fwd = run_direction(tape, forward_gates, segments.begin(s), segments.length(s),
                                   forward_, false);
    const auto bwd = run_direction(tape, backward_gates, segments.begin(s), segments.length(s),
                                   backward_, true);
    per_sequence.push_back(
        concat_cols(tape, std::vector<Tensor<T>>{concat_rows(tape, fwd), concat_rows(tape, bwd)}));
  }
  Tensor<T> vectors =
      per_sequence.size() == 1 ? per_sequence.front() : concat_rows(tape, per_sequence);
  return {vectors, segments, EncoderKind::bilstm, config_.lstm_hidden};
}

template <typename T>
void Encoder<T>::append_parameters(ParameterList<T>& out, const std::string& prefix) const {
  if (config_.kind == EncoderKind::conv) {
    for (std::size_t w = 0; w < filters_.widths.size(); ++w) {
      const std::string tag = prefix + "conv" + std::to_string(filters_.widths[w]);
      out.push_back({tag + ".weight", filters_.weights[w]});
      out.push_back({tag + ".bias", filters_.biases[w]});
    }
    return;
  }
  for (const auto& [tag, p] : {std::pair{std::string("lstm_fwd"), &forward_},
                               std::pair{std::string("lstm_bwd"), &backward_}}) {
    out.push_back({prefix + tag + ".input_weight", p->input_weight});
    out.push_back({prefix + tag + ".recurrent_weight", p->recurrent_weight});
    out.push_back({prefix + tag + ".bias", p->bias});
  }
}

template <typename T>
Tensor<T> bilstm_endpoints(Tape<T>& tape, const EncodedSequence<T>& seq) {
  if (seq.kind != EncoderKind::bilstm) {
    throw std::invalid_argument("bilstm_endpoints: sequence was not produced by a BiLSTM encoder");
  }
  const std::size_t h = seq.hidden;
  std::vector<Tensor<T>> rows;
  rows.reserve(seq.segments.count());
  for (std::size_t s = 0; s < seq.segments.count(); ++s) {
    Tensor<T> first = slice_rows(tape, seq.vectors, seq.segments.begin(s), 1);
    Tensor<T> last = slice_rows(tape, seq.vectors, seq.segments.end(s) - 1, 1);
    rows.push_back(concat_cols(
        tape, std::vector<Tensor<T>>{slice_cols(tape, first, h, h), slice_cols(tape, last, 0, h)}));
  }
  return rows.size() == 1 ? rows.front() : concat_rows(tape, rows);
}

template class Encoder<float>;
template class Encoder<double>;
template Tensor<float> bilstm_endpoints(Tape<float>&, const EncodedSequence<float>&);
template Tensor<double> bilstm_endpoints(Tape<double>&, const EncodedSequence<double>&);

}  // namespace dolfin
