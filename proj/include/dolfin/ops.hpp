#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "dolfin/random.hpp"
#include "dolfin/tape.hpp"
#include "dolfin/tensor.hpp"

namespace dolfin {

// Differentiable operations. Each records a backward closure on the tape
// whenever the tape has gradients enabled and some input requires a gradient.
// Rank-1 tensors are treated as a single row.

template <typename T>
Tensor<T> matmul(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> add(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& b);

/// Elementwise (Hadamard) product.
template <typename T>
Tensor<T> mul(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& b);

/// x[r, :] + bias for every row r.
template <typename T>
Tensor<T> add_row_bias(Tape<T>& tape, const Tensor<T>& x, const Tensor<T>& bias);

template <typename T>
Tensor<T> scale(Tape<T>& tape, const Tensor<T>& x, T factor);

/// Sum of every entry, as a scalar.
template <typename T>
Tensor<T> sum_all(Tape<T>& tape, const Tensor<T>& x);

/// Column sums within each segment: [total x k] -> [count x k].
template <typename T>
Tensor<T> sum_rows(Tape<T>& tape, const Tensor<T>& x, const Segments& segments);

/// Column sums over all rows: [n x k] -> [1 x k].
template <typename T>
Tensor<T> sum_rows(Tape<T>& tape, const Tensor<T>& x);

/// Side-by-side concatenation; all parts share the row count.
template <typename T>
Tensor<T> concat_cols(Tape<T>& tape, const std::vector<Tensor<T>>& parts);

/// Stacks parts vertically; all parts share the column count.
template <typename T>
Tensor<T> concat_rows(Tape<T>& tape, const std::vector<Tensor<T>>& parts);

template <typename T>
Tensor<T> slice_rows(Tape<T>& tape, const Tensor<T>& x, std::size_t begin, std::size_t count);

template <typename T>
Tensor<T> slice_cols(Tape<T>& tape, const Tensor<T>& x, std::size_t begin, std::size_t count);

/// Gathers table rows; the backward pass scatters into the gathered rows.
template <typename T>
Tensor<T> embedding_lookup(Tape<T>& tape, const Tensor<T>& table,
                           std::span<const std::int32_t> ids);

/// Row-wise softmax with max subtraction. Throws NumericError on non-finite input.
template <typename T>
Tensor<T> softmax_rows(Tape<T>& tape, const Tensor<T>& x);

template <typename T>
Tensor<T> relu(Tape<T>& tape, const Tensor<T>& x);

/// min(1, x). The gradient passes through at exactly 1.
template <typename T>
Tensor<T> clamp_max_one(Tape<T>& tape, const Tensor<T>& x);

/// Generic elementwise map with a caller-supplied derivative.
template <typename T>
Tensor<T> elementwise(Tape<T>& tape, const Tensor<T>& x, std::function<T(T)> fn,
                      std::function<T(T)> derivative);

/// Inverted dropout. A null rng or zero rate is the identity (eval mode).
template <typename T>
Tensor<T> dropout(Tape<T>& tape, const Tensor<T>& x, double rate, Rng* rng);

/// Mean over rows of -log softmax(logits[r])[gold[r]], computed in log space.
template <typename T>
Tensor<T> cross_entropy(Tape<T>& tape, const Tensor<T>& logits,
                        std::span<const std::int32_t> gold);

/// Filters for temporal convolution. weights[w] has shape
/// [widths[w] * input_dim x channels] where row j * input_dim + c multiplies
/// input channel c at window offset j.
template <typename T>
struct FilterBank {
  std::vector<std::size_t> widths;
  std::vector<Tensor<T>> weights;
  std::vector<Tensor<T>> biases;

  std::size_t channels() const;
};

/// Temporal convolution over every packed sequence. With pad set, each
/// sequence is zero-padded so its output length equals its input length
/// (left pad (w-1)/2, the rest on the right) and the channels of every
/// filter width are concatenated per position. Without pad, the bank must hold
/// a single width and each sequence yields length - width + 1 rows.
template <typename T>
Tensor<T> conv1d_temporal(Tape<T>& tape, const Tensor<T>& x, const Segments& segments,
                          const FilterBank<T>& filters, bool pad = true);

/// Row layout produced by conv1d_temporal without padding.
Segments valid_conv_segments(const Segments& segments, std::size_t width);

/// Columnwise maximum within each segment: [total x k] -> [count x k].
/// Ties route the gradient to the first occurrence.
template <typename T>
Tensor<T> maxpool_over_time(Tape<T>& tape, const Tensor<T>& x, const Segments& segments);

template <typename T>
struct LstmState {
  Tensor<T> h;
  Tensor<T> c;
};

/// One LSTM step. input_gates is the input contribution x W_x, laid out as
/// [rows x 4h] with gate blocks input, forget, candidate, output.
template <typename T>
LstmState<T> lstm_cell(Tape<T>& tape, const Tensor<T>& input_gates, const Tensor<T>& h_prev,
                       const Tensor<T>& c_prev, const Tensor<T>& recurrent_weight,
                       const Tensor<T>& bias);

}  // namespace dolfin
