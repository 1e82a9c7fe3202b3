#include "dolfin/ops.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "dolfin/error.hpp"

namespace dolfin {
namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename T>
Eigen::Map<RowMat<T>> mat(std::span<T> s, std::size_t rows, std::size_t cols) {
  return Eigen::Map<RowMat<T>>(s.data(), static_cast<Eigen::Index>(rows),
                               static_cast<Eigen::Index>(cols));
}

template <typename T>
Eigen::Map<const RowMat<T>> mat(std::span<const T> s, std::size_t rows, std::size_t cols) {
  return Eigen::Map<const RowMat<T>>(s.data(), static_cast<Eigen::Index>(rows),
                                     static_cast<Eigen::Index>(cols));
}

template <typename T>
Eigen::Map<RowMat<T>> value_mat(Tensor<T>& t) {
  return mat(t.data(), t.rows(), t.cols());
}

template <typename T>
Eigen::Map<const RowMat<T>> value_mat(const Tensor<T>& t) {
  return mat(t.data(), t.rows(), t.cols());
}

template <typename T>
Eigen::Map<RowMat<T>> grad_mat(const Tensor<T>& t) {
  return mat(t.ensure_grad(), t.rows(), t.cols());
}

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shapes " + shape_string(a.shape()) + " and " +
                         shape_string(b.shape()) + " differ");
  }
}

template <typename T>
void require_finite(const Tensor<T>& x, const char* op) {
  for (T v : x.data()) {
    if (!std::isfinite(v)) throw NumericError(std::string(op) + ": non-finite input");
  }
}

template <typename T>
Tensor<T> matrix(std::size_t rows, std::size_t cols, bool requires_grad) {
  return Tensor<T>::zeros(Shape{rows, cols}, requires_grad);
}

void require_segments_cover(std::size_t rows, const Segments& segments, const char* op) {
  if (segments.total() != rows) {
    throw DimensionError(std::string(op) + ": segments cover " +
                         std::to_string(segments.total()) + " rows but input has " +
                         std::to_string(rows));
  }
}

template <typename T>
T sigmoid(T z) {
  return T(1) / (T(1) + std::exp(-z));
}

}  // namespace

template <typename T>
Tensor<T> matmul(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: inner dimensions disagree for " + shape_string(a.shape()) +
                         " and " + shape_string(b.shape()));
  }
  const bool track = tape.tracks(a, b);
  Tensor<T> out = matrix<T>(a.rows(), b.cols(), track);
  value_mat(out).noalias() = value_mat(a) * value_mat(b);
  if (track) {
    tape.record({out}, [a, b, out]() mutable {
      auto g = grad_mat(out);
      if (a.requires_grad()) grad_mat(a).noalias() += g * value_mat(b).transpose();
      if (b.requires_grad()) grad_mat(b).noalias() += value_mat(a).transpose() * g;
    });
  }
  return out;
}

template <typename T>
Tensor<T> add(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "add");
  const bool track = tape.tracks(a, b);
  Tensor<T> out(a.shape(), std::vector<T>(a.numel()), track);
  for (std::size_t i = 0; i < a.numel(); ++i) out[i] = a[i] + b[i];
  if (track) {
    tape.record({out}, [a, b, out]() mutable {
      auto g = out.grad();
      for (const Tensor<T>* in : {&a, &b}) {
        if (!in->requires_grad()) continue;
        auto gi = in->ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) gi[i] += g[i];
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> mul(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "mul");
  const bool track = tape.tracks(a, b);
  Tensor<T> out(a.shape(), std::vector<T>(a.numel()), track);
  for (std::size_t i = 0; i < a.numel(); ++i) out[i] = a[i] * b[i];
  if (track) {
    tape.record({out}, [a, b, out]() {
      auto g = out.grad();
      if (a.requires_grad()) {
        auto ga = a.ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * b[i];
      }
      if (b.requires_grad()) {
        auto gb = b.ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * a[i];
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> add_row_bias(Tape<T>& tape, const Tensor<T>& x, const Tensor<T>& bias) {
  if (bias.numel() != x.cols()) {
    throw DimensionError("add_row_bias: bias " + shape_string(bias.shape()) +
                         " does not fit rows of " + shape_string(x.shape()));
  }
  const bool track = tape.tracks(x, bias);
  Tensor<T> out(x.shape(), std::vector<T>(x.numel()), track);
  const std::size_t cols = x.cols();
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] = x[r * cols + c] + bias[c];
  }
  if (track) {
    tape.record({out}, [x, bias, out]() mutable {
      auto g = out.grad();
      const std::size_t cols = x.cols();
      if (x.requires_grad()) {
        auto gx = x.ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
      }
      if (bias.requires_grad()) {
        auto gb = bias.ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) gb[i % cols] += g[i];
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> scale(Tape<T>& tape, const Tensor<T>& x, T factor) {
  const bool track = tape.tracks(x);
  Tensor<T> out(x.shape(), std::vector<T>(x.numel()), track);
  for (std::size_t i = 0; i < x.numel(); ++i) out[i] = x[i] * factor;
  if (track) {
    tape.record({out}, [x, out, factor]() mutable {
      auto g = out.grad();
      auto gx = x.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * factor;
    });
  }
  return out;
}

template <typename T>
Tensor<T> sum_all(Tape<T>& tape, const Tensor<T>& x) {
  const bool track = tape.tracks(x);
  T total = 0;
  for (T v : x.data()) total += v;
  Tensor<T> out = Tensor<T>::scalar(total, track);
  if (track) {
    tape.record({out}, [x, out]() mutable {
      const T g = out.grad()[0];
      for (T& gi : x.ensure_grad()) gi += g;
    });
  }
  return out;
}

template <typename T>
Tensor<T> sum_rows(Tape<T>& tape, const Tensor<T>& x, const Segments& segments) {
  require_segments_cover(x.rows(), segments, "sum_rows");
  const bool track = tape.tracks(x);
  const std::size_t k = x.cols();
  Tensor<T> out = matrix<T>(segments.count(), k, track);
  for (std::size_t s = 0; s < segments.count(); ++s) {
    for (std::size_t r = segments.begin(s); r < segments.end(s); ++r) {
      for (std::size_t c = 0; c < k; ++c) out[s * k + c] += x[r * k + c];
    }
  }
  if (track) {
    tape.record({out}, [x, out, segments]() mutable {
      auto g = out.grad();
      auto gx = x.ensure_grad();
      const std::size_t k = x.cols();
      for (std::size_t s = 0; s < segments.count(); ++s) {
        for (std::size_t r = segments.begin(s); r < segments.end(s); ++r) {
          for (std::size_t c = 0; c < k; ++c) gx[r * k + c] += g[s * k + c];
        }
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> sum_rows(Tape<T>& tape, const Tensor<T>& x) {
  return sum_rows(tape, x, Segments::single(x.rows()));
}

template <typename T>
Tensor<T> concat_cols(Tape<T>& tape, const std::vector<Tensor<T>>& parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no parts");
  const std::size_t rows = parts.front().rows();
  std::size_t cols = 0;
  bool track = false;
  for (const auto& p : parts) {
    if (p.rows() != rows) {
      throw DimensionError("concat_cols: row counts differ (" + shape_string(parts.front().shape()) +
                           " vs " + shape_string(p.shape()) + ")");
    }
    cols += p.cols();
    track = track || tape.tracks(p);
  }
  Tensor<T> out = matrix<T>(rows, cols, track);
  std::size_t offset = 0;
  for (const auto& p : parts) {
    value_mat(out).middleCols(offset, p.cols()) = value_mat(p);
    offset += p.cols();
  }
  if (track) {
    tape.record({out}, [parts, out]() mutable {
      auto g = grad_mat(out);
      std::size_t offset = 0;
      for (auto& p : parts) {
        if (p.requires_grad()) grad_mat(p) += g.middleCols(offset, p.cols());
        offset += p.cols();
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> concat_rows(Tape<T>& tape, const std::vector<Tensor<T>>& parts) {
  if (parts.empty()) throw DimensionError("concat_rows: no parts");
  const std::size_t cols = parts.front().cols();
  std::size_t rows = 0;
  bool track = false;
  for (const auto& p : parts) {
    if (p.cols() != cols) {
      throw DimensionError("concat_rows: column counts differ (" +
                           shape_string(parts.front().shape()) + " vs " + shape_string(p.shape()) +
                           ")");
    }
    rows += p.rows();
    track = track || tape.tracks(p);
  }
  Tensor<T> out = matrix<T>(rows, cols, track);
  auto dst = out.data().begin();
  for (const auto& p : parts) dst = std::copy(p.data().begin(), p.data().end(), dst);
  if (track) {
    tape.record({out}, [parts, out]() mutable {
      auto g = out.grad();
      std::size_t offset = 0;
      for (auto& p : parts) {
        if (p.requires_grad()) {
          auto gp = p.ensure_grad();
          for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += g[offset + i];
        }
        offset += p.numel();
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> slice_rows(Tape<T>& tape, const Tensor<T>& x, std::size_t begin, std::size_t count) {
  if (begin + count > x.rows()) {
    throw DimensionError("slice_rows: rows [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) + ") outside " + shape_string(x.shape()));
  }
  const bool track = tape.tracks(x);
  const std::size_t k = x.cols();
  Tensor<T> out = matrix<T>(count, k, track);
  std::copy_n(x.data().begin() + begin * k, count * k, out.data().begin());
  if (track) {
    tape.record({out}, [x, out, begin]() mutable {
      auto g = out.grad();
      auto gx = x.ensure_grad();
      const std::size_t base = begin * x.cols();
      for (std::size_t i = 0; i < g.size(); ++i) gx[base + i] += g[i];
    });
  }
  return out;
}

template <typename T>
Tensor<T> slice_cols(Tape<T>& tape, const Tensor<T>& x, std::size_t begin, std::size_t count) {
  if (begin + count > x.cols()) {
    throw DimensionError("slice_cols: columns [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) + ") outside " + shape_string(x.shape()));
  }
  const bool track = tape.tracks(x);
  Tensor<T> out = matrix<T>(x.rows(), count, track);
  value_mat(out) = value_mat(x).middleCols(begin, count);
  if (track) {
    tape.record({out}, [x, out, begin]() mutable {
      grad_mat(x).middleCols(begin, out.cols()) += grad_mat(out);
    });
  }
  return out;
}

template <typename T>
Tensor<T> embedding_lookup(Tape<T>& tape, const Tensor<T>& table,
                           std::span<const std::int32_t> ids) {
  const std::size_t vocab = table.rows();
  const std::size_t dim = table.cols();
  for (std::int32_t id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= vocab) {
      throw std::out_of_range("embedding_lookup: id " + std::to_string(id) +
                              " outside table of " + std::to_string(vocab) + " rows");
    }
  }
  const bool track = tape.tracks(table);
  Tensor<T> out = matrix<T>(ids.size(), dim, track);
  for (std::size_t r = 0; r < ids.size(); ++r) {
    std::copy_n(table.data().begin() + static_cast<std::size_t>(ids[r]) * dim, dim,
                out.data().begin() + r * dim);
  }
  if (track) {
    std::vector<std::int32_t> rows(ids.begin(), ids.end());
    tape.record({out}, [table, out, rows = std::move(rows)]() mutable {
      auto g = out.grad();
      auto gt = table.ensure_grad();
      const std::size_t dim = table.cols();
      for (std::size_t r = 0; r < rows.size(); ++r) {
        const std::size_t base = static_cast<std::size_t>(rows[r]) * dim;
        for (std::size_t c = 0; c < dim; ++c) gt[base + c] += g[r * dim + c];
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> softmax_rows(Tape<T>& tape, const Tensor<T>& x) {
  require_finite(x, "softmax_rows");
  const bool track = tape.tracks(x);
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  Tensor<T> out(x.shape(), std::vector<T>(x.numel()), track);
  for (std::size_t r = 0; r < n; ++r) {
    const T* in = x.data().data() + r * d;
    T* y = out.data().data() + r * d;
    const T top = *std::max_element(in, in + d);
    T total = 0;
    for (std::size_t c = 0; c < d; ++c) {
      y[c] = std::exp(in[c] - top);
      total += y[c];
    }
    for (std::size_t c = 0; c < d; ++c) y[c] /= total;
  }
  if (track) {
    tape.record({out}, [x, out]() mutable {
      auto g = out.grad();
      auto gx = x.ensure_grad();
      const std::size_t d = x.cols();
      for (std::size_t r = 0; r < x.rows(); ++r) {
        T dot = 0;
        for (std::size_t c = 0; c < d; ++c) dot += g[r * d + c] * out[r * d + c];
        for (std::size_t c = 0; c < d; ++c) gx[r * d + c] += out[r * d + c] * (g[r * d + c] - dot);
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> relu(Tape<T>& tape, const Tensor<T>& x) {
  const bool track = tape.tracks(x);
  Tensor<T> out(x.shape(), std::vector<T>(x.numel()), track);
  for (std::size_t i = 0; i < x.numel(); ++i) {
    const bool on = x[i] > T(0);
    out[i] = on ? x[i] : T(0);
    if (tape.branch_tracing()) tape.note_branch(on);
  }
  if (track) {
    tape.record({out}, [x, out]() mutable {
      auto g = out.grad();
      auto gx = x.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (x[i] > T(0)) gx[i] += g[i];
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> clamp_max_one(Tape<T>& tape, const Tensor<T>& x) {
  const bool track = tape.tracks(x);
  Tensor<T> out(x.shape(), std::vector<T>(x.numel()), track);
  for (std::size_t i = 0; i < x.numel(); ++i) {
    const bool pass = x[i] <= T(1);
    out[i] = pass ? x[i] : T(1);
    if (tape.branch_tracing()) tape.note_branch(pass);
  }
  if (track) {
    tape.record({out}, [x, out]() mutable {
      auto g = out.grad();
      auto gx = x.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (x[i] <= T(1)) gx[i] += g[i];
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> elementwise(Tape<T>& tape, const Tensor<T>& x, std::function<T(T)> fn,
                      std::function<T(T)> derivative) {
  const bool track = tape.tracks(x);
  Tensor<T> out(x.shape(), std::vector<T>(x.numel()), track);
  for (std::size_t i = 0; i < x.numel(); ++i) out[i] = fn(x[i]);
  if (track) {
    tape.record({out}, [x, out, derivative = std::move(derivative)]() mutable {
      auto g = out.grad();
      auto gx = x.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * derivative(x[i]);
    });
  }
  return out;
}

template <typename T>
Tensor<T> dropout(Tape<T>& tape, const Tensor<T>& x, double rate, Rng* rng) {
  if (rate < 0.0 || rate >= 1.0) {
    throw std::invalid_argument("dropout: rate must lie in [0, 1)");
  }
  if (rng == nullptr || rate == 0.0) return x;
  const T keep_scale = T(1) / static_cast<T>(1.0 - rate);
  std::vector<T> mask(x.numel());
  for (T& m : mask) m = rng->bernoulli(1.0 - rate) ? keep_scale : T(0);
  const bool track = tape.tracks(x);
  Tensor<T> out(x.shape(), std::vector<T>(x.numel()), track);
  for (std::size_t i = 0; i < x.numel(); ++i) out[i] = x[i] * mask[i];
  if (track) {
    tape.record({out}, [x, out, mask = std::move(mask)]() mutable {
      auto g = out.grad();
      auto gx = x.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * mask[i];
    });
  }
  return out;
}

template <typename T>
Tensor<T> cross_entropy(Tape<T>& tape, const Tensor<T>& logits,
                        std::span<const std::int32_t> gold) {
  const std::size_t n = logits.rows();
  const std::size_t m = logits.cols();
  if (gold.size() != n) {
    throw DimensionError("cross_entropy: " + std::to_string(gold.size()) + " labels for " +
                         shape_string(logits.shape()) + " logits");
  }
  for (std::int32_t c : gold) {
    if (c < 0 || static_cast<std::size_t>(c) >= m) {
      throw std::out_of_range("cross_entropy: gold index " + std::to_string(c) +
                              " outside [0, " + std::to_string(m) + ")");
    }
  }
  require_finite(logits, "cross_entropy");
  const bool track = tape.tracks(logits);
  std::vector<T> probs(logits.numel());
  T total = 0;
  for (std::size_t r = 0; r < n; ++r) {
    const T* z = logits.data().data() + r * m;
    const T top = *std::max_element(z, z + m);
    T sum = 0;
    for (std::size_t c = 0; c < m; ++c) sum += std::exp(z[c] - top);
    const T log_norm = top + std::log(sum);
    total += log_norm - z[gold[r]];
    for (std::size_t c = 0; c < m; ++c) probs[r * m + c] = std::exp(z[c] - log_norm);
  }
  Tensor<T> out = Tensor<T>::scalar(total / static_cast<T>(n), track);
  if (track) {
    std::vector<std::int32_t> labels(gold.begin(), gold.end());
    tape.record({out}, [logits, out, probs = std::move(probs), labels = std::move(labels)]() mutable {
      const std::size_t n = logits.rows();
      const std::size_t m = logits.cols();
      const T g = out.grad()[0] / static_cast<T>(n);
      auto gz = logits.ensure_grad();
      for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < m; ++c) {
          const T onehot = static_cast<std::size_t>(labels[r]) == c ? T(1) : T(0);
          gz[r * m + c] += g * (probs[r * m + c] - onehot);
        }
      }
    });
  }
  return out;
}

template <typename T>
std::size_t FilterBank<T>::channels() const {
  std::size_t total = 0;
  for (const auto& w : weights) total += w.cols();
  return total;
}

Segments valid_conv_segments(const Segments& segments, std::size_t width) {
  Segments out;
  for (std::size_t s = 0; s < segments.count(); ++s) {
    if (segments.length(s) < width) {
      throw DimensionError("conv1d_temporal: sequence of length " +
                           std::to_string(segments.length(s)) + " shorter than filter width " +
                           std::to_string(width));
    }
    out.push(segments.length(s) - width + 1);
  }
  return out;
}

template <typename T>
Tensor<T> conv1d_temporal(Tape<T>& tape, const Tensor<T>& x, const Segments& segments,
                          const FilterBank<T>& filters, bool pad) {
  require_segments_cover(x.rows(), segments, "conv1d_temporal");
  if (segments.count() == 0) throw DimensionError("conv1d_temporal: empty batch");
  for (std::size_t s = 0; s < segments.count(); ++s) {
    if (segments.length(s) == 0) throw DimensionError("conv1d_temporal: empty sequence");
  }
  if (filters.widths.empty() || filters.widths.size() != filters.weights.size() ||
      filters.widths.size() != filters.biases.size()) {
    throw DimensionError("conv1d_temporal: malformed filter bank");
  }
  if (!pad && filters.widths.size() != 1) {
    throw DimensionError("conv1d_temporal: unpadded convolution needs a single filter width");
  }
  const std::size_t dim = x.cols();
  bool track = tape.tracks(x);
  for (std::size_t w = 0; w < filters.widths.size(); ++w) {
    const std::size_t width = filters.widths[w];
    if (width == 0 || filters.weights[w].rows() != width * dim ||
        filters.biases[w].numel() != filters.weights[w].cols()) {
      throw DimensionError("conv1d_temporal: filter of width " + std::to_string(width) +
                           " has weight " + shape_string(filters.weights[w].shape()) +
                           " and bias " + shape_string(filters.biases[w].shape()) +
                           " for input " + shape_string(x.shape()));
    }
    track = track || tape.tracks(filters.weights[w], filters.biases[w]);
  }

  const Segments out_segments = pad ? segments : valid_conv_segments(segments, filters.widths[0]);
  const std::size_t out_rows = out_segments.total();
  Tensor<T> out = matrix<T>(out_rows, filters.channels(), track);
  auto y = value_mat(out);

  // One unrolled window matrix per filter width: row = output position,
  // column block j = input row at window offset j (zero outside the sequence).
  std::vector<RowMat<T>> windows(filters.widths.size());
  std::size_t col_offset = 0;
  for (std::size_t w = 0; w < filters.widths.size(); ++w) {
    const std::size_t width = filters.widths[w];
    const std::ptrdiff_t left = pad ? static_cast<std::ptrdiff_t>((width - 1) / 2) : 0;
    RowMat<T>& unrolled = windows[w];
    unrolled.setZero(static_cast<Eigen::Index>(out_rows), static_cast<Eigen::Index>(width * dim));
    for (std::size_t s = 0; s < segments.count(); ++s) {
      const auto n = static_cast<std::ptrdiff_t>(segments.length(s));
      for (std::size_t p = 0; p < out_segments.length(s); ++p) {
        const std::size_t row = out_segments.begin(s) + p;
        for (std::size_t j = 0; j < width; ++j) {
          const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(p + j) - left;
          if (src < 0 || src >= n) continue;
          const T* from = x.data().data() + (segments.begin(s) + static_cast<std::size_t>(src)) * dim;
          std::copy_n(from, dim, unrolled.data() + row * width * dim + j * dim);
        }
      }
    }
    const std::size_t k = filters.weights[w].cols();
    y.middleCols(col_offset, k).noalias() = unrolled * value_mat(filters.weights[w]);
    y.middleCols(col_offset, k).rowwise() +=
        mat(filters.biases[w].data(), 1, k).row(0);
    col_offset += k;
  }

  if (track) {
    tape.record({out}, [x, out, filters, segments, out_segments, pad,
                        windows = std::move(windows)]() mutable {
      auto g = grad_mat(out);
      const std::size_t dim = x.cols();
      std::size_t col_offset = 0;
      for (std::size_t w = 0; w < filters.widths.size(); ++w) {
        const Tensor<T>& weight = filters.weights[w];
        const Tensor<T>& bias = filters.biases[w];
        const std::size_t width = filters.widths[w];
        const std::size_t k = weight.cols();
        const auto gw = g.middleCols(col_offset, k);
        if (weight.requires_grad()) grad_mat(weight).noalias() += windows[w].transpose() * gw;
        if (bias.requires_grad()) {
          mat(bias.ensure_grad(), 1, k).row(0) += gw.colwise().sum();
        }
        if (x.requires_grad()) {
          const RowMat<T> g_windows = gw * value_mat(weight).transpose();
          auto gx = x.ensure_grad();
          const std::ptrdiff_t left = pad ? static_cast<std::ptrdiff_t>((width - 1) / 2) : 0;
          for (std::size_t s = 0; s < segments.count(); ++s) {
            const auto n = static_cast<std::ptrdiff_t>(segments.length(s));
            for (std::size_t p = 0; p < out_segments.length(s); ++p) {
              const std::size_t row = out_segments.begin(s) + p;
              for (std::size_t j = 0; j < width; ++j) {
                const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(p + j) - left;
                if (src < 0 || src >= n) continue;
                T* to = gx.data() + (segments.begin(s) + static_cast<std::size_t>(src)) * dim;
                const T* from = g_windows.data() + row * width * dim + j * dim;
                for (std::size_t c = 0; c < dim; ++c) to[c] += from[c];
              }
            }
          }
        }
        col_offset += k;
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> maxpool_over_time(Tape<T>& tape, const Tensor<T>& x, const Segments& segments) {
  require_segments_cover(x.rows(), segments, "maxpool_over_time");
  const bool track = tape.tracks(x);
  const std::size_t k = x.cols();
  Tensor<T> out = matrix<T>(segments.count(), k, track);
  std::vector<std::size_t> argmax(segments.count() * k);
  for (std::size_t s = 0; s < segments.count(); ++s) {
    if (segments.length(s) == 0) throw DimensionError("maxpool_over_time: empty sequence");
    for (std::size_t c = 0; c < k; ++c) {
      std::size_t best = segments.begin(s);
      for (std::size_t r = best + 1; r < segments.end(s); ++r) {
        if (x[r * k + c] > x[best * k + c]) best = r;
      }
      argmax[s * k + c] = best;
      out[s * k + c] = x[best * k + c];
      if (tape.branch_tracing()) tape.note_branch(best);
    }
  }
  if (track) {
    tape.record({out}, [x, out, argmax = std::move(argmax)]() mutable {
      auto g = out.grad();
      auto gx = x.ensure_grad();
      const std::size_t k = x.cols();
      for (std::size_t i = 0; i < argmax.size(); ++i) gx[argmax[i] * k + i % k] += g[i];
    });
  }
  return out;
}

template <typename T>
LstmState<T> lstm_cell(Tape<T>& tape, const Tensor<T>& input_gates, const Tensor<T>& h_prev,
                       const Tensor<T>& c_prev, const Tensor<T>& recurrent_weight,
                       const Tensor<T>& bias) {
  const std::size_t rows = h_prev.rows();
  const std::size_t hidden = h_prev.cols();
  if (input_gates.rows() != rows || input_gates.cols() != 4 * hidden ||
      c_prev.rows() != rows || c_prev.cols() != hidden || recurrent_weight.rows() != hidden ||
      recurrent_weight.cols() != 4 * hidden || bias.numel() != 4 * hidden) {
    throw DimensionError("lstm_cell: inconsistent shapes gates " +
                         shape_string(input_gates.shape()) + ", h " + shape_string(h_prev.shape()) +
                         ", c " + shape_string(c_prev.shape()) + ", W_h " +
                         shape_string(recurrent_weight.shape()) + ", b " +
                         shape_string(bias.shape()));
  }
  const bool track = tape.tracks(input_gates, h_prev, c_prev, recurrent_weight, bias);

  // Post-activation gates, kept for the backward pass.
  RowMat<T> gates = value_mat(h_prev) * value_mat(recurrent_weight);
  gates += value_mat(input_gates);
  gates.rowwise() += mat(bias.data(), 1, 4 * hidden).row(0);
  LstmState<T> next{matrix<T>(rows, hidden, track), matrix<T>(rows, hidden, track)};
  std::vector<T> tanh_c(rows * hidden);
  for (std::size_t r = 0; r < rows; ++r) {
    T* z = gates.data() + r * 4 * hidden;
    for (std::size_t j = 0; j < hidden; ++j) {
      const T i = sigmoid(z[j]);
      const T f = sigmoid(z[hidden + j]);
      const T g = std::tanh(z[2 * hidden + j]);
      const T o = sigmoid(z[3 * hidden + j]);
      z[j] = i;
      z[hidden + j] = f;
      z[2 * hidden + j] = g;
      z[3 * hidden + j] = o;
      const T c = f * c_prev[r * hidden + j] + i * g;
      next.c[r * hidden + j] = c;
      tanh_c[r * hidden + j] = std::tanh(c);
      next.h[r * hidden + j] = o * tanh_c[r * hidden + j];
    }
  }
  if (track) {
    tape.record({next.h, next.c}, [input_gates, h_prev, c_prev, recurrent_weight, bias, next,
                                   gates = std::move(gates), tanh_c = std::move(tanh_c)]() mutable {
      const std::size_t rows = h_prev.rows();
      const std::size_t hidden = h_prev.cols();
      auto gh = next.h.grad();
      auto gc = next.c.grad();
      RowMat<T> dz(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(4 * hidden));
      std::vector<T> dc_prev(rows * hidden);
      for (std::size_t r = 0; r < rows; ++r) {
        const T* a = gates.data() + r * 4 * hidden;
        T* d = dz.data() + r * 4 * hidden;
        for (std::size_t j = 0; j < hidden; ++j) {
          const std::size_t at = r * hidden + j;
          const T i = a[j], f = a[hidden + j], g = a[2 * hidden + j], o = a[3 * hidden + j];
          const T tc = tanh_c[at];
          const T dc = gc[at] + gh[at] * o * (T(1) - tc * tc);
          d[j] = dc * g * i * (T(1) - i);
          d[hidden + j] = dc * c_prev[at] * f * (T(1) - f);
          d[2 * hidden + j] = dc * i * (T(1) - g * g);
          d[3 * hidden + j] = gh[at] * tc * o * (T(1) - o);
          dc_prev[at] = dc * f;
        }
      }
      if (input_gates.requires_grad()) grad_mat(input_gates) += dz;
      if (bias.requires_grad()) mat(bias.ensure_grad(), 1, 4 * hidden).row(0) += dz.colwise().sum();
      if (h_prev.requires_grad()) {
        grad_mat(h_prev).noalias() += dz * value_mat(recurrent_weight).transpose();
      }
      if (recurrent_weight.requires_grad()) {
        grad_mat(recurrent_weight).noalias() += value_mat(h_prev).transpose() * dz;
      }
      if (c_prev.requires_grad()) {
        auto gcp = c_prev.ensure_grad();
        for (std::size_t i = 0; i < gcp.size(); ++i) gcp[i] += dc_prev[i];
      }
    });
  }
  return next;
}

#define DOLFIN_INSTANTIATE_OPS(T)                                                              \
  template Tensor<T> matmul(Tape<T>&, const Tensor<T>&, const Tensor<T>&);                     \
  template Tensor<T> add(Tape<T>&, const Tensor<T>&, const Tensor<T>&);                        \
  template Tensor<T> mul(Tape<T>&, const Tensor<T>&, const Tensor<T>&);                        \
  template Tensor<T> add_row_bias(Tape<T>&, const Tensor<T>&, const Tensor<T>&);               \
  template Tensor<T> scale(Tape<T>&, const Tensor<T>&, T);                                     \
  template Tensor<T> sum_all(Tape<T>&, const Tensor<T>&);                                      \
  template Tensor<T> sum_rows(Tape<T>&, const Tensor<T>&, const Segments&);                    \
  template Tensor<T> sum_rows(Tape<T>&, const Tensor<T>&);                                     \
  template Tensor<T> concat_cols(Tape<T>&, const std::vector<Tensor<T>>&);                     \
  template Tensor<T> concat_rows(Tape<T>&, const std::vector<Tensor<T>>&);                     \
  template Tensor<T> slice_rows(Tape<T>&, const Tensor<T>&, std::size_t, std::size_t);         \
  template Tensor<T> slice_cols(Tape<T>&, const Tensor<T>&, std::size_t, std::size_t);         \
  template Tensor<T> embedding_lookup(Tape<T>&, const Tensor<T>&,                              \
                                      std::span<const std::int32_t>);                          \
  template Tensor<T> softmax_rows(Tape<T>&, const Tensor<T>&);                                 \
  template Tensor<T> relu(Tape<T>&, const Tensor<T>&);                                         \
  template Tensor<T> clamp_max_one(Tape<T>&, const Tensor<T>&);                                \
  template Tensor<T> elementwise(Tape<T>&, const Tensor<T>&, std::function<T(T)>,              \
                                 std::function<T(T)>);                                         \
  template Tensor<T> dropout(Tape<T>&, const Tensor<T>&, double, Rng*);                        \
  template Tensor<T> cross_entropy(Tape<T>&, const Tensor<T>&, std::span<const std::int32_t>); \
  template struct FilterBank<T>;                                                               \
  template Tensor<T> conv1d_temporal(Tape<T>&, const Tensor<T>&, const Segments&,              \
                                     const FilterBank<T>&, bool);                              \
  template Tensor<T> maxpool_over_time(Tape<T>&, const Tensor<T>&, const Segments&);           \
  template LstmState<T> lstm_cell(Tape<T>&, const Tensor<T>&, const Tensor<T>&,                \
                                  const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);

DOLFIN_INSTANTIATE_OPS(float)
DOLFIN_INSTANTIATE_OPS(double)

}  // namespace dolfin
