#pragma once

#include <cstddef>

#include "dolfin/encoders.hpp"
#include "dolfin/ops.hpp"
#include "dolfin/parameters.hpp"

namespace dolfin {

/// Bag-of-latent-features head.
///
/// Every encoded position w_i is mapped by one shared linear-softmax layer to
/// a distribution u_i over `latent` features. The bag r = min(1, sum_i u_i)
/// holds a soft presence indicator per feature, and the text vector is
/// s = ReLU(sum_j r_j f_j) over the rows f_j of the feature table.
template <typename T>
struct BolfParams {
  Tensor<T> lsl_weight;         // [encoder width x latent]
  Tensor<T> lsl_bias;           // [latent]
  Tensor<T> feature_table;      // [latent x text_dim]
  Tensor<T> classifier_weight;  // [text_dim x categories]
  Tensor<T> classifier_bias;    // [categories]

  static BolfParams init(std::size_t encoder_dim, std::size_t latent, std::size_t text_dim,
                         std::size_t categories, Rng& rng);

  std::size_t latent() const { return feature_table.rows(); }
  std::size_t text_dim() const { return feature_table.cols(); }
  std::size_t categories() const { return classifier_weight.cols(); }

  void append_parameters(ParameterList<T>& out, const std::string& prefix) const;
};

/// Row i is p(f | w_i, s); rows of every packed sequence sum to one.
template <typename T>
struct LatentDistribution {
  Tensor<T> u;  // [total positions x latent]
  Segments segments;
};

template <typename T>
LatentDistribution<T> latent_distributions(Tape<T>& tape, const EncodedSequence<T>& seq,
                                           const BolfParams<T>& params);

/// min(1, column sums of u) per sequence: [count x latent], entries in [0, 1].
template <typename T>
Tensor<T> truncated_sum(Tape<T>& tape, const LatentDistribution<T>& dist);

/// ReLU(r F) followed by dropout when `rng` is non-null.
template <typename T>
Tensor<T> compose_text_vector(Tape<T>& tape, const Tensor<T>& bag, const BolfParams<T>& params,
                              double dropout_rate = 0.0, Rng* rng = nullptr);

/// Affine scores s W + b of a linear-softmax classifier.
template <typename T>
Tensor<T> classifier_logits(Tape<T>& tape, const Tensor<T>& text_vector, const Tensor<T>& weight,
                            const Tensor<T>& bias);

/// p(c | s) = softmax(s W + b), one row per text.
template <typename T>
Tensor<T> classify(Tape<T>& tape, const Tensor<T>& text_vector, const BolfParams<T>& params);

extern template struct BolfParams<float>;
extern template struct BolfParams<double>;

}  // namespace dolfin
