#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dolfin/baselines.hpp"
#include "dolfin/bolf.hpp"
#include "dolfin/encoders.hpp"

namespace dolfin {

enum class Architecture { cnn, bilstm, dolfin_conv, dolfin_bilstm };

std::string to_string(Architecture arch);
/// Accepts cnn, bilstm, dolfin-conv, dolfin-bilstm.
Architecture parse_architecture(std::string_view name);
bool is_dolfin(Architecture arch);
EncoderKind encoder_kind(Architecture arch);

struct ModelConfig {
  Architecture architecture = Architecture::dolfin_conv;
  std::size_t vocab_size = 0;
  std::size_t embedding_dim = 300;
  EncoderConfig encoder;  // kind is taken from the architecture
  std::size_t latent_features = 20;
  std::size_t text_dim = 100;
  std::size_t categories = 0;
  double dropout = 0.5;

  void validate() const;
};

/// Token ids of several texts packed back to back, with optional gold labels.
struct Batch {
  std::vector<std::int32_t> ids;
  Segments segments;
  std::vector<std::int32_t> labels;

  std::size_t size() const { return segments.count(); }
  void add(std::span<const std::int32_t> tokens, std::int32_t label = -1);
};

template <typename T>
struct ForwardPass {
  Tensor<T> logits;       // [texts x categories]
  Tensor<T> text_vector;  // s, after dropout when training
  LatentDistribution<T> latent;  // DoLFIn only
  Tensor<T> bag;                 // r, DoLFIn only
};

/// Embedding, encoder and head of one of the four classifiers.
template <typename T>
class TextClassifier {
 public:
  TextClassifier(ModelConfig config, Rng& rng);

  const ModelConfig& config() const { return config_; }
  Architecture architecture() const { return config_.architecture; }

  /// Training mode when dropout_rng is non-null, evaluation mode otherwise.
  ForwardPass<T> forward(Tape<T>& tape, const Batch& batch, Rng* dropout_rng = nullptr) const;

  /// Evaluation-mode class distributions, one row per text.
  Tensor<T> predict_proba(const Batch& batch) const;
  /// Argmax category per text; ties go to the lowest index.
  std::vector<std::int32_t> predict(const Batch& batch) const;

  /// All trainable tensors in declaration order.
  ParameterList<T> parameters() const;

  Tensor<T>& embedding() { return embedding_; }
  const Tensor<T>& embedding() const { return embedding_; }
  const Encoder<T>& encoder() const { return encoder_; }
  const BolfParams<T>& bolf() const;
  const BaselineParams<T>& baseline() const;

 private:
  ModelConfig config_;
  Tensor<T> embedding_;
  Encoder<T> encoder_;
  std::optional<BolfParams<T>> bolf_;
  std::optional<BaselineParams<T>> baseline_;
};

/// Index of the largest entry in each row, lowest index on ties.
template <typename T>
std::vector<std::int32_t> argmax_rows(const Tensor<T>& x);

extern template class TextClassifier<float>;
extern template class TextClassifier<double>;

}  // namespace dolfin
