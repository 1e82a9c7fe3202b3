#include "dolfin/model.hpp"

#include <stdexcept>

#include "dolfin/error.hpp"

namespace dolfin {

std::string to_string(Architecture arch) {
  switch (arch) {
    case Architecture::cnn: return "cnn";
    case Architecture::bilstm: return "bilstm";
    case Architecture::dolfin_conv: return "dolfin-conv";
    case Architecture::dolfin_bilstm: return "dolfin-bilstm";
  }
  return "unknown";
}

Architecture parse_architecture(std::string_view name) {
  if (name == "cnn") return Architecture::cnn;
  if (name == "bilstm") return Architecture::bilstm;
  if (name == "dolfin-conv") return Architecture::dolfin_conv;
  if (name == "dolfin-bilstm") return Architecture::dolfin_bilstm;
  throw UsageError("unknown model '" + std::string(name) +
                   "' (expected cnn, bilstm, dolfin-conv or dolfin-bilstm)");
}

bool is_dolfin(Architecture arch) {
  return arch == Architecture::dolfin_conv || arch == Architecture::dolfin_bilstm;
}

EncoderKind encoder_kind(Architecture arch) {
  return arch == Architecture::cnn || arch == Architecture::dolfin_conv ? EncoderKind::conv
                                                                        : EncoderKind::bilstm;
}

void ModelConfig::validate() const {
  if (vocab_size < 2) throw UsageError("model: vocabulary needs padding and unknown rows");
  if (embedding_dim == 0) throw UsageError("model: embedding dimension must be positive");
  if (categories < 2) throw UsageError("model: need at least two categories");
  if (is_dolfin(architecture) && (latent_features == 0 || text_dim == 0)) {
    throw UsageError("model: latent feature count and text dimension must be positive");
  }
  if (dropout < 0.0 || dropout >= 1.0) throw UsageError("model: dropout must lie in [0, 1)");
  encoder.validate();
}

void Batch::add(std::span<const std::int32_t> tokens, std::int32_t label) {
  if (tokens.empty()) throw DimensionError("batch: empty text");
  ids.insert(ids.end(), tokens.begin(), tokens.end());
  segments.push(tokens.size());
  labels.push_back(label);
}

template <typename T>
TextClassifier<T>::TextClassifier(ModelConfig config, Rng& rng) : config_(std::move(config)) {
  config_.encoder.kind = encoder_kind(config_.architecture);
  config_.validate();
  embedding_ = Tensor<T>::zeros(Shape{config_.vocab_size, config_.embedding_dim}, true);
  // Row 0 is padding and stays zero.
  for (std::size_t i = config_.embedding_dim; i < embedding_.numel(); ++i) {
    embedding_[i] = static_cast<T>(rng.uniform(-0.25, 0.25));
  }
  encoder_ = Encoder<T>(config_.embedding_dim, config_.encoder, rng);
  if (is_dolfin(config_.architecture)) {
    bolf_ = BolfParams<T>::init(encoder_.output_dim(), config_.latent_features, config_.text_dim,
                                config_.categories, rng);
  } else {
    baseline_ = BaselineParams<T>::init(encoder_.output_dim(), config_.categories, rng);
  }
}

template <typename T>
ForwardPass<T> TextClassifier<T>::forward(Tape<T>& tape, const Batch& batch,
                                          Rng* dropout_rng) const {
  if (batch.size() == 0) throw DimensionError("forward: empty batch");
  const Tensor<T> embedded = embedding_lookup(tape, embedding_, batch.ids);
  const EncodedSequence<T> seq = encoder_.encode(tape, embedded, batch.segments);
  const double rate = config_.dropout;
  ForwardPass<T> out;
  switch (config_.architecture) {
    case Architecture::cnn:
      out.logits = cnn_logits(tape, seq, *baseline_, rate, dropout_rng);
      break;
    case Architecture::bilstm:
      out.logits = bilstm_logits(tape, seq, *baseline_, rate, dropout_rng);
      break;
    case Architecture::dolfin_conv:
    case Architecture::dolfin_bilstm:
      out.latent = latent_distributions(tape, seq, *bolf_);
      out.bag = truncated_sum(tape, out.latent);
      out.text_vector = compose_text_vector(tape, out.bag, *bolf_, rate, dropout_rng);
      out.logits = classifier_logits(tape, out.text_vector, bolf_->classifier_weight,
                                     bolf_->classifier_bias);
      break;
  }
  return out;
}

template <typename T>
Tensor<T> TextClassifier<T>::predict_proba(const Batch& batch) const {
  Tape<T> tape(false);
  return softmax_rows(tape, forward(tape, batch).logits);
}

template <typename T>
std::vector<std::int32_t> TextClassifier<T>::predict(const Batch& batch) const {
  Tape<T> tape(false);
  return argmax_rows(forward(tape, batch).logits);
}

template <typename T>
ParameterList<T> TextClassifier<T>::parameters() const {
  ParameterList<T> out;
  out.push_back({"embedding", embedding_});
  encoder_.append_parameters(out, "encoder.");
  if (bolf_) bolf_->append_parameters(out, "bolf.");
  if (baseline_) baseline_->append_parameters(out, "head.");
  return out;
}

template <typename T>
const BolfParams<T>& TextClassifier<T>::bolf() const {
  if (!bolf_) throw std::logic_error(to_string(config_.architecture) + " has no latent-feature head");
  return *bolf_;
}

template <typename T>
const BaselineParams<T>& TextClassifier<T>::baseline() const {
  if (!baseline_) throw std::logic_error(to_string(config_.architecture) + " is not a baseline");
  return *baseline_;
}

template <typename T>
std::vector<std::int32_t> argmax_rows(const Tensor<T>& x) {
  std::vector<std::int32_t> out(x.rows());
  const std::size_t m = x.cols();
  for (std::size_t r = 0; r < x.rows(); ++r) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < m; ++c) {
      if (x[r * m + c] > x[r * m + best]) best = c;
    }
    out[r] = static_cast<std::int32_t>(best);
  }
  return out;
}

template class TextClassifier<float>;
template class TextClassifier<double>;
template std::vector<std::int32_t> argmax_rows(const Tensor<float>&);
template std::vector<std::int32_t> argmax_rows(const Tensor<double>&);

}  // namespace dolfin
