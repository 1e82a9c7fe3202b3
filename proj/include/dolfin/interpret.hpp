#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dolfin/model.hpp"
#include "json.hpp"

namespace dolfin {

using Matrix = std::vector<std::vector<double>>;

/// Category support of every latent feature, estimated from which features
/// fire (r_j > delta) on texts the model assigns to each category.
struct FeatureSupportTable {
  std::vector<std::string> categories;
  std::size_t latent = 0;
  double delta = 0.5;
  std::vector<std::vector<std::uint64_t>> counts;  // [categories x latent]
  Matrix q;                                        // [categories x latent], columns sum to 1
  std::vector<bool> unused;  // feature never fired: its column is uniform 1/m

  /// Column-normalizes counts; zero columns become uniform and are flagged unused.
  static FeatureSupportTable from_counts(std::vector<std::vector<std::uint64_t>> counts,
                                         std::vector<std::string> categories, double delta);

  nlohmann::json to_json() const;
  static FeatureSupportTable from_json(const nlohmann::json& j);
};

/// Predicted category and bag vector r of one text.
struct BagObservation {
  std::int32_t predicted = 0;
  std::vector<double> bag;
};

/// Counts for every observation each feature with r_j > delta under the
/// predicted category.
FeatureSupportTable tally_feature_support(std::span<const BagObservation> observations,
                                          std::vector<std::string> categories, std::size_t latent,
                                          double delta);

/// Evaluation-mode predictions and bags of a DoLFIn model over `texts`.
template <typename T>
std::vector<BagObservation> observe_bags(const TextClassifier<T>& model,
                                         const std::vector<std::vector<std::int32_t>>& texts,
                                         std::size_t batch = 50);

template <typename T>
FeatureSupportTable estimate_feature_support(const TextClassifier<T>& model,
                                             const std::vector<std::vector<std::int32_t>>& texts,
                                             std::vector<std::string> categories,
                                             double delta = 0.5);

/// Per-word category support q(c | w_i, s) = sum_j q(c | f_j) p(f_j | w_i, s).
struct WordSupport {
  std::vector<std::string> words;
  Matrix feature_probs;   // p(f | w_i, s): [words x latent]
  Matrix support;         // q(c | w_i, s): [words x categories]
  std::vector<std::size_t> top_feature;  // argmax_j p(f_j | w_i, s), lowest index on ties
  std::int32_t predicted = 0;
  std::vector<double> class_probs;
};

/// Mixes the rows of `feature_probs` with the table's columns.
WordSupport mix_support(const FeatureSupportTable& table, std::vector<std::string> words,
                        Matrix feature_probs);

template <typename T>
WordSupport word_support(const TextClassifier<T>& model, const FeatureSupportTable& table,
                         std::span<const std::int32_t> ids, std::vector<std::string> words);

enum class ReportFormat { ansi, html };

ReportFormat parse_report_format(std::string_view name);

/// One row: the category label followed by every word, highlighted with
/// intensity linear in q(category | w, s).
std::string render_highlight(const WordSupport& ws, std::size_t category,
                             const std::vector<std::string>& categories, ReportFormat format);

/// One highlight row per category.
std::string render_highlight_rows(const WordSupport& ws, const std::vector<std::string>& categories,
                                  ReportFormat format);

/// Grid with one shaded cell per entry, annotated with round(100 v).
/// Entries must be finite and within [0, 1].
std::string render_heatmap(const Matrix& values, const std::vector<std::string>& row_labels,
                           const std::vector<std::string>& col_labels, ReportFormat format);

/// Words followed by the index of their most probable latent feature.
std::string render_feature_subscripts(const WordSupport& ws, ReportFormat format);

/// Full interpretation report for one text: highlight rows, q(c|f) heatmap,
/// p(f|w,s) heatmap and feature subscripts. HTML output is a standalone page.
std::string render_report(const WordSupport& ws, const FeatureSupportTable& table,
                          ReportFormat format);

std::string html_escape(std::string_view text);

}  // namespace dolfin
