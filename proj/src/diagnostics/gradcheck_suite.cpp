#include "dolfin/gradcheck_suite.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include "dolfin/model.hpp"

namespace dolfin {
namespace {

using T = double;

Tensor<T> draw(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor<T> t = Tensor<T>::zeros(std::move(shape), true);
  for (T& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

/// Weighted sum of every output coordinate with fixed random weights.
Tensor<T> probe(Tape<T>& tape, const Tensor<T>& y, std::uint64_t seed) {
  Rng rng(seed ^ 0x5bd1e995ULL);
  Tensor<T> w = Tensor<T>::zeros(y.shape());
  for (T& v : w.data()) v = rng.uniform(-1.0, 1.0);
  return sum_all(tape, mul(tape, y, w));
}

GradCheckCase unary(std::string name, Shape shape,
                    std::function<Tensor<T>(Tape<T>&, const Tensor<T>&)> op, double lo = -1.0,
                    double hi = 1.0) {
  return {name, [=](std::uint64_t seed) {
            Rng rng(seed);
            const Tensor<T> x = draw(shape, rng, lo, hi);
            return finite_diff_check([&](Tape<T>& tape) { return probe(tape, op(tape, x), seed); }, x);
          }};
}

GradCheckCase binary(std::string name, Shape a_shape, Shape b_shape,
                     std::function<Tensor<T>(Tape<T>&, const Tensor<T>&, const Tensor<T>&)> op) {
  return {name, [=](std::uint64_t seed) {
            Rng rng(seed);
            const Tensor<T> a = draw(a_shape, rng);
            const Tensor<T> b = draw(b_shape, rng);
            return finite_diff_check([&](Tape<T>& tape) { return probe(tape, op(tape, a, b), seed); },
                                     {a, b});
          }};
}

FilterBank<T> draw_filters(std::vector<std::size_t> widths, std::size_t dim, std::size_t channels,
                           Rng& rng) {
  FilterBank<T> bank;
  bank.widths = std::move(widths);
  for (std::size_t w : bank.widths) {
    bank.weights.push_back(draw({w * dim, channels}, rng));
    bank.biases.push_back(draw({channels}, rng));
  }
  return bank;
}

std::vector<Tensor<T>> bank_tensors(const FilterBank<T>& bank) {
  std::vector<Tensor<T>> out;
  for (std::size_t i = 0; i < bank.widths.size(); ++i) {
    out.push_back(bank.weights[i]);
    out.push_back(bank.biases[i]);
  }
  return out;
}

EncodedSequence<T> draw_sequence(std::vector<std::size_t> lengths, std::size_t width, Rng& rng) {
  EncodedSequence<T> seq;
  seq.segments = Segments::from_lengths(lengths);
  seq.vectors = draw({seq.segments.total(), width}, rng);
  return seq;
}

BolfParams<T> draw_head(std::size_t encoder_dim, Rng& rng) {
  BolfParams<T> head;
  head.lsl_weight = draw({encoder_dim, 5}, rng);
  head.lsl_bias = draw({5}, rng);
  head.feature_table = draw({5, 4}, rng);
  head.classifier_weight = draw({4, 3}, rng);
  head.classifier_bias = draw({3}, rng);
  return head;
}

GradCheckCase classifier_case(Architecture arch) {
  return {"model:" + to_string(arch), [arch](std::uint64_t seed) {
            ModelConfig cfg;
            cfg.architecture = arch;
            cfg.vocab_size = 10;
            cfg.embedding_dim = 4;
            cfg.encoder.kind = encoder_kind(arch);
            cfg.encoder.filters_per_size = 2;
            cfg.encoder.lstm_hidden = 3;
            cfg.latent_features = 5;
            cfg.text_dim = 6;
            cfg.categories = 3;
            Rng rng(seed);
            const TextClassifier<T> model(cfg, rng);
            std::vector<Tensor<T>> inputs;
            for (const auto& p : model.parameters()) {
              Tensor<T> t = p.tensor;
              for (T& v : t.data()) v = rng.uniform(-0.5, 0.5);
              inputs.push_back(t);
            }
            Batch batch;
            batch.add(std::vector<std::int32_t>{2, 3, 4}, 0);
            batch.add(std::vector<std::int32_t>{7}, 2);
            batch.add(std::vector<std::int32_t>{5, 9, 2, 6, 1}, 1);
            return finite_diff_check(
                [&](Tape<T>& tape) {
                  Rng drop(seed + 17);
                  return cross_entropy(tape, model.forward(tape, batch, &drop).logits, batch.labels);
                },
                inputs);
          }};
}

}  // namespace

std::vector<GradCheckCase> standard_gradcheck_cases() {
  std::vector<GradCheckCase> cases;
  cases.push_back(binary("matmul", {3, 4}, {4, 2},
                         [](Tape<T>& t, const Tensor<T>& a, const Tensor<T>& b) { return matmul(t, a, b); }));
  cases.push_back(binary("add", {3, 4}, {3, 4},
                         [](Tape<T>& t, const Tensor<T>& a, const Tensor<T>& b) { return add(t, a, b); }));
  cases.push_back(binary("mul", {3, 4}, {3, 4},
                         [](Tape<T>& t, const Tensor<T>& a, const Tensor<T>& b) { return mul(t, a, b); }));
  cases.push_back(binary("add_row_bias", {3, 4}, {4}, [](Tape<T>& t, const Tensor<T>& a, const Tensor<T>& b) {
    return add_row_bias(t, a, b);
  }));
  cases.push_back(unary("scale", {3, 4}, [](Tape<T>& t, const Tensor<T>& x) { return scale(t, x, -1.7); }));
  cases.push_back(unary("sum_all", {3, 4}, [](Tape<T>& t, const Tensor<T>& x) {
    return scale(t, sum_all(t, x), 0.3);
  }));
  cases.push_back(unary("sum_rows", {6, 3}, [](Tape<T>& t, const Tensor<T>& x) {
    return sum_rows(t, x, Segments::from_lengths(std::vector<std::size_t>{2, 1, 3}));
  }));
  cases.push_back(binary("concat_cols", {3, 2}, {3, 4}, [](Tape<T>& t, const Tensor<T>& a, const Tensor<T>& b) {
    return concat_cols(t, {a, b});
  }));
  cases.push_back(binary("concat_rows", {2, 3}, {4, 3}, [](Tape<T>& t, const Tensor<T>& a, const Tensor<T>& b) {
    return concat_rows(t, {a, b});
  }));
  cases.push_back(unary("slice_rows", {5, 3}, [](Tape<T>& t, const Tensor<T>& x) { return slice_rows(t, x, 1, 3); }));
  cases.push_back(unary("slice_cols", {3, 5}, [](Tape<T>& t, const Tensor<T>& x) { return slice_cols(t, x, 2, 2); }));
  cases.push_back(unary("embedding_lookup", {6, 3}, [](Tape<T>& t, const Tensor<T>& table) {
    const std::vector<std::int32_t> ids{4, 1, 4, 0, 5};
    return embedding_lookup(t, table, ids);
  }));
  cases.push_back(unary("softmax_rows", {3, 5}, [](Tape<T>& t, const Tensor<T>& x) { return softmax_rows(t, x); }, -3, 3));
  cases.push_back(unary("relu", {4, 5}, [](Tape<T>& t, const Tensor<T>& x) { return relu(t, x); }));
  cases.push_back(unary("clamp_max_one", {4, 5}, [](Tape<T>& t, const Tensor<T>& x) { return clamp_max_one(t, x); }, 0.0, 2.0));
  cases.push_back(unary("elementwise", {3, 4}, [](Tape<T>& t, const Tensor<T>& x) {
    return elementwise<T>(t, x, [](T v) { return std::tanh(v); },
                          [](T v) { return 1.0 - std::tanh(v) * std::tanh(v); });
  }));
  cases.push_back({"dropout", [](std::uint64_t seed) {
                     Rng rng(seed);
                     const Tensor<T> x = draw({4, 5}, rng);
                     return finite_diff_check(
                         [&](Tape<T>& tape) {
                           Rng mask(seed + 3);
                           return probe(tape, dropout(tape, x, 0.5, &mask), seed);
                         },
                         x);
                   }});
  cases.push_back({"cross_entropy", [](std::uint64_t seed) {
                     Rng rng(seed);
                     const Tensor<T> logits = draw({4, 3}, rng, -2, 2);
                     const std::vector<std::int32_t> gold{0, 2, 1, 2};
                     return finite_diff_check([&](Tape<T>& tape) { return cross_entropy(tape, logits, gold); },
                                              logits);
                   }});
  cases.push_back({"conv1d_temporal", [](std::uint64_t seed) {
                     Rng rng(seed);
                     const Tensor<T> x = draw({7, 3}, rng);
                     const FilterBank<T> bank = draw_filters({3, 4, 5}, 3, 2, rng);
                     std::vector<Tensor<T>> inputs = bank_tensors(bank);
                     inputs.insert(inputs.begin(), x);
                     const Segments seg = Segments::from_lengths(std::vector<std::size_t>{2, 5});
                     return finite_diff_check(
                         [&](Tape<T>& tape) { return probe(tape, conv1d_temporal(tape, x, seg, bank), seed); },
                         inputs);
                   }});
  cases.push_back(unary("maxpool_over_time", {7, 4}, [](Tape<T>& t, const Tensor<T>& x) {
    return maxpool_over_time(t, x, Segments::from_lengths(std::vector<std::size_t>{3, 1, 3}));
  }));
  cases.push_back({"lstm_cell", [](std::uint64_t seed) {
                     Rng rng(seed);
                     const std::size_t h = 3;
                     const Tensor<T> gates = draw({2, 4 * h}, rng);
                     const Tensor<T> hp = draw({2, h}, rng);
                     const Tensor<T> cp = draw({2, h}, rng);
                     const Tensor<T> w = draw({h, 4 * h}, rng);
                     const Tensor<T> b = draw({4 * h}, rng);
                     return finite_diff_check(
                         [&](Tape<T>& tape) {
                           const auto s = lstm_cell(tape, gates, hp, cp, w, b);
                           return add(tape, probe(tape, s.h, seed), probe(tape, s.c, seed + 1));
                         },
                         {gates, hp, cp, w, b});
                   }});
  cases.push_back({"latent_distributions", [](std::uint64_t seed) {
                     Rng rng(seed);
                     const BolfParams<T> head = draw_head(4, rng);
                     const EncodedSequence<T> seq = draw_sequence({3, 2}, 4, rng);
                     return finite_diff_check(
                         [&](Tape<T>& tape) { return probe(tape, latent_distributions(tape, seq, head).u, seed); },
                         {seq.vectors, head.lsl_weight, head.lsl_bias});
                   }});
  cases.push_back({"truncated_sum", [](std::uint64_t seed) {
                     Rng rng(seed);
                     LatentDistribution<T> dist;
                     dist.segments = Segments::from_lengths(std::vector<std::size_t>{4, 2});
                     dist.u = draw({6, 3}, rng, 0.0, 0.45);
                     return finite_diff_check(
                         [&](Tape<T>& tape) { return probe(tape, truncated_sum(tape, dist), seed); }, dist.u);
                   }});
  cases.push_back({"compose_text_vector", [](std::uint64_t seed) {
                     Rng rng(seed);
                     const BolfParams<T> head = draw_head(4, rng);
                     const Tensor<T> bag = draw({2, head.latent()}, rng, 0.0, 1.0);
                     return finite_diff_check(
                         [&](Tape<T>& tape) { return probe(tape, compose_text_vector(tape, bag, head), seed); },
                         {bag, head.feature_table});
                   }});
  cases.push_back({"classify", [](std::uint64_t seed) {
                     Rng rng(seed);
                     const BolfParams<T> head = draw_head(4, rng);
                     const Tensor<T> s = draw({2, head.text_dim()}, rng);
                     return finite_diff_check(
                         [&](Tape<T>& tape) { return probe(tape, classify(tape, s, head), seed); },
                         {s, head.classifier_weight, head.classifier_bias});
                   }});
  cases.push_back({"bilstm_endpoints", [](std::uint64_t seed) {
                     Rng rng(seed);
                     EncodedSequence<T> seq = draw_sequence({3, 1, 2}, 6, rng);
                     seq.kind = EncoderKind::bilstm;
                     seq.hidden = 3;
                     return finite_diff_check(
                         [&](Tape<T>& tape) { return probe(tape, bilstm_endpoints(tape, seq), seed); },
                         seq.vectors);
                   }});
  for (auto arch : {Architecture::cnn, Architecture::bilstm, Architecture::dolfin_conv,
                    Architecture::dolfin_bilstm}) {
    cases.push_back(classifier_case(arch));
  }
  return cases;
}

GradCheckReport run_gradcheck_suite(const std::vector<GradCheckCase>& cases, std::size_t seeds,
                                    std::uint64_t base_seed, double tolerance) {
  GradCheckReport report;
  report.tolerance = tolerance;
  report.seeds = seeds;
  for (const auto& c : cases) {
    GradCheckRow row;
    row.name = c.name;
    for (std::size_t s = 0; s < seeds; ++s) row.result.merge(c.run(base_seed + s));
    row.passed = row.result.checked > 0 && row.result.max_rel_error < tolerance;
    report.passed &= row.passed;
    report.rows.push_back(std::move(row));
  }
  return report;
}

void print_gradcheck_report(std::ostream& out, const GradCheckReport& report) {
  for (const auto& row : report.rows) {
    char line[160];
    std::snprintf(line, sizeof line, "%-22s max_rel_error %.3e  checked %zu  skipped %zu  %s",
                  row.name.c_str(), row.result.max_rel_error, row.result.checked, row.result.skipped,
                  row.passed ? "PASS" : "FAIL");
    out << line << '\n';
  }
  char summary[120];
  std::snprintf(summary, sizeof summary, "%zu cases, %zu seeds, tolerance %.0e: %s", report.rows.size(),
                report.seeds, report.tolerance, report.passed ? "PASS" : "FAIL");
  out << summary << '\n';
}

}  // namespace dolfin
