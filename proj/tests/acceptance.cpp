// Acceptance run: one [PASS] / [FAIL] / [BLOCKED] line per criterion.
//
// Exit status: 0 when nothing failed and nothing was blocked, 1 on any
// failure, 77 when the only shortfall is a blocked criterion (missing data).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <regex>
#include <set>
#include <sstream>

#include <unistd.h>

#include "CLI11.hpp"
#include "dolfin/checkpoint.hpp"
#include "dolfin/cli.hpp"
#include "dolfin/interpret.hpp"
#include "support/synthetic_trec.hpp"

using namespace dolfin;
namespace fs = std::filesystem;

namespace {

enum class Status { pass, fail, blocked };

struct Outcome {
  Status status = Status::fail;
  std::string detail;
};

Outcome verdict(bool ok, std::string detail) { return {ok ? Status::pass : Status::fail, std::move(detail)}; }

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, pattern, a, b, c, d);
  return buf;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

struct Context {
  fs::path data_dir;  // real datasets, may be empty
  fs::path glove;     // may be empty
  fs::path work;
  bool real_trec = false;
  std::ostringstream log;
};

bool has_files(const fs::path& dir, std::initializer_list<const char*> names) {
  return std::all_of(names.begin(), names.end(), [&](const char* n) { return fs::exists(dir / n); });
}

/// Hyperparameters of the reported experiments: 300-d embeddings, filter
/// widths 3/4/5 with 100 maps each, text vector of 100, dropout 0.5, Adam at
/// 0.001, minibatches of 50, early stopping after 10 epochs.
RunConfig reported_setup(const std::string& dataset, const std::string& model) {
  RunConfig cfg;
  cfg.command = "train";
  cfg.dataset = dataset;
  cfg.model = model;
  cfg.embedding_dim = 300;
  cfg.filters_per_size = 100;
  cfg.lstm_hidden = 100;
  cfg.text_dim = 100;
  cfg.train = TrainConfig{};
  return cfg;
}

// ---------------------------------------------------------------------------

Outcome gradient_correctness(Context&) {
  const auto start = std::chrono::steady_clock::now();
  RunConfig cfg;
  std::ostringstream sink;
  const GradCheckReport report = cmd_gradcheck(cfg, sink);
  const double elapsed = seconds_since(start);
  std::set<std::string> names;
  double worst = 0.0;
  for (const auto& row : report.rows) {
    names.insert(row.name);
    worst = std::max(worst, row.result.max_rel_error);
  }
  const bool unique = names.size() == report.rows.size();
  const bool archs = names.count("model:dolfin-conv") && names.count("model:dolfin-bilstm");
  return verdict(report.passed && unique && archs && report.seeds == 5 && elapsed < 120.0,
                 std::to_string(report.rows.size()) + " cases x 5 seeds at f64, worst relative error " +
                     fmt("%.2e, %.1f s", worst, elapsed));
}

Outcome trec_accuracy(Context& ctx) {
  if (ctx.data_dir.empty() || !has_files(ctx.data_dir / "trec", {"train_5500.label", "TREC_10.label"})) {
    return {Status::blocked, "TREC label files not found under $DOLFIN_DATA_DIR/trec"};
  }
  if (ctx.glove.empty() || !fs::exists(ctx.glove)) {
    return {Status::blocked, "300-d GloVe vectors not found ($DOLFIN_GLOVE)"};
  }
  std::map<std::string, RunSummary> got;
  for (const std::string model : {"dolfin-conv", "cnn"}) {
    RunConfig cfg = reported_setup("trec", model);
    cfg.latent = 20;
    cfg.runs = 5;
    cfg.data_dir = ctx.data_dir;
    cfg.glove = ctx.glove;
    cfg.report_dir = ctx.work / "trec-accuracy";
    got[model] = cmd_train(cfg, ctx.log).test_summary;
  }
  const auto& d = got["dolfin-conv"];
  const auto& c = got["cnn"];
  return verdict(d.mean >= 0.890 && c.mean >= 0.895,
                 fmt("dolfin-conv %.2f +- %.2f (need >= 89.0), cnn %.2f +- %.2f (need >= 89.5)", 100 * d.mean,
                     100 * d.stddev, 100 * c.mean, 100 * c.stddev));
}

Outcome agnews_subsample(Context& ctx) {
  if (ctx.data_dir.empty() || !has_files(ctx.data_dir / "agnews", {"train.csv", "test.csv"})) {
    return {Status::blocked, "AG-news CSV files not found under $DOLFIN_DATA_DIR/agnews"};
  }
  if (ctx.glove.empty() || !fs::exists(ctx.glove)) {
    return {Status::blocked, "300-d GloVe vectors not found ($DOLFIN_GLOVE)"};
  }
  std::map<std::string, double> acc;
  for (const std::string model : {"dolfin-conv", "cnn"}) {
    RunConfig cfg = reported_setup("agnews", model);
    cfg.subsample = 10000;
    cfg.subsample_seed = 1;
    cfg.data_dir = ctx.data_dir;
    cfg.glove = ctx.glove;
    cfg.report_dir = ctx.work / "agnews-subsample";
    acc[model] = cmd_train(cfg, ctx.log).runs.front().test_accuracy;
  }
  const double d = acc["dolfin-conv"], c = acc["cnn"];
  return verdict(d >= 0.85 && d >= c - 0.015,
                 fmt("10k subsample: dolfin-conv %.2f (need >= 85.0), cnn %.2f, gap %.2f points", 100 * d, 100 * c,
                     100 * (c - d)));
}

// Criteria 4, 5 and 7 share one trained DoLFIn-conv model on TREC-format data.
struct TrecModel {
  fs::path data_dir;
  fs::path checkpoint;
  std::string source;
};

const TrecModel& trec_model(Context& ctx) {
  static std::optional<TrecModel> cached;
  if (cached) return *cached;
  TrecModel m;
  RunConfig cfg = reported_setup("trec", "dolfin-conv");
  if (ctx.real_trec) {
    m.data_dir = ctx.data_dir;
    m.source = "TREC";
    if (!ctx.glove.empty() && fs::exists(ctx.glove)) cfg.glove = ctx.glove;
  } else {
    m.data_dir = ctx.work / "synthetic";
    testing::SyntheticTrec(2024).write(m.data_dir);
    m.source = "synthetic TREC-format corpus (real TREC files absent)";
    cfg.train.max_epochs = 5;
  }
  cfg.latent = 20;
  cfg.data_dir = m.data_dir;
  cfg.report_dir = ctx.work / "trec-model";
  m.checkpoint = cmd_train(cfg, ctx.log).runs.front().checkpoint;
  cached = m;
  return *cached;
}

struct LoadedTrec {
  TextClassifier<double> model;
  DatasetSplits data;
  Vocab vocab;
};

LoadedTrec load_trec_model(Context& ctx) {
  const TrecModel& tm = trec_model(ctx);
  DatasetSplits data = load_dataset("trec", tm.data_dir);
  Vocab vocab = build_vocab(data);
  return {load_checkpoint<double>(tm.checkpoint), std::move(data), std::move(vocab)};
}

Outcome interpretation_normalization(Context& ctx) {
  const LoadedTrec t = load_trec_model(ctx);
  const EncodedCorpus dev = encode_corpus(t.data.dev, t.vocab);
  const FeatureSupportTable table = estimate_feature_support(t.model, dev.texts, t.data.categories, 0.5);

  std::size_t words = 0, bad_words = 0, bad_bags = 0, bad_columns = 0;
  double worst = 0.0;
  for (std::size_t i = 0; i < dev.size(); ++i) {
    const WordSupport ws = word_support(t.model, table, dev.texts[i], t.data.dev[i].tokens);
    for (const auto& row : ws.support) {
      double sum = 0.0;
      for (double v : row) sum += v;
      worst = std::max(worst, std::abs(sum - 1.0));
      bad_words += std::abs(sum - 1.0) > 1e-6;
      ++words;
    }
  }
  for (const auto& obs : observe_bags(t.model, dev.texts)) {
    for (double r : obs.bag) bad_bags += !(r >= 0.0 && r <= 1.0);
  }
  const std::size_t m = table.categories.size();
  for (std::size_t j = 0; j < table.latent; ++j) {
    double sum = 0.0;
    bool uniform = true;
    for (std::size_t c = 0; c < m; ++c) {
      sum += table.q[c][j];
      uniform &= std::abs(table.q[c][j] - 1.0 / static_cast<double>(m)) < 1e-12;
    }
    const bool ok = table.unused[j] ? uniform : std::abs(sum - 1.0) <= 1e-9;
    bad_columns += !ok;
  }
  const std::size_t unused = static_cast<std::size_t>(std::count(table.unused.begin(), table.unused.end(), true));
  return verdict(bad_words == 0 && bad_bags == 0 && bad_columns == 0 && words > 0,
                 trec_model(ctx).source + ": " + std::to_string(dev.size()) + " dev texts, " +
                     std::to_string(words) + " words, worst |sum q - 1| " + fmt("%.1e", worst) + ", " +
                     std::to_string(unused) + " of " + std::to_string(table.latent) +
                     " columns flagged uniform");
}

Outcome estimator_oracle(Context& ctx) {
  const LoadedTrec t = load_trec_model(ctx);
  const EncodedCorpus dev = encode_corpus(t.data.dev, t.vocab);
  const std::size_t n = std::min<std::size_t>(200, dev.size());
  const std::vector<std::vector<std::int32_t>> texts(dev.texts.begin(), dev.texts.begin() + n);
  const double delta = 0.5;
  const FeatureSupportTable table = estimate_feature_support(t.model, texts, t.data.categories, delta);

  // Recount one text at a time through the raw forward pass.
  const std::size_t m = t.data.categories.size(), d = t.model.config().latent_features;
  std::vector<std::vector<std::uint64_t>> counts(m, std::vector<std::uint64_t>(d, 0));
  for (const auto& ids : texts) {
    Batch one;
    one.add(ids);
    Tape<double> tape;
    const ForwardPass<double> pass = t.model.forward(tape, one);
    const auto logits = pass.logits.data();
    std::size_t best = 0;
    for (std::size_t c = 1; c < m; ++c) {
      if (logits[c] > logits[best]) best = c;
    }
    const auto bag = pass.bag.data();
    for (std::size_t j = 0; j < d; ++j) {
      if (bag[j] > delta) ++counts[best][j];
    }
  }
  std::size_t total = 0, differing = 0;
  for (std::size_t c = 0; c < m; ++c) {
    for (std::size_t j = 0; j < d; ++j) {
      total += counts[c][j];
      differing += counts[c][j] != table.counts[c][j];
    }
  }
  return verdict(differing == 0, std::to_string(n) + " dev texts, " + std::to_string(total) +
                                     " firings, " + std::to_string(differing) + " differing cells");
}

Outcome mixture_oracle(Context&) {
  Rng rng(31);
  std::size_t instances = 0;
  double worst = 0.0;
  for (; instances < 300; ++instances) {
    const std::size_t d = 1 + rng.below(5), m = 2 + rng.below(3), n = 1 + rng.below(6);
    ModelConfig mc;
    mc.architecture = rng.bernoulli(0.5) ? Architecture::dolfin_conv : Architecture::dolfin_bilstm;
    mc.vocab_size = 15;
    mc.embedding_dim = 4;
    mc.encoder.kind = encoder_kind(mc.architecture);
    mc.encoder.filters_per_size = 2;
    mc.encoder.lstm_hidden = 3;
    mc.latent_features = d;
    mc.text_dim = 5;
    mc.categories = m;
    const TextClassifier<double> model(mc, rng);

    std::vector<std::vector<std::uint64_t>> counts(m, std::vector<std::uint64_t>(d));
    for (auto& row : counts) {
      for (auto& v : row) v = rng.bernoulli(0.3) ? 0 : rng.below(20);
    }
    std::vector<std::string> cats, words;
    for (std::size_t c = 0; c < m; ++c) cats.push_back("c" + std::to_string(c));
    std::vector<std::int32_t> ids;
    for (std::size_t i = 0; i < n; ++i) {
      ids.push_back(static_cast<std::int32_t>(2 + rng.below(13)));
      words.push_back("w" + std::to_string(ids.back()));
    }
    const FeatureSupportTable table = FeatureSupportTable::from_counts(counts, cats, 0.5);
    const WordSupport ws = word_support(model, table, ids, words);

    Batch batch;
    batch.add(ids);
    Tape<double> tape;
    const auto u = model.forward(tape, batch).latent.u;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < m; ++c) {
        double q = 0.0;
        for (std::size_t j = 0; j < d; ++j) q += table.q[c][j] * u.data()[i * d + j];
        worst = std::max(worst, std::abs(q - ws.support[i][c]));
      }
    }
  }
  return verdict(worst <= 1e-12, std::to_string(instances) + " random instances (d <= 5, m <= 4, n <= 6), " +
                                     "largest deviation " + fmt("%.1e", worst));
}

Outcome qualitative_report(Context& ctx) {
  const TrecModel& tm = trec_model(ctx);
  const fs::path out_dir = ctx.work / "report";
  std::ostringstream out, err;
  const int code = run_cli({"interpret", "--checkpoint", tm.checkpoint.string(), "--data-dir", tm.data_dir.string(),
                            "--report-dir", out_dir.string(), "--split", "dev", "--index", "0", "--format", "html"},
                           out, err);
  if (code != 0) return {Status::fail, "interpret exited " + std::to_string(code) + ": " + err.str()};
  const std::string html = slurp(out_dir / "interpret-dev-0.html");
  const auto table = FeatureSupportTable::from_json(nlohmann::json::parse(slurp(out_dir / "feature_support.json")));

  // Highlight rows: one per category, each word's weight a probability.
  const std::regex row_re("<div class=\"highlight-row\"><span class=\"label\"[^>]*>([^<]*)</span>(.*?)</div>");
  const std::regex word_re("<span class=\"word\" title=\"([0-9.]+)\"");
  std::vector<std::string> labels;
  std::vector<std::vector<double>> weights;
  for (auto it = std::sregex_iterator(html.begin(), html.end(), row_re); it != std::sregex_iterator(); ++it) {
    labels.push_back((*it)[1]);
    const std::string body = (*it)[2];
    weights.emplace_back();
    for (auto w = std::sregex_iterator(body.begin(), body.end(), word_re); w != std::sregex_iterator(); ++w) {
      weights.back().push_back(std::stod((*w)[1]));
    }
  }
  const std::regex pred_re("predicted: <b>([A-Z]+)</b>");
  std::smatch pred;
  const bool has_pred = std::regex_search(html, pred, pred_re);
  const bool predicted_row = has_pred && std::find(labels.begin(), labels.end(), pred[1].str()) != labels.end();
  bool probabilities = !weights.empty();
  for (std::size_t i = 0; probabilities && i < weights.front().size(); ++i) {
    double sum = 0.0;
    for (const auto& row : weights) {
      probabilities &= row.size() == weights.front().size() && row[i] >= 0.0 && row[i] <= 1.0;
      sum += row[i];
    }
    probabilities &= std::abs(sum - 1.0) <= 5e-4 * static_cast<double>(weights.size());
  }

  // q(c|f) heatmap: the first heatmap table after its heading.
  const std::size_t at = html.find("<h2>q(c|f)</h2>");
  const std::size_t end = html.find("</table>", at);
  std::size_t rows = 0, cols = 0;
  if (at != std::string::npos && end != std::string::npos) {
    const std::string grid = html.substr(at, end - at);
    std::size_t pos = 0;
    while ((pos = grid.find("<tr>", pos)) != std::string::npos) ++rows, ++pos;
    const std::string header = grid.substr(0, grid.find("</tr>"));
    pos = 0;
    while ((pos = header.find("<th>", pos)) != std::string::npos) ++cols, ++pos;
    rows -= 1;  // header row
    cols -= 1;  // corner cell
  }
  const bool shape = rows == 6 && cols == 20 && table.q.size() == 6 && table.q.front().size() == 20;
  return verdict(labels.size() == 6 && predicted_row && probabilities && shape,
                 tm.source + ": " + std::to_string(labels.size()) + " highlight rows, predicted " +
                     (has_pred ? pred[1].str() : "?") + (predicted_row ? " present" : " missing") + ", weights " +
                     (probabilities ? "valid" : "invalid") + ", q(c|f) heatmap " + std::to_string(rows) + " x " +
                     std::to_string(cols));
}

Outcome determinism(Context& ctx) {
  const fs::path data = ctx.work / "determinism-data";
  testing::SyntheticTrec(5).write(data);
  std::string metrics[2], checkpoints[2];
  for (int k = 0; k < 2; ++k) {
    RunConfig cfg = reported_setup("trec", "dolfin-conv");
    cfg.data_dir = data;
    cfg.report_dir = ctx.work / ("determinism-" + std::to_string(k));
    cfg.subsample = 1500;
    cfg.embedding_dim = 50;
    cfg.filters_per_size = 20;
    cfg.train.max_epochs = 4;
    cfg.seed = 11;
    const TrainRun run = cmd_train(cfg, ctx.log).runs.front();
    metrics[k] = slurp(run.metrics);
    checkpoints[k] = slurp(run.checkpoint);
  }
  return verdict(!metrics[0].empty() && metrics[0] == metrics[1],
                 "metrics files " + std::string(metrics[0] == metrics[1] ? "byte-identical" : "differ") + " (" +
                     std::to_string(metrics[0].size()) + " bytes), checkpoints " +
                     (checkpoints[0] == checkpoints[1] ? "byte-identical" : "differ"));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria, one line each", "acceptance"};
  Context ctx;
  std::vector<int> only;
  std::string work;
  app.add_option("--data-dir", ctx.data_dir, "Dataset root with trec/ and agnews/")->envname("DOLFIN_DATA_DIR");
  app.add_option("--glove", ctx.glove, "300-d GloVe text file")->envname("DOLFIN_GLOVE");
  app.add_option("--only", only, "Criterion numbers to run (default all)")->delimiter(',');
  app.add_option("--work-dir", work, "Scratch directory (default: a fresh temporary directory)");
  CLI11_PARSE(app, argc, argv);

  ctx.work = work.empty() ? fs::temp_directory_path() / ("dolfin-acceptance-" + std::to_string(::getpid())) : fs::path(work);
  fs::create_directories(ctx.work);
  ctx.real_trec = !ctx.data_dir.empty() && has_files(ctx.data_dir / "trec", {"train_5500.label", "TREC_10.label"});

  const std::vector<std::pair<std::string, Outcome (*)(Context&)>> criteria{
      {"gradient correctness", gradient_correctness},
      {"TREC accuracy", trec_accuracy},
      {"AG-news subsample accuracy", agnews_subsample},
      {"interpretation normalization", interpretation_normalization},
      {"estimator recount oracle", estimator_oracle},
      {"word support mixture oracle", mixture_oracle},
      {"qualitative report", qualitative_report},
      {"determinism", determinism},
  };

  bool failed = false, blocked = false;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int number = static_cast<int>(i + 1);
    if (!only.empty() && std::find(only.begin(), only.end(), number) == only.end()) continue;
    Outcome o;
    try {
      o = criteria[i].second(ctx);
    } catch (const std::exception& e) {
      o = {Status::fail, std::string("error: ") + e.what()};
    }
    const char* tag = o.status == Status::pass ? "[PASS]" : o.status == Status::fail ? "[FAIL]" : "[BLOCKED]";
    std::cout << tag << ' ' << number << ' ' << criteria[i].first << ": " << o.detail << std::endl;
    failed |= o.status == Status::fail;
    blocked |= o.status == Status::blocked;
  }
  if (work.empty()) {
    std::error_code ec;
    fs::remove_all(ctx.work, ec);
  }
  return failed ? 1 : blocked ? 77 : 0;
}
