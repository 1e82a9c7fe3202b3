#include <fstream>
#include <sstream>

#include "doctest.h"
#include "dolfin/checkpoint.hpp"
#include "dolfin/cli.hpp"
#include "dolfin/error.hpp"
#include "dolfin/ops.hpp"
#include "json.hpp"
#include "support/synthetic_trec.hpp"
#include "support/test_support.hpp"

using namespace dolfin;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

/// Synthetic TREC-format data shared by every case in this file.
const fs::path& data_root() {
  static testing::TempDir dir;
  static bool written = false;
  if (!written) {
    testing::SyntheticTrec(7).write(dir.path());
    written = true;
  }
  return dir.path();
}

std::vector<std::string> small_run(const fs::path& report_dir, const std::string& model = "dolfin-conv") {
  return {"train",          "--dataset",    "trec",         "--model",      model,
          "--data-dir",     data_root().string(), "--report-dir", report_dir.string(), "--subsample",
          "600",            "--emb-dim",    "16",           "--filters-per-size", "6",
          "--lstm-hidden",  "6",            "--text-dim",   "12",           "--max-epochs",
          "3",              "--batch",      "25",           "--lr",         "0.01"};
}

int run(const std::vector<std::string>& args, std::string* out_text = nullptr, std::string* err_text = nullptr,
        const std::vector<GradCheckCase>& extra = {}) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err, extra);
  if (out_text) *out_text = out.str();
  if (err_text) *err_text = err.str();
  return code;
}

}  // namespace

TEST_CASE("latent feature defaults per dataset") {
  CHECK(default_latent_features("trec") == 20);
  CHECK(default_latent_features("sst2") == 10);
  CHECK(default_latent_features("agnews") == 100);
  CHECK_THROWS_AS(default_latent_features("imdb"), UsageError);
}

TEST_CASE("usage and data failures map to exit codes") {
  std::string err;
  CHECK(run({}, nullptr, &err) == 1);
  CHECK(run({"train", "--dataset", "imdb"}, nullptr, &err) == 1);
  CHECK(run({"train", "--dataset", "trec", "--data-dir", ""}, nullptr, &err) == 1);
  testing::TempDir empty;
  CHECK(run({"train", "--dataset", "trec", "--data-dir", empty.path().string()}, nullptr, &err) == 2);
  CHECK(err.find("train_5500.label") != std::string::npos);
  CHECK(run({"eval", "--checkpoint", (empty.path() / "none.ckpt").string(), "--data-dir",
             data_root().string()},
            nullptr, &err) == 2);
  CHECK(run({"--help"}) == 0);
}

TEST_CASE("train writes checkpoint and metrics; identical runs give identical bytes") {
  testing::TempDir a, b;
  std::string log;
  REQUIRE(run(small_run(a.path()), &log) == 0);
  REQUIRE(run(small_run(b.path())) == 0);
  const fs::path metrics_a = a.path() / "trec-dolfin-conv-seed1.metrics.json";
  const fs::path metrics_b = b.path() / "trec-dolfin-conv-seed1.metrics.json";
  REQUIRE(fs::exists(metrics_a));
  CHECK(fs::exists(a.path() / "trec-dolfin-conv-seed1.ckpt"));
  CHECK(slurp(metrics_a) == slurp(metrics_b));
  CHECK(log.find("epoch 1 train_loss") != std::string::npos);

  const auto m = nlohmann::json::parse(slurp(metrics_a));
  CHECK(m.at("dataset") == "trec");
  CHECK(m.at("model_config").at("latent_features") == 20);
  CHECK(m.at("test_accuracy").get<double>() >= 0.0);
  CHECK(m.at("test_accuracy").get<double>() <= 1.0);
  CHECK(m.at("history").size() == 3);

  auto other_seed = small_run(b.path());
  other_seed.insert(other_seed.end(), {"--seed", "2"});
  REQUIRE(run(other_seed) == 0);
  CHECK(slurp(b.path() / "trec-dolfin-conv-seed2.metrics.json") != slurp(metrics_a));
}

TEST_CASE("eval reproduces the reported test accuracy and rejects mismatches") {
  testing::TempDir dir;
  REQUIRE(run(small_run(dir.path(), "cnn")) == 0);
  const auto metrics = nlohmann::json::parse(slurp(dir.path() / "trec-cnn-seed1.metrics.json"));
  const fs::path ckpt = dir.path() / "trec-cnn-seed1.ckpt";

  RunConfig cfg;
  cfg.command = "eval";
  cfg.checkpoint = ckpt;
  cfg.data_dir = data_root();
  const EvalOutcome ev = cmd_eval(cfg);
  CHECK(ev.split == "test");
  CHECK(ev.total == 500);
  CHECK(ev.accuracy == metrics.at("test_accuracy").get<double>());
  cfg.split = "dev";
  CHECK(cmd_eval(cfg).accuracy == metrics.at("dev_accuracy").get<double>());

  std::string err;
  CHECK(run({"eval", "--checkpoint", ckpt.string(), "--data-dir", data_root().string(), "--dataset", "agnews"},
            nullptr, &err) == 2);
  CHECK(err.find("mismatch") != std::string::npos);
  CHECK(run({"eval", "--checkpoint", ckpt.string(), "--data-dir", data_root().string(), "--model", "bilstm"},
            nullptr, &err) == 2);
  CHECK(err.find("mismatch") != std::string::npos);

  testing::TempDir other;
  testing::SyntheticTrec(99).write(other.path());
  CHECK(run({"eval", "--checkpoint", ckpt.string(), "--data-dir", other.path().string()}, nullptr, &err) == 2);
  CHECK(err.find("vocabulary") != std::string::npos);

  std::string bytes = slurp(ckpt);
  bytes[bytes.size() - 3] ^= 0x40;
  const fs::path broken = dir.write("broken.ckpt", bytes);
  CHECK(run({"eval", "--checkpoint", broken.string(), "--data-dir", data_root().string()}, nullptr, &err) != 0);
  const fs::path cut = dir.write("cut.ckpt", bytes.substr(0, bytes.size() / 2));
  CHECK(run({"eval", "--checkpoint", cut.string(), "--data-dir", data_root().string()}, nullptr, &err) != 0);
}

TEST_CASE("interpret writes a reproducible report and honours delta") {
  testing::TempDir dir;
  REQUIRE(run(small_run(dir.path())) == 0);
  const std::string ckpt = (dir.path() / "trec-dolfin-conv-seed1.ckpt").string();
  auto interpret = [&](const fs::path& out, const std::string& delta) {
    return run({"interpret", "--checkpoint", ckpt, "--data-dir", data_root().string(), "--report-dir",
                out.string(), "--split", "dev", "--index", "3", "--delta", delta});
  };
  const fs::path r1 = dir.path() / "r1", r2 = dir.path() / "r2", r3 = dir.path() / "r3";
  REQUIRE(interpret(r1, "0.5") == 0);
  REQUIRE(interpret(r2, "0.5") == 0);
  REQUIRE(interpret(r3, "0.9") == 0);
  const std::string report = slurp(r1 / "interpret-dev-3.html");
  CHECK(!report.empty());
  CHECK(report == slurp(r2 / "interpret-dev-3.html"));
  CHECK(report.find("<!DOCTYPE html>") == 0);
  for (const char* cat : {"ABBR", "DESC", "ENTY", "HUM", "LOC", "NUM"}) CHECK(report.find(cat) != std::string::npos);

  const auto low = nlohmann::json::parse(slurp(r1 / "feature_support.json"));
  const auto high = nlohmann::json::parse(slurp(r3 / "feature_support.json"));
  CHECK(low.at("delta") == 0.5);
  CHECK(high.at("delta") == 0.9);
  const auto& cl = low.at("counts");
  const auto& ch = high.at("counts");
  REQUIRE(cl.size() == 6);
  for (std::size_t c = 0; c < cl.size(); ++c) {
    REQUIRE(cl[c].size() == 20);
    for (std::size_t j = 0; j < cl[c].size(); ++j) CHECK(ch[c][j].get<double>() <= cl[c][j].get<double>());
  }

  std::string out;
  CHECK(run({"interpret", "--checkpoint", ckpt, "--data-dir", data_root().string(), "--report-dir",
             (dir.path() / "r4").string(), "--text", "Who wrote Hamlet ?", "--format", "ansi"},
            &out) == 0);
  CHECK(fs::exists(dir.path() / "r4" / "interpret-text.txt"));
  std::string err;
  CHECK(run({"interpret", "--checkpoint", ckpt, "--data-dir", data_root().string(), "--text", "   "}, nullptr,
            &err) == 1);
  CHECK(err.find("empty") != std::string::npos);

  testing::TempDir base;
  REQUIRE(run(small_run(base.path(), "cnn")) == 0);
  CHECK(run({"interpret", "--checkpoint", (base.path() / "trec-cnn-seed1.ckpt").string(), "--data-dir",
             data_root().string(), "--report-dir", base.path().string()}) == 1);
}

TEST_CASE("config file supplies defaults that flags override") {
  testing::TempDir dir;
  const fs::path conf = dir.write("run.conf",
                                  "dataset = trec\nmodel = cnn\nemb-dim = 16\nfilters-per-size = 4\n"
                                  "max-epochs = 2\nsubsample = 300\nseed = 5\n");
  REQUIRE(run({"train", "--config", conf.string(), "--data-dir", data_root().string(), "--report-dir",
               dir.path().string(), "--seed", "6"}) == 0);
  const fs::path metrics = dir.path() / "trec-cnn-seed6.metrics.json";
  REQUIRE(fs::exists(metrics));
  const auto m = nlohmann::json::parse(slurp(metrics));
  CHECK(m.at("model_config").at("embedding_dim") == 16);
  CHECK(m.at("history").size() == 2);
}

TEST_CASE("several runs produce a mean and standard deviation") {
  testing::TempDir dir;
  auto args = small_run(dir.path(), "cnn");
  args.insert(args.end(), {"--runs", "2", "--max-epochs", "1"});
  REQUIRE(run(args) == 0);
  const auto summary = nlohmann::json::parse(slurp(dir.path() / "trec-cnn.summary.json"));
  REQUIRE(summary.at("runs").size() == 2);
  const double a = summary["runs"][0]["test_accuracy"], b = summary["runs"][1]["test_accuracy"];
  CHECK(summary.at("test_accuracy_mean").get<double>() == doctest::Approx((a + b) / 2));
  CHECK(summary.at("test_accuracy_std").get<double>() == doctest::Approx(std::abs(a - b) / 2));
}

TEST_CASE("gradcheck command passes and flags a broken backward") {
  std::string out;
  CHECK(run({"gradcheck"}, &out) == 0);
  CHECK(out.find("model:dolfin-conv") != std::string::npos);
  CHECK(out.find("model:dolfin-bilstm") != std::string::npos);

  const GradCheckCase broken{"broken_exp", [](std::uint64_t seed) {
                               Rng rng(seed);
                               Tensor<double> x = Tensor<double>::zeros({2, 3}, true);
                               for (double& v : x.data()) v = rng.uniform(-1.0, 1.0);
                               return finite_diff_check(
                                   [&](Tape<double>& tape) {
                                     return sum_all(tape, elementwise<double>(
                                                              tape, x, [](double v) { return std::exp(v); },
                                                              [](double v) { return std::exp(v) + 0.1; }));
                                   },
                                   x);
                             }};
  CHECK(run({"gradcheck"}, &out, nullptr, {broken}) == 3);
  CHECK(out.find("broken_exp") != std::string::npos);
  CHECK(out.find("FAIL") != std::string::npos);
}

TEST_CASE("glove vectors seed the embedding table") {
  testing::TempDir dir;
  std::string glove;
  for (const char* w : {"What", "Who", "city", "is", "the"}) {
    glove += w;
    for (int k = 0; k < 16; ++k) glove += " 0.125";
    glove += '\n';
  }
  const fs::path vectors = dir.write("vectors.txt", glove);
  auto args = small_run(dir.path(), "cnn");
  args.insert(args.end(), {"--glove", vectors.string(), "--max-epochs", "1"});
  std::string log;
  REQUIRE(run(args, &log) == 0);
  const auto m = nlohmann::json::parse(slurp(dir.path() / "trec-cnn-seed1.metrics.json"));
  CHECK(m.at("embeddings") == "glove");
  CHECK(m.at("glove_coverage").get<double>() > 0.0);
  CHECK(log.find("glove coverage") != std::string::npos);

  auto wrong_dim = small_run(dir.path(), "cnn");
  wrong_dim.insert(wrong_dim.end(), {"--glove", vectors.string(), "--emb-dim", "8"});
  CHECK(run(wrong_dim) == 2);
}
