#include "doctest.h"

#include <string>
#include <vector>

#include "dolfin/data.hpp"
#include "dolfin/error.hpp"
#include "support/test_support.hpp"

using namespace dolfin;
using dolfin::testing::TempDir;
using Tokens = std::vector<std::string>;

namespace {

std::string repeat_lines(const std::string& line, std::size_t n) {
  std::string out;
  for (std::size_t i = 0; i < n; ++i) out += line + " " + std::to_string(i) + " ?\n";
  return out;
}

std::string error_of(auto&& fn) {
  try {
    fn();
  } catch (const DataError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("tokenizer splits punctuation and clitics") {
  CHECK(tokenize("") == Tokens{});
  CHECK(tokenize("   \t ") == Tokens{});
  CHECK(tokenize("wasn't") == Tokens{"was", "n't"});
  CHECK(tokenize("Who are they ?") == Tokens{"Who", "are", "they", "?"});
  CHECK(tokenize("(yes!)") == Tokens{"(", "yes", "!", ")"});
  CHECK(tokenize("John's.") == Tokens{"John", "'s", "."});
  CHECK(tokenize("we're, they've; I'll I'd I'm") ==
        Tokens{"we", "'re", ",", "they", "'ve", ";", "I", "'ll", "I", "'d", "I", "'m"});
  CHECK(tokenize("\"Quoted\"") == Tokens{"\"", "Quoted", "\""});
  CHECK(tokenize("U.S.") == Tokens{"U.S", "."});
  CHECK(tokenize("CAN'T") == Tokens{"CA", "N'T"});
}

TEST_CASE("tokenizer keeps every non-space character") {
  const std::string text = "It's (really) \"odd\", isn't it?! Yes: 3.5 `quotes'";
  std::string joined;
  for (const auto& t : tokenize(text)) {
    CHECK_FALSE(t.empty());
    joined += t;
  }
  std::string expected;
  for (char c : text) {
    if (c != ' ') expected += c;
  }
  CHECK(joined == expected);
}

TEST_CASE("csv parsing handles quoting") {
  CHECK(parse_csv_line(R"("3","Wall St.","Shares ""rose"", a lot")") ==
        Tokens{"3", "Wall St.", "Shares \"rose\", a lot"});
  CHECK(parse_csv_line("a,,b") == Tokens{"a", "", "b"});
  CHECK_THROWS_AS(parse_csv_line("\"open"), DataError);
}

TEST_CASE("trec loader") {
  TempDir dir;
  dir.write("trec/train_5500.label",
            "NUM:count How many people live in X ?\n" + repeat_lines("LOC:city Where is", 460));
  dir.write("trec/TREC_10.label", "HUM:ind Who wrote it ?\n\nDESC:def What is a bar ?\r\n");
  const DatasetSplits d = load_dataset("trec", dir.path());
  CHECK(d.categories.size() == 6);
  CHECK(d.train.size() == 461 - 452);
  CHECK(d.dev.size() == 452);
  REQUIRE(d.test.size() == 2);
  CHECK(d.categories[d.train[0].label] == "NUM");
  CHECK(d.train[0].tokens == Tokens{"How", "many", "people", "live", "in", "X", "?"});
  CHECK(d.categories[d.test[0].label] == "HUM");
  CHECK(d.test[1].tokens.back() == "?");
  CHECK(d.dev.back().raw == "Where is 459 ?");

  dir.write("trec/TREC_10.label", "HUM:ind Who ?\nnot a label line\n");
  const std::string msg = error_of([&] { load_trec(dir.path() / "trec"); });
  CHECK(msg.find("TREC_10.label:2:") != std::string::npos);
  dir.write("trec/TREC_10.label", "XYZ:foo bar\n");
  CHECK(error_of([&] { load_trec(dir.path() / "trec"); }).find("unknown category 'XYZ'") !=
        std::string::npos);
  CHECK_THROWS_AS(load_trec(dir.path() / "missing"), DataError);
}

TEST_CASE("sst2 loader") {
  TempDir dir;
  dir.write("sst2/train.tsv", "sentence\tlabel\ngreat film\t1\nawful\t0\n");
  dir.write("sst2/dev.tsv", "fine\t1\n");
  dir.write("sst2/test.tsv", "meh\t0\n");
  const DatasetSplits d = load_dataset("sst2", dir.path());
  CHECK(d.categories == Tokens{"NEGATIVE", "POSITIVE"});
  REQUIRE(d.train.size() == 2);
  CHECK(d.train[0].label == 1);
  CHECK(d.train[1].label == 0);
  dir.write("sst2/test.tsv", "meh\t0\nodd\t2\n");
  const std::string msg = error_of([&] { load_sst2(dir.path() / "sst2"); });
  CHECK(msg.find("test.tsv:2:") != std::string::npos);
  CHECK(msg.find("'2'") != std::string::npos);
}

TEST_CASE("agnews loader") {
  TempDir dir;
  std::string train;
  for (int i = 0; i < 10003; ++i) train += "\"" + std::to_string(i % 4 + 1) + "\",\"T\",\"d\"\n";
  dir.write("agnews/train.csv", train);
  dir.write("agnews/test.csv", "\"3\",\"Stocks\",\"Markets fell.\"\n");
  const DatasetSplits d = load_dataset("agnews", dir.path());
  CHECK(d.train.size() == 3);
  CHECK(d.dev.size() == 10000);
  REQUIRE(d.test.size() == 1);
  CHECK(d.categories[d.test[0].label] == "BUSINESS");
  CHECK(d.test[0].tokens == Tokens{"Stocks", "Markets", "fell", "."});
  dir.write("agnews/test.csv", "\"5\",\"a\",\"b\"\n");
  CHECK(error_of([&] { load_agnews(dir.path() / "agnews"); }).find("outside 1..4") !=
        std::string::npos);
  dir.write("agnews/test.csv", "\"1\",\"a\"\n");
  CHECK(error_of([&] { load_agnews(dir.path() / "agnews"); }).find("test.csv:1:") !=
        std::string::npos);
  CHECK_THROWS_AS(load_dataset("imdb", dir.path()), UsageError);
}

TEST_CASE("subsample is deterministic and sized") {
  DatasetSplits full;
  full.categories = {"A", "B"};
  for (int i = 0; i < 100; ++i) full.train.push_back({{"w" + std::to_string(i)}, i % 2, ""});
  full.test.push_back({{"t"}, 0, ""});
  const auto a = subsample(full, 50, 3);
  const auto b = subsample(full, 50, 3);
  CHECK(a.train.size() == 45);
  CHECK(a.dev.size() == 5);
  CHECK(a.test.size() == 1);
  for (std::size_t i = 0; i < a.train.size(); ++i) CHECK(a.train[i].tokens == b.train[i].tokens);
  const auto c = subsample(full, 50, 4);
  bool differs = false;
  for (std::size_t i = 0; i < a.train.size(); ++i) differs |= a.train[i].tokens != c.train[i].tokens;
  CHECK(differs);
  CHECK_THROWS_AS(subsample(full, 101, 1), UsageError);
}

TEST_CASE("vocab round trip") {
  std::vector<Example> train = {{{"a", "b", "a"}, 0, ""}, {{"c"}, 1, ""}};
  std::vector<Example> test = {{{"d", "b"}, 0, ""}};
  const Vocab v = Vocab::build({&train, &test});
  CHECK(v.size() == 6);
  CHECK(v.word(Vocab::kPad) == "<pad>");
  CHECK(v.word(Vocab::kUnk) == "<unk>");
  CHECK(v.index("a") == 2);
  CHECK(v.index("d") == 5);
  CHECK(v.index("zzz") == Vocab::kUnk);
  for (const auto* corpus : {&train, &test}) {
    for (const auto& ex : *corpus) CHECK(v.decode(v.encode(ex.tokens)) == ex.tokens);
  }
  CHECK(v.encode({"a", "nope"}) == std::vector<std::int32_t>{2, Vocab::kUnk});
  const Vocab again = Vocab::build({&train, &test});
  CHECK(again.hash() == v.hash());
  const Vocab reordered = Vocab::build({&test, &train});
  CHECK(reordered.hash() != v.hash());
}

TEST_CASE("glove subset loading") {
  TempDir dir;
  std::vector<Example> train = {{{"cat", "dog", "zebra"}, 0, ""}};
  const Vocab v = Vocab::build({&train});
  const auto file = dir.write("glove.txt",
                              "the 9 9 9\ncat 0.5 -1 2.25\ndog 1e-1 0 3\ncat 7 7 7\n");
  Rng rng(1);
  const EmbeddingMatrix m = load_glove_subset(file, v, 3, rng);
  CHECK(m.vectors.rows() == v.size());
  CHECK(m.vectors.cols() == 3);
  const auto cat = static_cast<std::size_t>(v.index("cat"));
  CHECK(m.vectors(cat, 0) == 0.5f);
  CHECK(m.vectors(cat, 1) == -1.0f);
  CHECK(m.vectors(cat, 2) == 2.25f);
  CHECK(m.vectors(static_cast<std::size_t>(v.index("dog")), 0) == 0.1f);
  for (std::size_t c = 0; c < 3; ++c) CHECK(m.vectors(0, c) == 0.0f);
  const auto zebra = static_cast<std::size_t>(v.index("zebra"));
  for (std::size_t c = 0; c < 3; ++c) {
    CHECK(m.vectors(zebra, c) >= -0.25f);
    CHECK(m.vectors(zebra, c) <= 0.25f);
  }
  CHECK(m.found == 2);
  CHECK(m.coverage(v.size()) == doctest::Approx(2.0 / 3.0));

  const auto bad = dir.write("bad.txt", "cat 1 2\n");
  const std::string msg = error_of([&] { load_glove_subset(bad, v, 3, rng); });
  CHECK(msg.find("'cat'") != std::string::npos);
  CHECK(msg.find("bad.txt:1:") != std::string::npos);

  Rng r1(5), r2(5);
  const auto a = load_glove_subset(file, v, 3, r1);
  const auto b = load_glove_subset(file, v, 3, r2);
  CHECK(std::equal(a.vectors.data().begin(), a.vectors.data().end(), b.vectors.data().begin()));
}

TEST_CASE("random embeddings keep a zero padding row") {
  std::vector<Example> train = {{{"x", "y"}, 0, ""}};
  const Vocab v = Vocab::build({&train});
  Rng rng(2);
  const auto m = random_embeddings(v, 4, rng);
  for (std::size_t c = 0; c < 4; ++c) CHECK(m.vectors(0, c) == 0.0f);
  CHECK(m.found == 0);
}
