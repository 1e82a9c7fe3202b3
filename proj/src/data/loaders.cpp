#include <algorithm>
#include <fstream>
#include <numeric>
#include <string>

#include "dolfin/data.hpp"
#include "dolfin/error.hpp"

namespace dolfin {
namespace {

namespace fs = std::filesystem;

const std::vector<std::string> kTrecCategories = {"ABBR", "DESC", "ENTY", "HUM", "LOC", "NUM"};
const std::vector<std::string> kSstCategories = {"NEGATIVE", "POSITIVE"};
const std::vector<std::string> kAgCategories = {"WORLD", "SPORTS", "BUSINESS", "SCI-TECH"};

constexpr std::size_t kTrecDev = 452;
constexpr std::size_t kAgDev = 10000;

std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

std::string location(const fs::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line) + ": ";
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

bool blank(const std::string& line) {
  return std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); });
}

Example make_example(std::string raw, std::int32_t label, const fs::path& path, std::size_t line) {
  Example ex{tokenize(raw), label, std::move(raw)};
  if (ex.tokens.empty()) throw DataError(location(path, line) + "empty text");
  return ex;
}

std::vector<Example> read_trec_file(const fs::path& path) {
  auto in = open_input(path);
  std::vector<Example> out;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    strip_cr(line);
    if (blank(line)) continue;
    const std::size_t space = line.find_first_of(" \t");
    const std::size_t colon = line.find(':');
    if (space == std::string::npos || colon == std::string::npos || colon > space) {
      throw DataError(location(path, n) + "expected 'COARSE:fine question'");
    }
    const std::string coarse = line.substr(0, colon);
    const auto it = std::find(kTrecCategories.begin(), kTrecCategories.end(), coarse);
    if (it == kTrecCategories.end()) {
      throw DataError(location(path, n) + "unknown category '" + coarse + "'");
    }
    out.push_back(make_example(line.substr(space + 1),
                               static_cast<std::int32_t>(it - kTrecCategories.begin()), path, n));
  }
  return out;
}

std::vector<Example> read_sst_file(const fs::path& path) {
  auto in = open_input(path);
  std::vector<Example> out;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    strip_cr(line);
    if (blank(line)) continue;
    if (n == 1 && line == "sentence\tlabel") continue;
    const std::size_t tab = line.rfind('\t');
    if (tab == std::string::npos) throw DataError(location(path, n) + "expected 'sentence<TAB>label'");
    const std::string label = line.substr(tab + 1);
    if (label != "0" && label != "1") {
      throw DataError(location(path, n) + "unknown label '" + label + "'");
    }
    out.push_back(make_example(line.substr(0, tab), label == "1" ? 1 : 0, path, n));
  }
  return out;
}

std::vector<Example> read_ag_file(const fs::path& path) {
  auto in = open_input(path);
  std::vector<Example> out;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    strip_cr(line);
    if (blank(line)) continue;
    const auto fields = parse_csv_line(line);
    if (fields.size() != 3) {
      throw DataError(location(path, n) + "expected 3 CSV fields, found " +
                      std::to_string(fields.size()));
    }
    const std::string& cls = fields[0];
    if (cls.size() != 1 || cls[0] < '1' || cls[0] > '4') {
      throw DataError(location(path, n) + "class '" + cls + "' outside 1..4");
    }
    out.push_back(make_example(fields[1] + " " + fields[2], cls[0] - '1', path, n));
  }
  return out;
}

std::vector<Example> take_suffix(std::vector<Example>& from, std::size_t count,
                                 const fs::path& path) {
  if (from.size() <= count) {
    throw DataError(path.string() + ": " + std::to_string(from.size()) +
                    " training rows cannot donate a dev split of " + std::to_string(count));
  }
  std::vector<Example> suffix(std::make_move_iterator(from.end() - static_cast<std::ptrdiff_t>(count)),
                              std::make_move_iterator(from.end()));
  from.resize(from.size() - count);
  return suffix;
}

}  // namespace

std::vector<std::string> parse_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"' && !field_started) {
      quoted = true;
      field_started = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
      field_started = false;
    } else {
      field += c;
      field_started = true;
    }
  }
  if (quoted) throw DataError("unterminated quoted CSV field");
  fields.push_back(std::move(field));
  return fields;
}

DatasetSplits load_trec(const fs::path& dir) {
  DatasetSplits d;
  d.name = "trec";
  d.categories = kTrecCategories;
  d.train = read_trec_file(dir / "train_5500.label");
  d.dev = take_suffix(d.train, kTrecDev, dir / "train_5500.label");
  d.test = read_trec_file(dir / "TREC_10.label");
  return d;
}

DatasetSplits load_sst2(const fs::path& dir) {
  DatasetSplits d;
  d.name = "sst2";
  d.categories = kSstCategories;
  d.train = read_sst_file(dir / "train.tsv");
  d.dev = read_sst_file(dir / "dev.tsv");
  d.test = read_sst_file(dir / "test.tsv");
  return d;
}

DatasetSplits load_agnews(const fs::path& dir) {
  DatasetSplits d;
  d.name = "agnews";
  d.categories = kAgCategories;
  d.train = read_ag_file(dir / "train.csv");
  d.dev = take_suffix(d.train, kAgDev, dir / "train.csv");
  d.test = read_ag_file(dir / "test.csv");
  return d;
}

DatasetSplits load_dataset(std::string_view name, const fs::path& root) {
  if (name == "trec") return load_trec(root / "trec");
  if (name == "sst2") return load_sst2(root / "sst2");
  if (name == "agnews") return load_agnews(root / "agnews");
  throw UsageError("unknown dataset '" + std::string(name) + "' (expected trec, sst2 or agnews)");
}

DatasetSplits subsample(const DatasetSplits& full, std::size_t size, std::uint64_t seed) {
  if (size < 10 || size > full.train.size()) {
    throw UsageError("subsample: size " + std::to_string(size) + " outside [10, " +
                     std::to_string(full.train.size()) + "]");
  }
  std::vector<std::size_t> order(full.train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));
  DatasetSplits out;
  out.name = full.name;
  out.categories = full.categories;
  out.test = full.test;
  const std::size_t dev = size / 10;
  for (std::size_t i = 0; i < size; ++i) {
    (i < size - dev ? out.train : out.dev).push_back(full.train[order[i]]);
  }
  return out;
}

double average_length(const std::vector<Example>& examples) {
  if (examples.empty()) return 0.0;
  std::size_t total = 0;
  for (const auto& ex : examples) total += ex.tokens.size();
  return static_cast<double>(total) / static_cast<double>(examples.size());
}

}  // namespace dolfin
