#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dolfin/random.hpp"
#include "dolfin/tensor.hpp"

namespace dolfin {

struct Example {
  std::vector<std::string> tokens;
  std::int32_t label = 0;
  std::string raw;
};

struct DatasetSplits {
  std::string name;
  std::vector<std::string> categories;
  std::vector<Example> train;
  std::vector<Example> dev;
  std::vector<Example> test;
};

/// Splits on whitespace, then peels the punctuation marks . , ! ? ; : " ' ( ) `
/// off both ends of every chunk (one token per mark) and separates the clitics
/// n't 's 're 've 'll 'd 'm from the word they end. Case is preserved.
///   "wasn't" -> was n't     "(yes!)" -> ( yes ! )     "Who 's" -> Who 's
std::vector<std::string> tokenize(std::string_view text);

/// TREC question classification: `train_5500.label` and `TREC_10.label`
/// under `dir`, one `COARSE:fine question` per line. The last 452 training
/// questions form the dev split.
DatasetSplits load_trec(const std::filesystem::path& dir);

/// Binary SST: `train.tsv`, `dev.tsv`, `test.tsv` under `dir`, one
/// `sentence<TAB>label` per line with label 0 (negative) or 1 (positive).
/// A leading `sentence<TAB>label` header line is skipped.
DatasetSplits load_sst2(const std::filesystem::path& dir);

/// AG news: `train.csv`, `test.csv` under `dir` with rows
/// "class","title","description", class 1..4 (World, Sports, Business,
/// Sci/Tech). Title and description are joined. The last 10000 training rows
/// form the dev split.
DatasetSplits load_agnews(const std::filesystem::path& dir);

/// Loads by name: trec, sst2 or agnews.
DatasetSplits load_dataset(std::string_view name, const std::filesystem::path& root);

/// Deterministic reduced copy: `size` training rows drawn by a seeded shuffle,
/// the last tenth of them held out as dev; the test split is kept whole.
DatasetSplits subsample(const DatasetSplits& full, std::size_t size, std::uint64_t seed);

/// Parses one CSV record (RFC 4180 quoting, "" as an escaped quote).
std::vector<std::string> parse_csv_line(std::string_view line);

double average_length(const std::vector<Example>& examples);

/// Word index. Index 0 is padding, 1 unknown; the rest follow first
/// occurrence order.
class Vocab {
 public:
  static constexpr std::int32_t kPad = 0;
  static constexpr std::int32_t kUnk = 1;

  Vocab();
  static Vocab build(const std::vector<const std::vector<Example>*>& corpora);

  std::int32_t add(const std::string& word);
  std::int32_t index(const std::string& word) const;
  bool contains(const std::string& word) const { return index_.count(word) != 0; }
  const std::string& word(std::int32_t id) const { return words_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return words_.size(); }
  const std::vector<std::string>& words() const { return words_; }

  std::vector<std::int32_t> encode(const std::vector<std::string>& tokens) const;
  std::vector<std::string> decode(const std::vector<std::int32_t>& ids) const;

  /// FNV-1a over the words in index order; identifies the vocabulary in
  /// checkpoint headers.
  std::uint64_t hash() const;

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, std::int32_t> index_;
};

/// Vocabulary over every split, in train, dev, test order.
Vocab build_vocab(const DatasetSplits& data);

struct EmbeddingMatrix {
  Tensor<float> vectors;  // [vocab x dim]
  bool trainable = true;
  std::size_t found = 0;  // vocabulary words (excluding pad/unk) present in the file

  double coverage(std::size_t vocab_size) const;
};

/// Reads `word v1 ... v_dim` lines and copies the vectors of vocabulary
/// words. Other rows are uniform in [-0.25, 0.25]; the padding row is zero.
EmbeddingMatrix load_glove_subset(const std::filesystem::path& path, const Vocab& vocab,
                                  std::size_t dim, Rng& rng);

/// Every row uniform in [-0.25, 0.25] except the zero padding row.
EmbeddingMatrix random_embeddings(const Vocab& vocab, std::size_t dim, Rng& rng);

}  // namespace dolfin
