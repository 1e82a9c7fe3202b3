#include <charconv>
#include <fstream>
#include <string>
#include <vector>

#include "dolfin/data.hpp"
#include "dolfin/error.hpp"

namespace dolfin {
namespace {

std::vector<std::string_view> split_spaces(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && line[i] == ' ') ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

bool parse_float(std::string_view s, float& out) {
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

double EmbeddingMatrix::coverage(std::size_t vocab_size) const {
  return vocab_size <= 2 ? 0.0 : static_cast<double>(found) / static_cast<double>(vocab_size - 2);
}

EmbeddingMatrix random_embeddings(const Vocab& vocab, std::size_t dim, Rng& rng) {
  EmbeddingMatrix m{Tensor<float>::zeros(Shape{vocab.size(), dim}), true, 0};
  for (std::size_t i = dim; i < m.vectors.numel(); ++i) {
    m.vectors[i] = static_cast<float>(rng.uniform(-0.25, 0.25));
  }
  return m;
}

EmbeddingMatrix load_glove_subset(const std::filesystem::path& path, const Vocab& vocab,
                                  std::size_t dim, Rng& rng) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  EmbeddingMatrix m = random_embeddings(vocab, dim, rng);
  std::vector<bool> seen(vocab.size(), false);
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_spaces(line);
    float probe = 0.0f;
    // A few tokens in the large crawls contain spaces; the vector is always
    // the last `dim` fields.
    if (fields.size() < dim + 1 ||
        (fields.size() > dim + 1 && parse_float(fields[fields.size() - dim - 1], probe))) {
      throw DataError(path.string() + ":" + std::to_string(n) + ": vector for '" +
                      std::string(fields.empty() ? std::string_view() : fields[0]) + "' has " +
                      std::to_string(fields.empty() ? 0 : fields.size() - 1) +
                      " values, expected " + std::to_string(dim));
    }
    const std::size_t first_value = fields.size() - dim;
    std::string word(fields[0]);
    for (std::size_t i = 1; i < first_value; ++i) {
      word += ' ';
      word += fields[i];
    }
    if (!vocab.contains(word)) continue;
    const auto id = static_cast<std::size_t>(vocab.index(word));
    if (id == static_cast<std::size_t>(Vocab::kPad) || id == static_cast<std::size_t>(Vocab::kUnk) ||
        seen[id]) {
      continue;
    }
    for (std::size_t c = 0; c < dim; ++c) {
      if (!parse_float(fields[first_value + c], m.vectors[id * dim + c])) {
        throw DataError(path.string() + ":" + std::to_string(n) + ": bad number in vector for '" +
                        word + "'");
      }
    }
    seen[id] = true;
    ++m.found;
  }
  return m;
}

}  // namespace dolfin
