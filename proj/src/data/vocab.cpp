#include <stdexcept>

#include "dolfin/data.hpp"

namespace dolfin {

Vocab::Vocab() {
  add("<pad>");
  add("<unk>");
}

Vocab Vocab::build(const std::vector<const std::vector<Example>*>& corpora) {
  Vocab v;
  for (const auto* corpus : corpora) {
    for (const auto& ex : *corpus) {
      for (const auto& tok : ex.tokens) v.add(tok);
    }
  }
  return v;
}

std::int32_t Vocab::add(const std::string& word) {
  const auto [it, inserted] = index_.try_emplace(word, static_cast<std::int32_t>(words_.size()));
  if (inserted) words_.push_back(word);
  return it->second;
}

std::int32_t Vocab::index(const std::string& word) const {
  const auto it = index_.find(word);
  return it == index_.end() ? kUnk : it->second;
}

std::vector<std::int32_t> Vocab::encode(const std::vector<std::string>& tokens) const {
  std::vector<std::int32_t> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(index(t));
  return ids;
}

std::vector<std::string> Vocab::decode(const std::vector<std::int32_t>& ids) const {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (std::int32_t id : ids) out.push_back(word(id));
  return out;
}

std::uint64_t Vocab::hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  for (const auto& w : words_) {
    for (unsigned char c : w) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    h ^= '\n';
    h *= 1099511628211ULL;
  }
  return h;
}

Vocab build_vocab(const DatasetSplits& data) {
  return Vocab::build({&data.train, &data.dev, &data.test});
}

}  // namespace dolfin
