#include <algorithm>
#include <array>
#include <cctype>
#include <deque>
#include <string>

#include "dolfin/data.hpp"

namespace dolfin {
namespace {

constexpr std::string_view kPunctuation = ".,!?;:\"'()`";
constexpr std::array<std::string_view, 7> kClitics = {"n't", "'s", "'re", "'ve", "'ll", "'d", "'m"};

bool is_punct(char c) { return kPunctuation.find(c) != std::string_view::npos; }

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool is_clitic(std::string_view s) {
  const std::string l = lower(s);
  return std::find(kClitics.begin(), kClitics.end(), l) != kClitics.end();
}

void split_chunk(std::string_view chunk, std::vector<std::string>& out) {
  std::size_t lo = 0;
  std::size_t hi = chunk.size();
  // Trailing marks first, so "'s." keeps its clitic.
  std::deque<std::string> trailing;
  while (lo < hi && is_punct(chunk[hi - 1]) && !is_clitic(chunk.substr(lo, hi - lo))) {
    trailing.emplace_front(1, chunk[hi - 1]);
    --hi;
  }
  while (lo < hi && is_punct(chunk[lo]) && !is_clitic(chunk.substr(lo, hi - lo))) {
    out.emplace_back(1, chunk[lo]);
    ++lo;
  }
  std::string_view core = chunk.substr(lo, hi - lo);
  if (!core.empty()) {
    const std::string l = lower(core);
    std::size_t cut = core.size();
    for (std::string_view clitic : kClitics) {
      if (l.size() > clitic.size() && l.ends_with(clitic)) {
        cut = core.size() - clitic.size();
        break;
      }
    }
    out.emplace_back(core.substr(0, cut));
    if (cut < core.size()) out.emplace_back(core.substr(cut));
  }
  for (auto& t : trailing) out.push_back(std::move(t));
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) split_chunk(text.substr(i, j - i), out);
    i = j;
  }
  return out;
}

}  // namespace dolfin
