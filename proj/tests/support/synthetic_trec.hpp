#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "dolfin/random.hpp"

namespace dolfin::testing {

/// Question-classification corpus in the TREC label-file format, generated
/// from per-category templates. Category shares follow the real training
/// set roughly; a small fraction of labels is flipped so the task is not
/// perfectly separable.
class SyntheticTrec {
 public:
  explicit SyntheticTrec(std::uint64_t seed) : rng_(seed) {}

  std::string line() {
    const double u = rng_.uniform();
    std::size_t cat = 0;
    double acc = 0.0;
    for (; cat + 1 < kShares.size(); ++cat) {
      acc += kShares[cat];
      if (u < acc) break;
    }
    std::string text = question(cat);
    if (rng_.bernoulli(0.03)) cat = rng_.below(kShares.size());
    return std::string(kLabels[cat]) + " " + text;
  }

  /// Writes trec/train_5500.label (5452 lines) and trec/TREC_10.label (500 lines).
  void write(const std::filesystem::path& root) {
    std::filesystem::create_directories(root / "trec");
    std::ofstream train(root / "trec" / "train_5500.label");
    for (int i = 0; i < 5452; ++i) train << line() << '\n';
    std::ofstream test(root / "trec" / "TREC_10.label");
    for (int i = 0; i < 500; ++i) test << line() << '\n';
  }

 private:
  static constexpr std::array<double, 6> kShares{0.016, 0.213, 0.229, 0.224, 0.154, 0.164};
  static constexpr std::array<const char*, 6> kLabels{"ABBR:exp", "DESC:def", "ENTY:other",
                                                      "HUM:ind",  "LOC:other", "NUM:count"};

  const std::string& pick(const std::vector<std::string>& pool) { return pool[rng_.below(pool.size())]; }

  std::string name() {
    static const std::vector<std::string> first{"John", "Mary", "Ada", "Pierre", "Akira", "Lena",
                                                "Omar", "Grace", "Ivan", "Sofia", "Kwame", "Rosa"};
    static const std::vector<std::string> last{"Smith", "Curie", "Lovelace", "Tanaka", "Okafor",
                                               "Novak", "Hopper", "Silva", "Berg", "Khan"};
    return pick(first) + " " + pick(last);
  }

  std::string noun() {
    static const std::vector<std::string> pool{
        "the Nile", "photosynthesis", "a quasar", "the euro", "jazz", "a volcano", "democracy",
        "the Internet", "chess", "a tsunami", "the Renaissance", "insulin", "a glacier",
        "the telescope", "baseball", "a comet", "the printing press", "a hurricane"};
    return pick(pool);
  }

  std::string place() {
    static const std::vector<std::string> pool{
        "Texas", "Peru", "Kenya", "Norway", "Tokyo", "Paris", "Cairo", "Sydney", "Quebec",
        "Bavaria", "Chile", "Lagos", "Ontario", "Mumbai", "Alaska", "Sicily"};
    return pick(pool);
  }

  std::string acronym() {
    std::string out;
    const std::size_t n = 2 + rng_.below(3);
    for (std::size_t i = 0; i < n; ++i) out += static_cast<char>('A' + rng_.below(26));
    return out;
  }

  std::string question(std::size_t cat) {
    static const std::vector<std::string> things{"animal", "color", "food", "sport", "instrument",
                                                 "plant", "drink", "language", "disease", "flower"};
    static const std::vector<std::string> roles{"president", "king", "author", "inventor",
                                                "founder", "mayor", "captain", "director"};
    static const std::vector<std::string> units{"people", "miles", "years", "feet", "islands",
                                                "states", "calories", "species", "dollars"};
    switch (cat) {
      case 0:
        switch (rng_.below(3)) {
          case 0: return "What does " + acronym() + " stand for ?";
          case 1: return "What is the abbreviation for " + noun() + " ?";
          default: return "What is the full form of " + acronym() + " ?";
        }
      case 1:
        switch (rng_.below(4)) {
          case 0: return "What is " + noun() + " ?";
          case 1: return "How does " + noun() + " work ?";
          case 2: return "Why is " + noun() + " important to " + place() + " ?";
          default: return "What does " + name() + " mean by " + noun() + " ?";
        }
      case 2:
        switch (rng_.below(3)) {
          case 0: return "What " + pick(things) + " is found in " + place() + " ?";
          case 1: return "What kind of " + pick(things) + " did " + name() + " like ?";
          default: return "Name a " + pick(things) + " from " + place() + " .";
        }
      case 3:
        switch (rng_.below(3)) {
          case 0: return "Who was the first " + pick(roles) + " of " + place() + " ?";
          case 1: return "Who invented " + noun() + " ?";
          default: return "Which " + pick(roles) + " married " + name() + " ?";
        }
      case 4:
        switch (rng_.below(3)) {
          case 0: return "Where is " + noun() + " located ?";
          case 1: return "What city in " + place() + " did " + name() + " visit ?";
          default: return "Where did " + name() + " live ?";
        }
      default:
        switch (rng_.below(4)) {
          case 0: return "How many " + pick(units) + " are in " + place() + " ?";
          case 1: return "When did " + name() + " discover " + noun() + " ?";
          case 2: return "How far is " + place() + " from " + place() + " ?";
          default: return "What year was " + noun() + " first seen in " + place() + " ?";
        }
    }
  }

  Rng rng_;
};

}  // namespace dolfin::testing
