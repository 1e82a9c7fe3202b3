#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "dolfin/ops.hpp"
#include "dolfin/parameters.hpp"
#include "dolfin/random.hpp"
#include "dolfin/tensor.hpp"

namespace dolfin::testing {

inline Tensor<double> random_tensor(Shape shape, std::uint64_t seed, double lo = -1.0,
                                    double hi = 1.0, bool requires_grad = true) {
  Rng rng(seed);
  Tensor<double> t = Tensor<double>::zeros(std::move(shape), requires_grad);
  for (double& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

/// Scalar probe sum_i w_i y_i with fixed random weights, so every output
/// coordinate contributes a distinct gradient.
inline Tensor<double> probe(Tape<double>& tape, const Tensor<double>& y, std::uint64_t seed = 99) {
  Tensor<double> weights = random_tensor(y.shape(), seed, -1.0, 1.0, false);
  return sum_all(tape, mul(tape, y, weights));
}

inline std::vector<double> values(const Tensor<double>& t) {
  return {t.data().begin(), t.data().end()};
}

/// Redraws every parameter uniformly in [-bound, bound]. Default LSTM
/// initialization leaves some gradients near 1e-9, where central differences
/// are dominated by roundoff.
inline void randomize(const ParameterList<double>& params, std::uint64_t seed, double bound = 0.5) {
  Rng rng(seed);
  for (const auto& p : params) {
    Tensor<double> t = p.tensor;
    for (double& v : t.data()) v = rng.uniform(-bound, bound);
  }
}

/// Scratch directory removed on scope exit.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("dolfin-test-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path write(const std::string& name, const std::string& content) const {
    const auto file = path_ / name;
    std::filesystem::create_directories(file.parent_path());
    std::ofstream(file, std::ios::binary) << content;
    return file;
  }

 private:
  std::filesystem::path path_;
};

constexpr int kGradSeeds = 5;
constexpr double kGradTolerance = 1e-4;
constexpr double kGradEps = 1e-5;

}  // namespace dolfin::testing
