#pragma once

#include <functional>
#include <vector>

#include "dolfin/tape.hpp"
#include "dolfin/tensor.hpp"

namespace dolfin {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  /// Coordinates whose perturbation flipped a relu/clamp/max-pool branch.
  std::size_t skipped = 0;
  /// Location and values of the coordinate with the largest relative error.
  std::size_t worst_input = 0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;

  void merge(const GradCheckResult& other);
};

/// Builds a scalar loss on the given tape. Called repeatedly at perturbed
/// inputs, so it must be deterministic (reseed any dropout rng inside).
using LossFn = std::function<Tensor<double>(Tape<double>&)>;

/// Gradients smaller than this are compared on an absolute scale. Central
/// differences of an O(1) loss carry roundoff near 1e-11, so tinier
/// gradients cannot be resolved relatively.
inline constexpr double kGradientFloor = 1e-6;

/// |analytic - numeric| / max(kGradientFloor, |analytic| + |numeric|)
double relative_error(double analytic, double numeric);

/// Compares reverse-mode gradients against central differences for every
/// coordinate of every tensor in `inputs`. A coordinate is skipped when either
/// perturbed evaluation takes a different branch than the unperturbed one.
GradCheckResult finite_diff_check(const LossFn& loss, std::vector<Tensor<double>> inputs,
                                  double eps = 1e-5);

inline GradCheckResult finite_diff_check(const LossFn& loss, Tensor<double> input,
                                         double eps = 1e-5) {
  return finite_diff_check(loss, std::vector<Tensor<double>>{std::move(input)}, eps);
}

}  // namespace dolfin
