#include "dolfin/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace dolfin {

void GradCheckResult::merge(const GradCheckResult& other) {
  if (other.max_rel_error > max_rel_error) {
    max_rel_error = other.max_rel_error;
    worst_input = other.worst_input;
    worst_index = other.worst_index;
    worst_analytic = other.worst_analytic;
    worst_numeric = other.worst_numeric;
  }
  checked += other.checked;
  skipped += other.skipped;
}

double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max(kGradientFloor, std::abs(analytic) + std::abs(numeric));
}

GradCheckResult finite_diff_check(const LossFn& loss, std::vector<Tensor<double>> inputs,
                                  double eps) {
  for (auto& x : inputs) {
    x.set_requires_grad(true);
    x.ensure_grad();
    x.zero_grad();
  }
  std::uint64_t base_digest = 0;
  {
    Tape<double> tape;
    tape.set_branch_tracing(true);
    Tensor<double> value = loss(tape);
    tape.backward(value);
    base_digest = tape.branch_digest();
  }

  auto evaluate = [&](std::uint64_t& digest) {
    Tape<double> tape(false);
    tape.set_branch_tracing(true);
    const double value = loss(tape).item();
    digest = tape.branch_digest();
    return value;
  };

  GradCheckResult result;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    Tensor<double>& x = inputs[k];
    const std::vector<double> analytic(x.grad().begin(), x.grad().end());
    for (std::size_t i = 0; i < x.numel(); ++i) {
      const double saved = x[i];
      std::uint64_t up_digest = 0;
      std::uint64_t down_digest = 0;
      x[i] = saved + eps;
      const double up = evaluate(up_digest);
      x[i] = saved - eps;
      const double down = evaluate(down_digest);
      x[i] = saved;
      if (up_digest != base_digest || down_digest != base_digest) {
        ++result.skipped;
        continue;
      }
      const double numeric = (up - down) / (2.0 * eps);
      const double err = relative_error(analytic[i], numeric);
      if (err > result.max_rel_error) {
        result.max_rel_error = err;
        result.worst_input = k;
        result.worst_index = i;
        result.worst_analytic = analytic[i];
        result.worst_numeric = numeric;
      }
      ++result.checked;
    }
  }
  return result;
}

}  // namespace dolfin
