#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "dolfin/gradcheck.hpp"

namespace dolfin {

/// A named finite-difference check, built afresh from each seed.
struct GradCheckCase {
  std::string name;
  std::function<GradCheckResult(std::uint64_t seed)> run;
};

/// One case per differentiable op and per full classifier, at small sizes.
std::vector<GradCheckCase> standard_gradcheck_cases();

struct GradCheckRow {
  std::string name;
  GradCheckResult result;  // merged over seeds
  bool passed = false;
};

struct GradCheckReport {
  std::vector<GradCheckRow> rows;
  double tolerance = 1e-4;
  std::size_t seeds = 0;
  bool passed = true;
};

/// Runs every case for seeds base_seed .. base_seed + seeds - 1. A case passes
/// when its largest relative error stays below `tolerance` and at least one
/// coordinate was checked.
GradCheckReport run_gradcheck_suite(const std::vector<GradCheckCase>& cases, std::size_t seeds = 5,
                                    std::uint64_t base_seed = 1, double tolerance = 1e-4);

/// One line per case: name, max relative error, checked/skipped counts, verdict.
void print_gradcheck_report(std::ostream& out, const GradCheckReport& report);

}  // namespace dolfin
