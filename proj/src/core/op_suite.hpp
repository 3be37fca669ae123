#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace glab {

// Named finite-difference gradient checks. Each case builds random small
// inputs from its seed, runs one scalar-valued function through the autodiff
// graph and returns the max relative error against central differences.
struct GradCase {
  std::string name;
  std::function<double(uint64_t seed)> run;
};

// One case per registered autodiff op (including stride/dilation/broadcast
// variants for the structured ops).
std::vector<GradCase> autodiff_op_cases();

// One case per training loss, evaluated on random motion-sized inputs.
std::vector<GradCase> loss_grad_cases();

struct GradSuiteResult {
  double max_op_err = 0.0;
  double max_loss_err = 0.0;
  std::vector<std::pair<std::string, double>> per_case;
};

GradSuiteResult run_grad_suite(uint64_t seed);

}  // namespace glab
