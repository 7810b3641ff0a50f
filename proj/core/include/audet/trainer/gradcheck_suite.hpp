#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "audet/numerics/grad_check.hpp"
#include "audet/trainer/config.hpp"

namespace audet {

struct GradCheckSuiteOptions {
  std::size_t points = 10;         ///< random points per case
  double tolerance = 1e-4;
  std::size_t max_coordinates = 8; ///< probed coordinates per tensor and point
  std::uint64_t seed = 1;
};

struct GradCheckCase {
  std::string name;
  GradCheckReport report;  ///< worst point
  std::size_t points = 0;
};

struct GradCheckSuiteResult {
  std::vector<GradCheckCase> cases;
  double max_rel_error = 0.0;
  bool passed = true;
};

/// Small f64 model used by the composed-model case.
ModelConfig gradcheck_model_config();

/// Finite-difference checks over every differentiable primitive, both
/// losses, each model module and the composed full model.
GradCheckSuiteResult run_gradcheck_suite(const GradCheckSuiteOptions& options = {},
                                         const std::function<void(const GradCheckCase&)>& progress = {});

}  // namespace audet
