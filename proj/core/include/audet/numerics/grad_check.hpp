#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>

#include "audet/numerics/tape.hpp"

namespace audet {

struct GradCheckOptions {
  double eps = 1e-5;
  /// Upper bound on probed coordinates per tensor; 0 probes all of them.
  std::size_t max_coordinates = 0;
  /// Selects the probed coordinates when subsampling.
  std::uint64_t seed = 0;
};

struct GradCheckReport {
  /// max |analytic - numeric| / max(1, |analytic|, |numeric|)
  double max_rel_error = 0.0;
  std::size_t coordinates = 0;
  /// False when the function is not deterministic; the error is then void.
  bool valid = true;
  std::string worst;  ///< "<tensor>[<index>]" of the largest error

  bool passed(double tolerance) const { return valid && max_rel_error <= tolerance; }
};

/// Checks the gradient of a scalar function with respect to its input.
/// `f` must be built from recorded primitives so that it is differentiable
/// when handed a tracked tensor and plain when handed an untracked one.
GradCheckReport grad_check(const std::function<Tensor<double>(const Tensor<double>&)>& f,
                           const Tensor<double>& point, const GradCheckOptions& options = {});

/// Checks parameter gradients of `loss(tape)`, which must watch each of
/// `params` through `use(p, tape)` and tolerate a null tape.
GradCheckReport grad_check_parameters(const std::function<Tensor<double>(Tape<double>*)>& loss,
                                      std::span<Parameter<double>* const> params,
                                      const GradCheckOptions& options = {});

}  // namespace audet
