#include "audet/numerics/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "audet/numerics/rng.hpp"

namespace audet {

namespace {

void require_eps(double eps) {
  if (!(eps >= 1e-5 && eps <= 1e-2)) {
    throw UsageError("grad_check: eps must lie in [1e-5, 1e-2], got " + std::to_string(eps));
  }
}

std::vector<std::size_t> probe_indices(std::size_t n, const GradCheckOptions& options,
                                       std::uint64_t salt) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (options.max_coordinates == 0 || n <= options.max_coordinates) return idx;
  Rng rng(options.seed ^ (salt * 0x9E3779B97F4A7C15ULL));
  rng.shuffle(idx);
  idx.resize(options.max_coordinates);
  std::sort(idx.begin(), idx.end());
  return idx;
}

double relative_error(double analytic, double numeric) {
  const double scale = std::max({1.0, std::abs(analytic), std::abs(numeric)});
  return std::abs(analytic - numeric) / scale;
}

void note(GradCheckReport& report, double err, const std::string& where, std::size_t i) {
  ++report.coordinates;
  if (err > report.max_rel_error) {
    report.max_rel_error = err;
    report.worst = where + "[" + std::to_string(i) + "]";
  }
}

Tensor<double> with_value(const Tensor<double>& base, std::size_t i, double value) {
  std::vector<double> data = base.vec();
  data[i] = value;
  return Tensor<double>(base.shape(), std::move(data));
}

}  // namespace

GradCheckReport grad_check(const std::function<Tensor<double>(const Tensor<double>&)>& f,
                           const Tensor<double>& point, const GradCheckOptions& options) {
  require_eps(options.eps);
  GradCheckReport report;
  const Tensor<double> base = point.detach();
  if (!bitwise_equal(f(base), f(base))) {
    report.valid = false;
    return report;
  }

  Tape<double> tape;
  const Tensor<double> x = tape.input(base);
  const Tensor<double> y = f(x);
  if (y.size() != 1) throw UsageError("grad_check: function must be scalar-valued");
  if (!y.tracked()) {
    // Output does not depend on a recorded input: the analytic gradient is zero.
    for (std::size_t i : probe_indices(base.size(), options, 0)) {
      const double hi = f(with_value(base, i, base[i] + options.eps)).item();
      const double lo = f(with_value(base, i, base[i] - options.eps)).item();
      note(report, relative_error(0.0, (hi - lo) / (2 * options.eps)), "input", i);
    }
    return report;
  }
  tape.backward(y);
  const std::vector<double> analytic = tape.grad(x);
  for (std::size_t i : probe_indices(base.size(), options, 0)) {
    const double hi = f(with_value(base, i, base[i] + options.eps)).item();
    const double lo = f(with_value(base, i, base[i] - options.eps)).item();
    note(report, relative_error(analytic[i], (hi - lo) / (2 * options.eps)), "input", i);
  }
  return report;
}

GradCheckReport grad_check_parameters(const std::function<Tensor<double>(Tape<double>*)>& loss,
                                      std::span<Parameter<double>* const> params,
                                      const GradCheckOptions& options) {
  require_eps(options.eps);
  GradCheckReport report;
  if (!bitwise_equal(loss(nullptr), loss(nullptr))) {
    report.valid = false;
    return report;
  }
  for (Parameter<double>* p : params) p->zero_grad();
  {
    Tape<double> tape;
    const Tensor<double> y = loss(&tape);
    if (y.size() != 1) throw UsageError("grad_check: loss must be scalar-valued");
    if (y.tracked()) tape.backward(y);
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter<double>& p = *params[k];
    const Tensor<double> original = p.value;
    for (std::size_t i : probe_indices(original.size(), options, k + 1)) {
      p.value = with_value(original, i, original[i] + options.eps);
      const double hi = loss(nullptr).item();
      p.value = with_value(original, i, original[i] - options.eps);
      const double lo = loss(nullptr).item();
      p.value = original;
      note(report, relative_error(p.grad[i], (hi - lo) / (2 * options.eps)), p.name, i);
    }
    p.zero_grad();
  }
  return report;
}

}  // namespace audet
