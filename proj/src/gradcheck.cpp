#include "fovrl/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "fovrl/errors.hpp"

namespace fovrl::tensor {
namespace {

double evaluate(const LossBuilder& build, const ParamVector& params) {
  Tape tape;
  const auto vars = params.bind(tape);
  return tape.scalar_value(build(tape, vars));
}

}  // namespace

GradCheckReport finite_diff_report(const LossBuilder& build, ParamVector& params, const GradCheckOptions& opts) {
  if (!(opts.eps > 0.0)) throw InvalidInput("finite_diff_check needs eps > 0");
  std::vector<double> analytic(params.size(), 0.0);
  {
    Tape tape;
    const auto vars = params.bind(tape, analytic);
    tape.backward(build(tape, vars));
  }

  std::vector<std::size_t> coords(params.size());
  std::iota(coords.begin(), coords.end(), std::size_t{0});
  if (opts.max_coords != 0 && opts.max_coords < coords.size()) {
    std::mt19937_64 rng(opts.seed);
    std::shuffle(coords.begin(), coords.end(), rng);
    coords.resize(opts.max_coords);
    std::sort(coords.begin(), coords.end());
  }

  GradCheckReport report;
  auto theta = params.values();
  for (std::size_t i : coords) {
    const double saved = theta[i];
    theta[i] = saved + opts.eps;
    const double up = evaluate(build, params);
    theta[i] = saved - opts.eps;
    const double down = evaluate(build, params);
    theta[i] = saved;
    const double numeric = (up - down) / (2.0 * opts.eps);
    const double err = std::abs(analytic[i] - numeric) / std::max(1.0, std::abs(analytic[i]));
    if (report.checked == 0 || err > report.max_rel_error) {
      report.max_rel_error = err;
      report.worst_index = i;
    }
    ++report.checked;
  }
  return report;
}

double finite_diff_check(const LossBuilder& build, ParamVector& params, double eps) {
  GradCheckOptions opts;
  opts.eps = eps;
  return finite_diff_report(build, params, opts).max_rel_error;
}

}  // namespace fovrl::tensor
