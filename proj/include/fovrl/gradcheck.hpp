#pragma once

#include <cstdint>
#include <functional>
#include <span>

#include "fovrl/params.hpp"

namespace fovrl::tensor {

// Builds a scalar loss on `tape` from the bound parameter leaves (one Var per
// tensor, in ParamVector order).
using LossBuilder = std::function<Var(Tape& tape, std::span<const Var> params)>;

struct GradCheckOptions {
  double eps = 1e-5;
  // 0 checks every coordinate; otherwise a seeded random subset of this size.
  std::size_t max_coords = 0;
  std::uint64_t seed = 0;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
};

// Compares the tape gradient against central differences, coordinate by
// coordinate: |analytic - (f(t+eps) - f(t-eps)) / 2eps| / max(1, |analytic|).
// Losses with kinks (relu at 0) must be evaluated away from the kink; the
// caller is expected to nudge inputs off such points.
GradCheckReport finite_diff_report(const LossBuilder& build, ParamVector& params, const GradCheckOptions& opts);

double finite_diff_check(const LossBuilder& build, ParamVector& params, double eps);

}  // namespace fovrl::tensor
