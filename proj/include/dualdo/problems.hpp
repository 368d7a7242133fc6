#pragma once

#include "dualdo/config.hpp"
#include "dualdo/state.hpp"

namespace dualdo {

/// Materialise the configured problem: sample space, coefficient fields,
/// initial condition.
ProblemSpec make_problem(const RunConfig& cfg);

/// First r monomials 1, xi, xi^2, ... orthonormalised in the weighted sample
/// space (Q x r). The first column is identically 1.
Mat stochastic_modes(const SampleSpace& samples, int r);

/// h-normalised discrete sine modes k = 1..r (n x r), mutually H-orthogonal.
Mat spatial_modes(const SpatialGrid& grid, int r);

}  // namespace dualdo
