#pragma once

#include <functional>

namespace pmsde {

/// Adaptive Simpson integration of f over [a, b] to absolute tolerance tol.
double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double tol = 1e-10, int max_depth = 48);

} // namespace pmsde
