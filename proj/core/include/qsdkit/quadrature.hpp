#pragma once

#include <functional>
#include <vector>

namespace qsd {

/// n-point Gauss-Legendre rule on [-1, 1]. Rules are computed once and cached.
struct GaussLegendre {
    std::vector<double> nodes;
    std::vector<double> weights;

    static const GaussLegendre& get(int n);
};

/// Fixed-order rule on [a, b].
double integrate_fixed(const std::function<double(double)>& f, double a, double b, int order = 32);

struct AdaptiveResult {
    double value = 0.0;
    double error = 0.0; // sum of |whole - halves| over accepted panels
    int panels = 0;
};

/// Adaptive bisection with a fixed Gauss-Legendre order per panel. A panel is
/// accepted once the whole-panel and two-halves estimates agree to
/// tol * max(1, |estimate|). Throws Error(IntegralDiverged) when a panel
/// still disagrees at max_depth. Nodes are interior, so integrable endpoint
/// singularities are never evaluated.
AdaptiveResult integrate_adaptive(const std::function<double(double)>& f, double a, double b, int order = 32,
                                  double tol = 1e-10, int max_depth = 40);

} // namespace qsd
