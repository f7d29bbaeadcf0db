#include "qsdkit/quadrature.hpp"

#include "qsdkit/errors.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

namespace qsd {

namespace {

GaussLegendre build_rule(int n) {
    GaussLegendre r;
    r.nodes.resize(static_cast<std::size_t>(n));
    r.weights.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int j = 2; j <= n; ++j) {
                double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        double w = 2.0 / ((1.0 - x * x) * dp * dp);
        r.nodes[static_cast<std::size_t>(i)] = -x;
        r.nodes[static_cast<std::size_t>(n - 1 - i)] = x;
        r.weights[static_cast<std::size_t>(i)] = w;
        r.weights[static_cast<std::size_t>(n - 1 - i)] = w;
    }
    return r;
}

} // namespace

const GaussLegendre& GaussLegendre::get(int n) {
    static std::mutex mu;
    static std::map<int, std::unique_ptr<GaussLegendre>> cache;
    std::lock_guard lock(mu);
    auto& slot = cache[n];
    if (!slot) slot = std::make_unique<GaussLegendre>(build_rule(n));
    return *slot;
}

double integrate_fixed(const std::function<double(double)>& f, double a, double b, int order) {
    const auto& r = GaussLegendre::get(order);
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double s = 0.0;
    for (std::size_t i = 0; i < r.nodes.size(); ++i) s += r.weights[i] * f(mid + half * r.nodes[i]);
    return s * half;
}

namespace {

void refine(const std::function<double(double)>& f, double a, double b, double whole, int order, double tol,
            int depth, int max_depth, AdaptiveResult& out) {
    const double m = 0.5 * (a + b);
    const double left = integrate_fixed(f, a, m, order);
    const double right = integrate_fixed(f, m, b, order);
    const double diff = std::abs(left + right - whole);
    if (diff <= tol * std::max(1.0, std::abs(left + right))) {
        out.value += left + right;
        out.error += diff;
        out.panels += 2;
        return;
    }
    if (depth >= max_depth || !(m > a && m < b))
        throw Error(Errc::IntegralDiverged, "adaptive quadrature did not converge near t in [" + std::to_string(a) +
                                                ", " + std::to_string(b) + "]");
    refine(f, a, m, left, order, tol, depth + 1, max_depth, out);
    refine(f, m, b, right, order, tol, depth + 1, max_depth, out);
}

} // namespace

AdaptiveResult integrate_adaptive(const std::function<double(double)>& f, double a, double b, int order, double tol,
                                  int max_depth) {
    AdaptiveResult out;
    if (a == b) return out;
    const double whole = integrate_fixed(f, a, b, order);
    if (!std::isfinite(whole)) throw Error(Errc::IntegralDiverged, "non-finite integrand");
    refine(f, a, b, whole, order, tol, 0, max_depth, out);
    if (!std::isfinite(out.value)) throw Error(Errc::IntegralDiverged, "non-finite integral");
    return out;
}

} // namespace qsd
