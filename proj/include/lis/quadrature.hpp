#ifndef LIS_QUADRATURE_HPP
#define LIS_QUADRATURE_HPP

#include "lis/types.hpp"

#include <cmath>
#include <numbers>
#include <utility>
#include <vector>

namespace lis {

struct QuadratureRule1D {
    std::vector<double> nodes;
    std::vector<double> weights;
};

namespace detail {

// (P_n(x), P_{n-1}(x)) by the three-term recurrence
inline std::pair<double, double> legendre_pair(int n, double x)
{
    double prev = 1.0, cur = x;
    for (int k = 2; k <= n; ++k) {
        const double next = ((2.0 * k - 1.0) * x * cur - (k - 1.0) * prev) / k;
        prev = cur;
        cur = next;
    }
    return {cur, prev};
}

} // namespace detail

/// Gauss-Legendre rule on [-1, 1], nodes ascending. Newton iteration from the
/// usual asymptotic starting guess.
inline QuadratureRule1D gauss_legendre(int n)
{
    if (n < 1)
        throw ConfigError("Gauss-Legendre rule needs at least one node");
    QuadratureRule1D rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        for (int iter = 0; iter < 100; ++iter) {
            const auto [p, q] = detail::legendre_pair(n, x);
            const double dp = n * (x * p - q) / (x * x - 1.0);
            const double dx = p / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16)
                break;
        }
        const auto [p, q] = detail::legendre_pair(n, x);
        const double dp = n * (x * p - q) / (x * x - 1.0);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[i] = -x;
        rule.nodes[n - 1 - i] = x;
        rule.weights[i] = w;
        rule.weights[n - 1 - i] = w;
    }
    if (n % 2 == 1)
        rule.nodes[n / 2] = 0.0;
    return rule;
}

/// Fibonacci spiral on the unit sphere: z_i = 1 - (2i+1)/n, golden-angle azimuth.
inline std::vector<Vec3> fibonacci_directions(int n)
{
    if (n < 1)
        throw ConfigError("Fibonacci grid needs at least one direction");
    const double golden_angle = std::numbers::pi * (3.0 - std::sqrt(5.0));
    std::vector<Vec3> dirs(n);
    for (int i = 0; i < n; ++i) {
        const double z = 1.0 - (2.0 * i + 1.0) / n;
        const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double phi = golden_angle * i;
        dirs[i] = Vec3(rho * std::cos(phi), rho * std::sin(phi), z);
    }
    return dirs;
}

} // namespace lis

#endif
