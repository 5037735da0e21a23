#ifndef LIS_GEOMETRY_HPP
#define LIS_GEOMETRY_HPP

#include "lis/quadrature.hpp"
#include "lis/types.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace lis {

enum class GeometryKind { linear, circular, square, paraboloid, custom };

/// Node rule for the linear aperture. Every other shape uses cell midpoints.
enum class LineRule { midpoint, gauss_legendre };

inline std::string_view to_string(GeometryKind kind)
{
    switch (kind) {
    case GeometryKind::linear: return "linear";
    case GeometryKind::circular: return "circular";
    case GeometryKind::square: return "square";
    case GeometryKind::paraboloid: return "paraboloid";
    case GeometryKind::custom: return "custom";
    }
    return "unknown";
}

inline GeometryKind parse_geometry_kind(std::string_view name)
{
    for (auto kind : {GeometryKind::linear, GeometryKind::circular, GeometryKind::square,
                      GeometryKind::paraboloid, GeometryKind::custom})
        if (to_string(kind) == name)
            return kind;
    throw ConfigError("unsupported geometry kind '" + std::string(name) + "'");
}

inline std::string_view to_string(LineRule rule)
{
    return rule == LineRule::midpoint ? "midpoint" : "gauss-legendre";
}

inline LineRule parse_line_rule(std::string_view name)
{
    if (name == "midpoint")
        return LineRule::midpoint;
    if (name == "gauss-legendre")
        return LineRule::gauss_legendre;
    throw ConfigError("unsupported line rule '" + std::string(name) + "'");
}

/// Cell/node counts matching the meshes used for the reference figures.
inline int default_resolution(GeometryKind kind)
{
    switch (kind) {
    case GeometryKind::square: return 4096;
    case GeometryKind::paraboloid: return 4500;
    default: return 1024;
    }
}

struct GeometrySpec {
    GeometryKind kind = GeometryKind::linear;
    double aperture_L = 1.0;
    int resolution = 1024;
    std::optional<std::filesystem::path> mesh_path;
    LineRule line_rule = LineRule::midpoint;
};

/// Quadrature discretization of a curve, surface or volume: node positions and
/// the measure carried by each node.
struct SampledManifold {
    std::vector<Vec3> nodes;
    std::vector<double> weights;
    int dim = 1;
    std::string label;

    std::size_t size() const noexcept { return nodes.size(); }

    double measure() const { return std::accumulate(weights.begin(), weights.end(), 0.0); }
};

/// Throws ConfigError unless weights are positive, nodes finite and sizes agree.
inline void validate(const SampledManifold& m)
{
    if (m.nodes.empty())
        throw ConfigError("manifold '" + m.label + "' has no nodes");
    if (m.nodes.size() != m.weights.size())
        throw ConfigError("manifold '" + m.label + "' has mismatched node and weight counts");
    if (m.dim < 1 || m.dim > 3)
        throw ConfigError("manifold dimension must be 1, 2 or 3");
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (!m.nodes[i].allFinite())
            throw ConfigError("manifold node " + std::to_string(i) + " is not finite");
        if (!(m.weights[i] > 0.0) || !std::isfinite(m.weights[i]))
            throw ConfigError("manifold weight " + std::to_string(i) + " is not strictly positive");
    }
}

// Paraboloid of revolution rho(z) = 0.5 sqrt(L (L - z)), z in [0, L].
// Equivalently z = L - 4 rho^2 / L with rho in [0, L/2]; apex at z = L.
namespace paraboloid {

inline double height(double rho, double L) { return L - 4.0 * rho * rho / L; }

/// Meridian arclength from the apex out to radius rho.
inline double arclength(double rho, double L)
{
    const double a = 8.0 / L;
    const double ar = a * rho;
    return 0.5 * (rho * std::sqrt(1.0 + ar * ar) + std::asinh(ar) / a);
}

/// Inverse of arclength(): radius reached after meridian arclength s.
inline double radius_at_arclength(double s, double L)
{
    const double a = 8.0 / L;
    double rho = std::min(s, 0.5 * L);
    for (int iter = 0; iter < 60; ++iter) {
        const double f = arclength(rho, L) - s;
        const double df = std::sqrt(1.0 + a * a * rho * rho);
        const double step = f / df;
        rho -= step;
        if (std::abs(step) <= 1e-15 * L)
            break;
    }
    return std::clamp(rho, 0.0, 0.5 * L);
}

/// Area of the band between radii r0 < r1 over the full azimuth. Antiderivative
/// of 2 pi rho sqrt(1 + z'(rho)^2).
inline double band_area(double r0, double r1, double L)
{
    const double a2 = 64.0 / (L * L);
    const auto prim = [&](double r) { return std::pow(1.0 + a2 * r * r, 1.5); };
    return 2.0 * std::numbers::pi * (L * L / 192.0) * (prim(r1) - prim(r0));
}

inline double area(double L) { return band_area(0.0, 0.5 * L, L); }

} // namespace paraboloid

namespace detail {

/// Factor count ~= rows*cols with cols/rows close to aspect. Exact factorizations
/// are preferred when one exists within 25% of the target aspect.
inline std::pair<int, int> grid_shape(int count, double aspect)
{
    int best_rows = 0;
    double best_err = 1e300;
    for (int rows = 1; rows <= count; ++rows) {
        if (count % rows != 0)
            continue;
        const double err = std::abs(std::log(static_cast<double>(count / rows) / rows / aspect));
        if (err < best_err) {
            best_err = err;
            best_rows = rows;
        }
    }
    if (best_err <= std::log(1.25))
        return {best_rows, count / best_rows};
    const int rows = std::max(1, static_cast<int>(std::lround(std::sqrt(count / aspect))));
    const int cols = std::max(1, static_cast<int>(std::lround(static_cast<double>(count) / rows)));
    return {rows, cols};
}

inline SampledManifold linear_manifold(const GeometrySpec& spec)
{
    const double L = spec.aperture_L;
    const int n = spec.resolution;
    SampledManifold m;
    m.dim = 1;
    m.label = "linear";
    m.nodes.reserve(n);
    m.weights.reserve(n);
    if (spec.line_rule == LineRule::midpoint) {
        const double h = L / n;
        for (int i = 0; i < n; ++i) {
            m.nodes.emplace_back((i + 0.5) * h, 0.0, 0.0);
            m.weights.push_back(h);
        }
    } else {
        const auto rule = gauss_legendre(n);
        for (int i = 0; i < n; ++i) {
            m.nodes.emplace_back(0.5 * L * (rule.nodes[i] + 1.0), 0.0, 0.0);
            m.weights.push_back(0.5 * L * rule.weights[i]);
        }
        m.label = "linear-gl";
    }
    return m;
}

inline SampledManifold circular_manifold(const GeometrySpec& spec)
{
    const double R = 0.5 * spec.aperture_L;
    const int n = spec.resolution;
    SampledManifold m;
    m.dim = 1;
    m.label = "circular";
    const double dtheta = 2.0 * std::numbers::pi / n;
    for (int i = 0; i < n; ++i) {
        const double theta = (i + 0.5) * dtheta;
        m.nodes.emplace_back(R * std::cos(theta), R * std::sin(theta), 0.0);
        m.weights.push_back(R * dtheta);
    }
    return m;
}

inline SampledManifold square_manifold(const GeometrySpec& spec)
{
    const double L = spec.aperture_L;
    const auto [rows, cols] = grid_shape(spec.resolution, 1.0);
    if (spec.resolution < 4 || rows < 2 || cols < 2)
        throw ConfigError("resolution " + std::to_string(spec.resolution) + " too small to mesh a square");
    SampledManifold m;
    m.dim = 2;
    m.label = "square";
    const double hx = L / cols, hy = L / rows;
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            m.nodes.emplace_back((c + 0.5) * hx, (r + 0.5) * hy, 0.0);
            m.weights.push_back(hx * hy);
        }
    return m;
}

// Rings uniform in meridian arclength, sectors uniform in azimuth. Each node sits
// on the surface at the cell's mid-arclength and mid-azimuth; its weight is the
// exact cell area.
inline SampledManifold paraboloid_manifold(const GeometrySpec& spec)
{
    const double L = spec.aperture_L;
    const double meridian = paraboloid::arclength(0.5 * L, L);
    const auto [rings, sectors] = grid_shape(spec.resolution, std::numbers::pi * L / meridian);
    if (spec.resolution < 6 || rings < 2 || sectors < 3)
        throw ConfigError("resolution " + std::to_string(spec.resolution) + " too small to mesh a paraboloid");
    SampledManifold m;
    m.dim = 2;
    m.label = "paraboloid";
    const double ds = meridian / rings;
    const double dtheta = 2.0 * std::numbers::pi / sectors;
    for (int r = 0; r < rings; ++r) {
        const double rho0 = r == 0 ? 0.0 : paraboloid::radius_at_arclength(r * ds, L);
        const double rho1 = r + 1 == rings ? 0.5 * L : paraboloid::radius_at_arclength((r + 1) * ds, L);
        const double rho_mid = paraboloid::radius_at_arclength((r + 0.5) * ds, L);
        const double cell = paraboloid::band_area(rho0, rho1, L) / sectors;
        const double z = paraboloid::height(rho_mid, L);
        for (int s = 0; s < sectors; ++s) {
            const double theta = (s + 0.5) * dtheta;
            m.nodes.emplace_back(rho_mid * std::cos(theta), rho_mid * std::sin(theta), z);
            m.weights.push_back(cell);
        }
    }
    return m;
}

} // namespace detail

inline SampledManifold load_custom_mesh(const std::filesystem::path& path);

/// Closed-form measure |M| of a parametric shape.
inline double analytic_measure(GeometryKind kind, double L)
{
    switch (kind) {
    case GeometryKind::linear: return L;
    case GeometryKind::circular: return std::numbers::pi * L;
    case GeometryKind::square: return L * L;
    case GeometryKind::paraboloid: return paraboloid::area(L);
    case GeometryKind::custom: break;
    }
    throw ConfigError("custom meshes have no analytic measure");
}

inline SampledManifold build_manifold(const GeometrySpec& spec)
{
    if (spec.kind == GeometryKind::custom) {
        if (!spec.mesh_path)
            throw ConfigError("custom geometry requires a mesh file");
        return load_custom_mesh(*spec.mesh_path);
    }
    if (!(spec.aperture_L > 0.0) || !std::isfinite(spec.aperture_L))
        throw ConfigError("aperture must be positive and finite");
    if (spec.resolution < 2)
        throw ConfigError("resolution must be at least 2, got " + std::to_string(spec.resolution));

    SampledManifold m;
    switch (spec.kind) {
    case GeometryKind::linear: m = detail::linear_manifold(spec); break;
    case GeometryKind::circular: m = detail::circular_manifold(spec); break;
    case GeometryKind::square: m = detail::square_manifold(spec); break;
    case GeometryKind::paraboloid: m = detail::paraboloid_manifold(spec); break;
    case GeometryKind::custom: break;
    }
    validate(m);
    return m;
}

} // namespace lis

#include "lis/mesh_io.hpp"

#endif
