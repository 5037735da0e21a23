#ifndef LIS_EIGEN_DOF_HPP
#define LIS_EIGEN_DOF_HPP

#include "lis/geometry.hpp"
#include "lis/kernel.hpp"
#include "lis/types.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lis {

/// Negative eigenvalues above -kPsdTolerance * lambda_1 are rounding noise and get clipped.
inline constexpr double kPsdTolerance = 1e-10;

struct ConcentrationSpectrum {
    Eigen::VectorXd eigenvalues;    // descending, clipped at zero
    Eigen::MatrixXd slepian_values; // column i: psi_i at the manifold nodes
    std::shared_ptr<const SampledManifold> manifold;
    Wavenumber wavenumber;
    double clipped_magnitude = 0.0; // largest |lambda| removed by clipping

    Eigen::Index size() const noexcept { return eigenvalues.size(); }
};

namespace detail {

struct RawEigen {
    Eigen::VectorXd values;
    Eigen::MatrixXd vectors; // empty when only values were requested
};

inline RawEigen symmetric_eigen(const Eigen::MatrixXd& a, bool want_vectors)
{
    const auto n = static_cast<lapack_int>(a.rows());
    RawEigen out;
    out.values.resize(n);
    Eigen::MatrixXd work = a;
    const lapack_int info =
        LAPACKE_dsyevd(LAPACK_COL_MAJOR, want_vectors ? 'V' : 'N', 'L', n, work.data(), n, out.values.data());
    if (info != 0) {
        const double fro = a.norm();
        throw NumericalError("symmetric eigensolver failed (info=" + std::to_string(info) + ", n=" +
                             std::to_string(n) + ", |A|_F=" + std::to_string(fro) +
                             ", max|diag|=" + std::to_string(a.diagonal().cwiseAbs().maxCoeff()) + ")");
    }
    if (want_vectors)
        out.vectors = std::move(work);
    return out;
}

/// Descending permutation of ascending solver output. Ties keep solver order.
inline std::vector<Eigen::Index> descending_order(const Eigen::VectorXd& ascending)
{
    std::vector<Eigen::Index> order(ascending.size());
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index x, Eigen::Index y) { return ascending[x] > ascending[y]; });
    return order;
}

inline double clip_negative(Eigen::VectorXd& values)
{
    if (values.size() == 0)
        return 0.0;
    const double top = values.maxCoeff();
    const double floor = -kPsdTolerance * std::max(top, 0.0);
    double clipped = 0.0;
    for (auto& v : values) {
        if (v >= 0.0)
            continue;
        if (v < floor)
            throw NumericalError("operator is not positive semidefinite: eigenvalue " + std::to_string(v) +
                                 " below tolerance " + std::to_string(floor));
        clipped = std::max(clipped, -v);
        v = 0.0;
    }
    return clipped;
}

} // namespace detail

/// Eigenvalues only, descending and clipped. Cheaper than solve() for DoF sweeps.
inline Eigen::VectorXd solve_eigenvalues(const ConcentrationOperator& op, double* clipped_magnitude = nullptr)
{
    auto raw = detail::symmetric_eigen(op.matrix, false);
    const auto order = detail::descending_order(raw.values);
    Eigen::VectorXd values(raw.values.size());
    for (std::size_t i = 0; i < order.size(); ++i)
        values[static_cast<Eigen::Index>(i)] = raw.values[order[i]];
    const double clipped = detail::clip_negative(values);
    if (clipped_magnitude)
        *clipped_magnitude = clipped;
    return values;
}

/// Full decomposition. Slepian functions are normalized to unit energy in the
/// weighted inner product; each is signed so its largest-magnitude sample is positive.
inline ConcentrationSpectrum solve(const ConcentrationOperator& op)
{
    auto raw = detail::symmetric_eigen(op.matrix, true);
    const auto order = detail::descending_order(raw.values);
    const auto n = static_cast<Eigen::Index>(order.size());

    ConcentrationSpectrum spec{Eigen::VectorXd(n), Eigen::MatrixXd(n, n), op.manifold, op.wavenumber, 0.0};
    const auto& w = op.manifold->weights;
    for (Eigen::Index c = 0; c < n; ++c) {
        spec.eigenvalues[c] = raw.values[order[c]];
        auto v = raw.vectors.col(order[c]);
        Eigen::Index peak = 0;
        v.cwiseAbs().maxCoeff(&peak);
        const double sign = v[peak] < 0.0 ? -1.0 : 1.0;
        for (Eigen::Index j = 0; j < n; ++j)
            spec.slepian_values(j, c) = sign * v[j] / std::sqrt(w[j]);
    }
    spec.clipped_magnitude = detail::clip_negative(spec.eigenvalues);
    return spec;
}

/// Smallest N with lambda_1 + ... + lambda_N >= fraction * sum(lambda).
inline int dof_numerical(std::span<const double> eigenvalues, double fraction)
{
    if (!(fraction > 0.0 && fraction < 1.0))
        throw ConfigError("DoF fraction must lie in (0, 1), got " + std::to_string(fraction));
    const double total = std::accumulate(eigenvalues.begin(), eigenvalues.end(), 0.0);
    if (!(total > 0.0))
        throw NumericalError("eigenvalue sum is not positive");
    const double target = fraction * total;
    double partial = 0.0;
    for (std::size_t i = 0; i < eigenvalues.size(); ++i) {
        partial += eigenvalues[i];
        if (partial >= target)
            return static_cast<int>(i + 1);
    }
    return static_cast<int>(eigenvalues.size());
}

inline int dof_numerical(const Eigen::VectorXd& eigenvalues, double fraction)
{
    return dof_numerical(std::span<const double>(eigenvalues.data(), static_cast<std::size_t>(eigenvalues.size())),
                         fraction);
}

inline int dof_numerical(const ConcentrationSpectrum& spectrum, double fraction)
{
    return dof_numerical(spectrum.eigenvalues, fraction);
}

/// Closed-form DoF for the shapes that have one. Not floored.
inline std::optional<double> dof_theoretical(GeometryKind kind, double kappa_l)
{
    if (!(kappa_l > 0.0))
        throw ConfigError("kappa*L must be positive");
    switch (kind) {
    case GeometryKind::linear: return kappa_l / std::numbers::pi;
    case GeometryKind::circular: return kappa_l;
    case GeometryKind::square: return kappa_l * kappa_l / (4.0 * std::numbers::pi);
    default: return std::nullopt;
    }
}

struct DofReport {
    double kappa_L = 0.0;
    std::optional<double> dof_th;
    int dof_90 = 0;
    int dof_99 = 0;
    Eigen::VectorXd eigenvalues_scaled; // lambda_i / lambda_1
    double eigenvalue_sum = 0.0;
};

inline DofReport make_dof_report(GeometryKind kind, double kappa_l, const Eigen::VectorXd& eigenvalues)
{
    if (eigenvalues.size() == 0 || !(eigenvalues[0] > 0.0))
        throw NumericalError("spectrum has no positive leading eigenvalue");
    DofReport r;
    r.kappa_L = kappa_l;
    r.dof_th = dof_theoretical(kind, kappa_l);
    r.dof_90 = dof_numerical(eigenvalues, 0.90);
    r.dof_99 = dof_numerical(eigenvalues, 0.99);
    r.eigenvalues_scaled = eigenvalues / eigenvalues[0];
    r.eigenvalue_sum = eigenvalues.sum();
    return r;
}

/// DoF at each kappa*L. Aperture is held fixed and the wavelength varies.
inline std::vector<DofReport> dof_sweep(const GeometrySpec& spec, std::span<const double> kappa_l_values)
{
    if (kappa_l_values.empty())
        throw ConfigError("DoF sweep needs at least one kappa*L value");
    for (std::size_t i = 0; i < kappa_l_values.size(); ++i) {
        if (!(kappa_l_values[i] > 0.0))
            throw ConfigError("kappa*L values must be positive");
        if (i > 0 && !(kappa_l_values[i] > kappa_l_values[i - 1]))
            throw ConfigError("kappa*L values must be ascending");
    }
    const auto manifold = std::make_shared<const SampledManifold>(build_manifold(spec));
    std::vector<DofReport> reports;
    reports.reserve(kappa_l_values.size());
    for (double kl : kappa_l_values) {
        const auto op = assemble(manifold, Wavenumber::from_kappa_l(kl, spec.aperture_L));
        reports.push_back(make_dof_report(spec.kind, kl, solve_eigenvalues(op)));
    }
    return reports;
}

} // namespace lis

#endif
