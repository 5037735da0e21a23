#ifndef LIS_KERNEL_HPP
#define LIS_KERNEL_HPP

#include "lis/geometry.hpp"
#include "lis/types.hpp"

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <new>
#include <string>

namespace lis {

/// sin(x)/x, with the Taylor series below |x| = 1e-4.
inline double sinc(double x) noexcept
{
    if (std::abs(x) < 1e-4) {
        const double x2 = x * x;
        return 1.0 - x2 / 6.0 + x2 * x2 / 120.0;
    }
    return std::sin(x) / x;
}

/// Spatial-spectral concentration kernel K(r, r') = (2/beta^2) sinc(kappa |r - r'|),
/// the inverse Fourier transform of the indicator of the wavenumber sphere.
inline double kernel_value(const Vec3& r, const Vec3& r_prime, const Wavenumber& k) noexcept
{
    const double beta = k.beta();
    return 2.0 / (beta * beta) * sinc(k.kappa() * (r - r_prime).norm());
}

/// Symmetrized Nystrom matrix W^{1/2} K W^{1/2} over a sampled manifold.
struct ConcentrationOperator {
    Eigen::MatrixXd matrix;
    std::shared_ptr<const SampledManifold> manifold;
    Wavenumber wavenumber;

    Eigen::Index size() const noexcept { return matrix.rows(); }
};

inline ConcentrationOperator assemble(std::shared_ptr<const SampledManifold> manifold, const Wavenumber& k)
{
    if (!manifold)
        throw ConfigError("assemble: null manifold");
    validate(*manifold);
    const auto n = static_cast<std::uint64_t>(manifold->size());
    constexpr auto max_entries = std::numeric_limits<std::uint64_t>::max() / sizeof(double);
    if (n > 0 && n > max_entries / n)
        throw NumericalError("operator size " + std::to_string(n) + "^2 overflows the address space");

    Eigen::MatrixXd a;
    try {
        a.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    } catch (const std::bad_alloc&) {
        throw NumericalError("cannot allocate dense operator: " + std::to_string(n * n * sizeof(double)) +
                             " bytes required");
    }

    const auto& nodes = manifold->nodes;
    const auto& w = manifold->weights;
    const double scale = 2.0 / (k.beta() * k.beta());
    const double kappa = k.kappa();
    const auto nn = static_cast<Eigen::Index>(n);

#pragma omp parallel for schedule(dynamic, 16)
    for (Eigen::Index j = 0; j < nn; ++j) {
        const double sj = std::sqrt(w[j]);
        a(j, j) = scale * w[j];
        for (Eigen::Index i = j + 1; i < nn; ++i)
            a(i, j) = std::sqrt(w[i]) * scale * sinc(kappa * (nodes[i] - nodes[j]).norm()) * sj;
    }
    a.triangularView<Eigen::StrictlyUpper>() = a.transpose();

    return ConcentrationOperator{std::move(a), std::move(manifold), k};
}

inline ConcentrationOperator assemble(const SampledManifold& manifold, const Wavenumber& k)
{
    return assemble(std::make_shared<const SampledManifold>(manifold), k);
}

/// Debug dump: `# lis-operator v1 <rows> <cols> <beta>` then one CSV row per matrix row.
inline void write_operator_csv(const ConcentrationOperator& op, const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out)
        throw ConfigError("cannot write operator dump '" + path.string() + "'");
    out.precision(17);
    out << "# lis-operator v1 " << op.matrix.rows() << ' ' << op.matrix.cols() << ' ' << op.wavenumber.beta() << '\n';
    for (Eigen::Index i = 0; i < op.matrix.rows(); ++i) {
        for (Eigen::Index j = 0; j < op.matrix.cols(); ++j) {
            if (j)
                out << ',';
            out << op.matrix(i, j);
        }
        out << '\n';
    }
}

} // namespace lis

#endif
