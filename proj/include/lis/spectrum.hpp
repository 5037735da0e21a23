#ifndef LIS_SPECTRUM_HPP
#define LIS_SPECTRUM_HPP

#include "lis/eigen_dof.hpp"
#include "lis/geometry.hpp"
#include "lis/quadrature.hpp"
#include "lis/types.hpp"

#include <Eigen/SVD>

#include <complex>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

namespace lis {

using cplx = std::complex<double>;

/// Equal-weight solid-angle quadrature over the unit sphere.
struct SphereGrid {
    std::vector<Vec3> directions;
    std::vector<double> weights; // sum to 4 pi

    std::size_t size() const noexcept { return directions.size(); }
};

inline constexpr int kDefaultSphereGridSize = 2000;

inline SphereGrid sphere_grid(int n)
{
    if (n < 16)
        throw ConfigError("sphere grid needs at least 16 directions, got " + std::to_string(n));
    SphereGrid g;
    g.directions = fibonacci_directions(n);
    g.weights.assign(n, 4.0 * std::numbers::pi / n);
    return g;
}

/// A Slepian function's transform psi_hat(kappa d) sampled on a sphere grid.
struct FarFieldPattern {
    Eigen::VectorXcd values;
    std::shared_ptr<const SphereGrid> grid;
    Wavenumber wavenumber;

    /// Sum of weight * |value|^2 over the grid.
    double energy() const
    {
        double e = 0.0;
        for (Eigen::Index i = 0; i < values.size(); ++i)
            e += grid->weights[i] * std::norm(values[i]);
        return e;
    }
};

/// psi_hat(kappa d) = sum_j w_j psi(r_j) exp(-i kappa d . r_j), for every grid direction.
inline Eigen::VectorXcd transform_on_sphere(const Eigen::VectorXcd& samples, const SampledManifold& manifold,
                                            const Wavenumber& k, const SphereGrid& grid)
{
    if (samples.size() != static_cast<Eigen::Index>(manifold.size()))
        throw ConfigError("sample count does not match manifold size");
    const auto ng = static_cast<Eigen::Index>(grid.size());
    const auto n = static_cast<Eigen::Index>(manifold.size());
    const double kappa = k.kappa();
    Eigen::VectorXcd out(ng);
#pragma omp parallel for schedule(static)
    for (Eigen::Index g = 0; g < ng; ++g) {
        const Vec3& d = grid.directions[g];
        cplx acc{0.0, 0.0};
        for (Eigen::Index j = 0; j < n; ++j) {
            const double phase = -kappa * d.dot(manifold.nodes[j]);
            acc += manifold.weights[j] * samples[j] * cplx(std::cos(phase), std::sin(phase));
        }
        out[g] = acc;
    }
    return out;
}

inline FarFieldPattern far_field(Eigen::Index psi_index, const ConcentrationSpectrum& spectrum,
                                 std::shared_ptr<const SphereGrid> grid)
{
    if (psi_index < 0 || psi_index >= spectrum.size())
        throw ConfigError("Slepian index " + std::to_string(psi_index) + " out of range [0, " +
                          std::to_string(spectrum.size()) + ")");
    const Eigen::VectorXcd samples = spectrum.slepian_values.col(psi_index).cast<cplx>();
    auto values = transform_on_sphere(samples, *spectrum.manifold, spectrum.wavenumber, *grid);
    return FarFieldPattern{std::move(values), std::move(grid), spectrum.wavenumber};
}

/// Gram matrix G_ik = sum_g weight_g psi_hat_i psi_hat_k^* of the first `count`
/// patterns. For exact Slepian functions it is diagonal, with
/// G_ii = (2 pi)^3 lambda_i / kappa^2.
inline Eigen::MatrixXcd plancherel_check(const ConcentrationSpectrum& spectrum, const SphereGrid& grid, int count)
{
    if (count < 1 || count > spectrum.size())
        throw ConfigError("Plancherel count must lie in [1, " + std::to_string(spectrum.size()) + "]");
    const auto ng = static_cast<Eigen::Index>(grid.size());
    Eigen::MatrixXcd patterns(ng, count);
    for (int i = 0; i < count; ++i)
        patterns.col(i) = transform_on_sphere(spectrum.slepian_values.col(i).cast<cplx>(), *spectrum.manifold,
                                              spectrum.wavenumber, grid);
    Eigen::VectorXd wt = Eigen::Map<const Eigen::VectorXd>(grid.weights.data(), ng);
    Eigen::MatrixXcd gram = patterns.transpose() * wt.asDiagonal() * patterns.conjugate();
    for (int i = 0; i < count; ++i)
        gram(i, i) = (wt.array() * patterns.col(i).array().abs2()).sum();
    return gram;
}

/// max_{i != k} |G_ik| / sqrt(G_ii G_kk).
inline double max_relative_off_diagonal(const Eigen::MatrixXcd& gram)
{
    double worst = 0.0;
    for (Eigen::Index i = 0; i < gram.rows(); ++i)
        for (Eigen::Index k = 0; k < gram.cols(); ++k)
            if (i != k)
                worst = std::max(worst, std::abs(gram(i, k)) / std::sqrt(std::abs(gram(i, i) * gram(k, k))));
    return worst;
}

struct PlaneWaveFit {
    Eigen::VectorXcd coefficients;
    double residual = 0.0; // weighted relative L2 misfit on the manifold
    Eigen::Index rank = 0;
    bool rank_deficient = false;
};

/// Singular values below this fraction of the largest are treated as zero.
inline constexpr double kPlaneWaveSvdFloor = 1e-12;

/// Weighted least-squares fit u(r) ~ sum_n alpha_n exp(i kappa r . d_n).
/// Rank deficiency falls back to the minimum-norm solution and is flagged.
inline PlaneWaveFit plane_wave_fit(const Eigen::VectorXcd& u, const SampledManifold& manifold, const Wavenumber& k,
                                   const std::vector<Vec3>& directions)
{
    const auto n = static_cast<Eigen::Index>(manifold.size());
    const auto p = static_cast<Eigen::Index>(directions.size());
    if (p < 1)
        throw ConfigError("plane-wave fit needs at least one direction");
    if (u.size() != n)
        throw ConfigError("field sample count does not match manifold size");
    if (!u.allFinite())
        throw ConfigError("field samples must be finite");

    Eigen::VectorXd sqrt_w(n);
    for (Eigen::Index j = 0; j < n; ++j)
        sqrt_w[j] = std::sqrt(manifold.weights[j]);

    Eigen::MatrixXcd design(n, p);
    for (Eigen::Index q = 0; q < p; ++q)
        for (Eigen::Index j = 0; j < n; ++j) {
            const double phase = k.kappa() * manifold.nodes[j].dot(directions[q]);
            design(j, q) = sqrt_w[j] * cplx(std::cos(phase), std::sin(phase));
        }
    const Eigen::VectorXcd rhs = sqrt_w.cast<cplx>().cwiseProduct(u);

    PlaneWaveFit fit;
    const double rhs_norm = rhs.norm();
    if (rhs_norm == 0.0) {
        fit.coefficients = Eigen::VectorXcd::Zero(p);
        Eigen::BDCSVD<Eigen::MatrixXcd> svd(design);
        svd.setThreshold(kPlaneWaveSvdFloor);
        fit.rank = svd.rank();
        fit.rank_deficient = fit.rank < p;
        return fit;
    }

    Eigen::BDCSVD<Eigen::MatrixXcd> svd(design, Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(kPlaneWaveSvdFloor);
    fit.coefficients = svd.solve(rhs);
    fit.rank = svd.rank();
    fit.rank_deficient = fit.rank < p;
    fit.residual = (design * fit.coefficients - rhs).norm() / rhs_norm;
    return fit;
}

inline PlaneWaveFit plane_wave_fit(const Eigen::VectorXcd& u, const SampledManifold& manifold, const Wavenumber& k,
                                   int p)
{
    if (p < 1)
        throw ConfigError("plane-wave fit needs P >= 1");
    return plane_wave_fit(u, manifold, k, fibonacci_directions(p));
}

} // namespace lis

#endif
