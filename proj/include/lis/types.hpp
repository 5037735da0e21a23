#ifndef LIS_TYPES_HPP
#define LIS_TYPES_HPP

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace lis {

using Vec3 = Eigen::Vector3d;

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid input: bad spec, unreadable file, out-of-range argument.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Numerical failure: eigensolver non-convergence, PSD violation, allocation.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Free-space wavenumber. Stores both kappa (rad/m) and the wavelength beta (m)
/// so that kappa * beta == 2*pi holds to rounding.
class Wavenumber {
public:
    static Wavenumber from_wavelength(double beta)
    {
        if (!(beta > 0.0) || !std::isfinite(beta))
            throw ConfigError("wavelength must be positive and finite, got " + std::to_string(beta));
        return Wavenumber(2.0 * std::numbers::pi / beta, beta);
    }

    static Wavenumber from_kappa(double kappa)
    {
        if (!(kappa > 0.0) || !std::isfinite(kappa))
            throw ConfigError("wavenumber must be positive and finite, got " + std::to_string(kappa));
        return Wavenumber(kappa, 2.0 * std::numbers::pi / kappa);
    }

    /// Wavenumber giving the requested kappa*L product for aperture L.
    static Wavenumber from_kappa_l(double kappa_l, double aperture)
    {
        if (!(aperture > 0.0))
            throw ConfigError("aperture must be positive");
        return from_wavelength(2.0 * std::numbers::pi * aperture / kappa_l);
    }

    double kappa() const noexcept { return kappa_; }
    double beta() const noexcept { return beta_; }

private:
    Wavenumber(double kappa, double beta) : kappa_(kappa), beta_(beta) {}

    double kappa_;
    double beta_;
};

} // namespace lis

#endif
