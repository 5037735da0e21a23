#ifndef LIS_CHANNEL_HPP
#define LIS_CHANNEL_HPP

// Line-of-sight channel between two coplanar linear apertures, and the
// comparison of truncated Slepian and Fourier expansions of the received field.

#include "lis/eigen_dof.hpp"
#include "lis/geometry.hpp"
#include "lis/kernel.hpp"
#include "lis/spectrum.hpp"
#include "lis/types.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lis {

enum class ScenarioMode { parallel, random_tilt };

inline std::string_view to_string(ScenarioMode mode)
{
    return mode == ScenarioMode::parallel ? "parallel" : "random_tilt";
}

inline ScenarioMode parse_scenario_mode(std::string_view name)
{
    if (name == "parallel")
        return ScenarioMode::parallel;
    if (name == "random_tilt")
        return ScenarioMode::random_tilt;
    throw ConfigError("unknown scenario mode '" + std::string(name) + "'");
}

/// Transmitter centered at the origin, receiver centered at (d, 0, 0). A tilt
/// theta rotates the segment in the z = 0 plane away from the y axis, so
/// theta_tx = theta_rx = 0 gives two parallel apertures facing each other.
struct LosScenario {
    double aperture_L = 0.05;
    double beta = 0.01;
    double theta_tx = 0.0;
    double theta_rx = 0.0;
    double distance_d = 0.1;
};

struct Segment {
    Vec3 start;
    Vec3 direction; // unit
    double length = 0.0;

    Vec3 at(double s) const { return start + s * direction; }
};

namespace detail {

inline Segment tilted_segment(const Vec3& center, double theta, double length)
{
    const Vec3 dir(-std::sin(theta), std::cos(theta), 0.0);
    return Segment{center - 0.5 * length * dir, dir, length};
}

inline double point_segment_distance(const Vec3& p, const Segment& s)
{
    const double t = std::clamp((p - s.start).dot(s.direction), 0.0, s.length);
    return (p - s.at(t)).norm();
}

} // namespace detail

inline Segment tx_segment(const LosScenario& sc)
{
    return detail::tilted_segment(Vec3::Zero(), sc.theta_tx, sc.aperture_L);
}

inline Segment rx_segment(const LosScenario& sc)
{
    return detail::tilted_segment(Vec3(sc.distance_d, 0.0, 0.0), sc.theta_rx, sc.aperture_L);
}

/// Minimum distance between two coplanar segments (zero when they cross).
inline double segment_distance(const Segment& a, const Segment& b)
{
    // proper crossing test in the z = 0 plane
    const auto cross2 = [](const Vec3& u, const Vec3& v) { return u.x() * v.y() - u.y() * v.x(); };
    const Vec3 a1 = a.at(a.length), b1 = b.at(b.length);
    const double d1 = cross2(b1 - b.start, a.start - b.start);
    const double d2 = cross2(b1 - b.start, a1 - b.start);
    const double d3 = cross2(a1 - a.start, b.start - a.start);
    const double d4 = cross2(a1 - a.start, b1 - a.start);
    if (((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0)) && d1 != 0 && d2 != 0 && d3 != 0 && d4 != 0)
        return 0.0;
    return std::min({detail::point_segment_distance(a.start, b), detail::point_segment_distance(a1, b),
                     detail::point_segment_distance(b.start, a), detail::point_segment_distance(b1, a)});
}

/// Closer than this multiple of the wavelength counts as touching.
inline constexpr double kMinSeparationInWavelengths = 1e-6;

inline void validate(const LosScenario& sc)
{
    if (!(sc.aperture_L > 0.0))
        throw ConfigError("aperture must be positive");
    if (!(sc.beta > 0.0))
        throw ConfigError("wavelength must be positive");
    if (!(sc.distance_d > 0.0))
        throw ConfigError("distance must be positive");
    if (segment_distance(tx_segment(sc), rx_segment(sc)) < kMinSeparationInWavelengths * sc.beta)
        throw ConfigError("transmit and receive segments intersect or touch");
}

/// Nodes of a receive segment in its own coordinate r1 in [0, L] (midpoint rule, along x).
inline SampledManifold receiver_manifold(double aperture, int resolution)
{
    return build_manifold(GeometrySpec{GeometryKind::linear, aperture, resolution, std::nullopt, LineRule::midpoint});
}

/// Maps receiver-local nodes (r1 stored in x) onto the receive segment.
inline std::vector<Vec3> place_on_segment(const Segment& seg, const SampledManifold& local)
{
    std::vector<Vec3> out;
    out.reserve(local.size());
    for (const auto& p : local.nodes)
        out.push_back(seg.at(p.x()));
    return out;
}

// ---------------------------------------------------------------------------
// Transmit currents

/// Orthonormal Legendre polynomial sqrt((2k+1)/2) P_k(x) on [-1, 1].
inline double orthonormal_legendre(int k, double x)
{
    const double p = k == 0 ? 1.0 : detail::legendre_pair(k, x).first;
    return std::sqrt((2.0 * k + 1.0) / 2.0) * p;
}

/// I.i.d. standard complex normal coefficients on the orthonormal Legendre basis,
/// scaled to unit Euclidean norm (so the current has unit energy on [-1, 1]).
inline Eigen::VectorXcd random_smooth_current(int degree, std::mt19937_64& rng)
{
    if (degree < 0)
        throw ConfigError("polynomial degree must be nonnegative");
    std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
    Eigen::VectorXcd c(degree + 1);
    for (auto& v : c) {
        const double re = normal(rng);
        const double im = normal(rng);
        v = cplx(re, im);
    }
    const double norm = c.norm();
    if (norm == 0.0)
        c[0] = 1.0;
    else
        c /= norm;
    return c;
}

inline Eigen::VectorXcd random_smooth_current(int degree, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    return random_smooth_current(degree, rng);
}

/// Current at reference coordinate x in [-1, 1].
inline cplx current_value(const Eigen::VectorXcd& coefficients, double x)
{
    cplx acc{0.0, 0.0};
    for (Eigen::Index k = 0; k < coefficients.size(); ++k)
        acc += coefficients[k] * orthonormal_legendre(static_cast<int>(k), x);
    return acc;
}

// ---------------------------------------------------------------------------
// Propagation

inline constexpr int kTxResolution = 512;

inline constexpr std::string_view kPropagationModel =
    "scalar free-space Green's function exp(-i kappa R) / (4 pi R), midpoint transmit quadrature";

/// Field of point sources: u(r) = sum_s q_s exp(-i kappa R) / (4 pi R).
inline Eigen::VectorXcd radiate(const std::vector<Vec3>& sources, const Eigen::VectorXcd& strengths,
                                const std::vector<Vec3>& receivers, const Wavenumber& k)
{
    if (strengths.size() != static_cast<Eigen::Index>(sources.size()))
        throw ConfigError("source strength count does not match source count");
    const double min_sep = kMinSeparationInWavelengths * k.beta();
    Eigen::VectorXcd u(static_cast<Eigen::Index>(receivers.size()));
    for (std::size_t r = 0; r < receivers.size(); ++r) {
        cplx acc{0.0, 0.0};
        for (std::size_t s = 0; s < sources.size(); ++s) {
            const double dist = (receivers[r] - sources[s]).norm();
            if (dist < min_sep)
                throw ConfigError("receiver node within " + std::to_string(min_sep) + " m of a source");
            const double phase = -k.kappa() * dist;
            acc += strengths[static_cast<Eigen::Index>(s)] * cplx(std::cos(phase), std::sin(phase)) /
                   (4.0 * std::numbers::pi * dist);
        }
        u[static_cast<Eigen::Index>(r)] = acc;
    }
    return u;
}

/// Received field of a Legendre current on the transmit segment, sampled at rx_nodes.
inline Eigen::VectorXcd los_field(const LosScenario& sc, const Eigen::VectorXcd& current,
                                  const std::vector<Vec3>& rx_nodes, int tx_resolution = kTxResolution)
{
    validate(sc);
    if (tx_resolution < 1)
        throw ConfigError("transmit resolution must be positive");
    const Segment tx = tx_segment(sc);
    const double h = sc.aperture_L / tx_resolution;
    std::vector<Vec3> sources(tx_resolution);
    Eigen::VectorXcd strengths(tx_resolution);
    for (int i = 0; i < tx_resolution; ++i) {
        const double s = (i + 0.5) * h;
        sources[i] = tx.at(s);
        strengths[i] = h * current_value(current, 2.0 * s / sc.aperture_L - 1.0);
    }
    return radiate(sources, strengths, rx_nodes, Wavenumber::from_wavelength(sc.beta));
}

// ---------------------------------------------------------------------------
// Expansions

namespace detail {

inline Eigen::MatrixXcd fourier_basis(const SampledManifold& rx_local, int n_terms, double aperture)
{
    const auto n = static_cast<Eigen::Index>(rx_local.size());
    Eigen::MatrixXcd basis(n, n_terms);
    const int first = -(n_terms / 2);
    const double norm = 1.0 / std::sqrt(aperture);
    for (int c = 0; c < n_terms; ++c) {
        const double freq = 2.0 * std::numbers::pi * (first + c) / aperture;
        for (Eigen::Index j = 0; j < n; ++j) {
            const double phase = freq * rx_local.nodes[j].x();
            basis(j, c) = norm * cplx(std::cos(phase), std::sin(phase));
        }
    }
    return basis;
}

inline Eigen::VectorXcd weighted_projection(const Eigen::MatrixXcd& basis, const Eigen::VectorXcd& u,
                                            const std::vector<double>& weights)
{
    if (u.size() != basis.rows())
        throw ConfigError("field sample count does not match receiver nodes");
    Eigen::VectorXcd wu(u.size());
    for (Eigen::Index j = 0; j < u.size(); ++j)
        wu[j] = weights[j] * u[j];
    return basis.adjoint() * wu;
}

} // namespace detail

/// Index set of an N-term Fourier expansion: -floor(N/2), ..., ceil(N/2) - 1.
inline std::vector<int> fourier_indices(int n_terms)
{
    std::vector<int> idx(n_terms);
    for (int c = 0; c < n_terms; ++c)
        idx[c] = c - n_terms / 2;
    return idx;
}

/// Coefficients on the orthonormal exponentials L^{-1/2} exp(i 2 pi m r1 / L),
/// in the order of fourier_indices(N).
inline Eigen::VectorXcd fourier_coefficients(const Eigen::VectorXcd& u, const SampledManifold& rx_local, int n_terms,
                                             double aperture)
{
    if (n_terms < 1)
        throw ConfigError("Fourier expansion needs N >= 1");
    return detail::weighted_projection(detail::fourier_basis(rx_local, n_terms, aperture), u, rx_local.weights);
}

inline Eigen::VectorXcd fourier_reconstruction(const Eigen::VectorXcd& coefficients, const SampledManifold& rx_local,
                                               double aperture)
{
    return detail::fourier_basis(rx_local, static_cast<int>(coefficients.size()), aperture) * coefficients;
}

/// gamma_i = sum_j w_j u(r_j) psi_i(r_j)^*, i < N.
inline Eigen::VectorXcd slepian_coefficients(const Eigen::VectorXcd& u, const ConcentrationSpectrum& basis, int n_terms)
{
    if (n_terms < 1 || n_terms > basis.size())
        throw ConfigError("Slepian expansion size must lie in [1, " + std::to_string(basis.size()) + "]");
    return detail::weighted_projection(basis.slepian_values.leftCols(n_terms).cast<cplx>(), u,
                                       basis.manifold->weights);
}

inline Eigen::VectorXcd slepian_reconstruction(const Eigen::VectorXcd& coefficients, const ConcentrationSpectrum& basis)
{
    return basis.slepian_values.leftCols(coefficients.size()).cast<cplx>() * coefficients;
}

/// Weighted |u - rec|^2 / |u|^2 on the receive segment.
inline double normalized_error(const Eigen::VectorXcd& u, const Eigen::VectorXcd& reconstruction,
                               std::span<const double> weights)
{
    if (u.size() != reconstruction.size() || u.size() != static_cast<Eigen::Index>(weights.size()))
        throw ConfigError("normalized_error: size mismatch");
    double num = 0.0, den = 0.0;
    for (Eigen::Index j = 0; j < u.size(); ++j) {
        num += weights[j] * std::norm(u[j] - reconstruction[j]);
        den += weights[j] * std::norm(u[j]);
    }
    if (!(den > 0.0))
        throw ConfigError("normalized_error: field has zero energy");
    return num / den;
}

// ---------------------------------------------------------------------------
// Monte-Carlo experiment

struct ExperimentConfig {
    ScenarioMode scenario_mode = ScenarioMode::parallel;
    double aperture_L = 0.05;
    double beta = 0.01;
    std::array<double, 2> d_range{0.05, 0.25};
    int trials = 1000;
    std::vector<int> N_values{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19, 20};
    int polynomial_degree = 8;
    std::uint64_t rng_seed = 1;
    int rx_resolution = 512;
    int tx_resolution = kTxResolution;
};

inline void validate(const ExperimentConfig& c)
{
    if (!(c.aperture_L > 0.0) || !(c.beta > 0.0))
        throw ConfigError("aperture and wavelength must be positive");
    if (!(c.d_range[0] > 0.0) || !(c.d_range[1] >= c.d_range[0]))
        throw ConfigError("d_range must satisfy 0 < d_min <= d_max");
    if (c.trials < 1)
        throw ConfigError("trials must be >= 1");
    if (c.N_values.empty())
        throw ConfigError("N_values must not be empty");
    for (std::size_t i = 0; i < c.N_values.size(); ++i) {
        if (c.N_values[i] < 1)
            throw ConfigError("N_values must be positive");
        if (i > 0 && c.N_values[i] <= c.N_values[i - 1])
            throw ConfigError("N_values must be ascending");
    }
    if (c.polynomial_degree < 0)
        throw ConfigError("polynomial_degree must be >= 0");
    if (c.rx_resolution < 2 || c.tx_resolution < 1)
        throw ConfigError("rx_resolution must be >= 2 and tx_resolution >= 1");
    if (c.N_values.back() > c.rx_resolution)
        throw ConfigError("largest N exceeds rx_resolution");
}

struct ErrorStats {
    double mean = 0.0;
    double min = 0.0;
    double max = 0.0;
};

struct TrialRecord {
    double distance_d = 0.0;
    double theta_tx = 0.0;
    double theta_rx = 0.0;
    bool near_field = false;
    int resampled = 0;
    std::vector<double> slepian_error; // aligned with N_values
    std::vector<double> fourier_error;
};

struct ChannelExperimentReport {
    std::vector<int> N_values;
    std::vector<ErrorStats> slepian;
    std::vector<ErrorStats> fourier;
    std::vector<TrialRecord> trials;
    int resampled = 0;
    int near_field_trials = 0;
    int far_field_trials = 0;
    double rayleigh_distance = 0.0;
    double max_parseval_deviation = 0.0;
    std::string propagation_model{kPropagationModel};
};

/// 2 (L/2)^2 / beta: the near/far boundary used to label trials.
inline double rayleigh_distance(double aperture, double beta) { return aperture * aperture / (2.0 * beta); }

/// Independent stream for trial `index`, so results do not depend on scheduling.
inline std::mt19937_64 trial_rng(std::uint64_t master_seed, int index)
{
    std::seed_seq seq{static_cast<std::uint32_t>(master_seed & 0xffffffffu),
                      static_cast<std::uint32_t>(master_seed >> 32), static_cast<std::uint32_t>(index), 0x6c6973u};
    return std::mt19937_64(seq);
}

namespace detail {

inline constexpr int kMaxResamples = 10000;

inline LosScenario draw_scenario(const ExperimentConfig& cfg, std::mt19937_64& rng, int& resampled)
{
    std::uniform_real_distribution<double> dist_d(cfg.d_range[0], cfg.d_range[1]);
    std::uniform_real_distribution<double> tilt(0.0, 2.0 * std::numbers::pi);
    for (int attempt = 0; attempt < kMaxResamples; ++attempt) {
        LosScenario sc{cfg.aperture_L, cfg.beta, 0.0, 0.0, dist_d(rng)};
        if (cfg.scenario_mode == ScenarioMode::random_tilt) {
            sc.theta_tx = tilt(rng);
            sc.theta_rx = tilt(rng);
        }
        if (segment_distance(tx_segment(sc), rx_segment(sc)) >= kMinSeparationInWavelengths * sc.beta)
            return sc;
        ++resampled;
    }
    throw ConfigError("could not draw a valid scenario after " + std::to_string(kMaxResamples) + " attempts");
}

} // namespace detail

inline ChannelExperimentReport run_experiment(const ExperimentConfig& cfg)
{
    validate(cfg);
    const auto rx_local = std::make_shared<const SampledManifold>(receiver_manifold(cfg.aperture_L, cfg.rx_resolution));
    const auto basis = solve(assemble(rx_local, Wavenumber::from_wavelength(cfg.beta)));
    const int n_max = cfg.N_values.back();
    const double rayleigh = rayleigh_distance(cfg.aperture_L, cfg.beta);
    const auto& w = rx_local->weights;
    const auto nv = cfg.N_values.size();

    std::vector<TrialRecord> records(cfg.trials);
    std::vector<double> parseval(cfg.trials, 0.0);

#pragma omp parallel for schedule(dynamic)
    for (int t = 0; t < cfg.trials; ++t) {
        auto rng = trial_rng(cfg.rng_seed, t);
        TrialRecord rec;
        const LosScenario sc = detail::draw_scenario(cfg, rng, rec.resampled);
        const auto current = random_smooth_current(cfg.polynomial_degree, rng);
        const auto u = los_field(sc, current, place_on_segment(rx_segment(sc), *rx_local), cfg.tx_resolution);

        double energy = 0.0;
        for (Eigen::Index j = 0; j < u.size(); ++j)
            energy += w[j] * std::norm(u[j]);

        rec.distance_d = sc.distance_d;
        rec.theta_tx = sc.theta_tx;
        rec.theta_rx = sc.theta_rx;
        rec.near_field = sc.distance_d < rayleigh;
        rec.slepian_error.resize(nv);
        rec.fourier_error.resize(nv);

        const Eigen::VectorXcd gamma = slepian_coefficients(u, basis, n_max);
        double worst = 0.0;
        for (std::size_t k = 0; k < nv; ++k) {
            const int n = cfg.N_values[k];
            const Eigen::VectorXcd g = gamma.head(n);
            rec.slepian_error[k] = normalized_error(u, slepian_reconstruction(g, basis), w);
            worst = std::max(worst, std::abs(rec.slepian_error[k] - (1.0 - g.squaredNorm() / energy)));

            const Eigen::VectorXcd f = fourier_coefficients(u, *rx_local, n, cfg.aperture_L);
            rec.fourier_error[k] = normalized_error(u, fourier_reconstruction(f, *rx_local, cfg.aperture_L), w);
            worst = std::max(worst, std::abs(rec.fourier_error[k] - (1.0 - f.squaredNorm() / energy)));
        }
        parseval[t] = worst;
        records[t] = std::move(rec);
    }

    ChannelExperimentReport report;
    report.N_values = cfg.N_values;
    report.rayleigh_distance = rayleigh;
    report.slepian.resize(nv);
    report.fourier.resize(nv);
    for (std::size_t k = 0; k < nv; ++k) {
        auto aggregate = [&](auto member) {
            ErrorStats s{0.0, 1e300, -1e300};
            for (const auto& r : records) {
                const double e = (r.*member)[k];
                s.mean += e;
                s.min = std::min(s.min, e);
                s.max = std::max(s.max, e);
            }
            s.mean /= static_cast<double>(records.size());
            return s;
        };
        report.slepian[k] = aggregate(&TrialRecord::slepian_error);
        report.fourier[k] = aggregate(&TrialRecord::fourier_error);
    }
    for (int t = 0; t < cfg.trials; ++t) {
        report.resampled += records[t].resampled;
        (records[t].near_field ? report.near_field_trials : report.far_field_trials) += 1;
        report.max_parseval_deviation = std::max(report.max_parseval_deviation, parseval[t]);
    }
    report.trials = std::move(records);
    return report;
}

} // namespace lis

#endif
