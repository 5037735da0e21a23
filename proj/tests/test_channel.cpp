#include "lis/channel.hpp"
#include "lis/spectrum.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <numbers>

using Catch::Approx;
using namespace lis;

namespace {

constexpr double pi = std::numbers::pi;

struct Receiver {
    std::shared_ptr<const SampledManifold> local;
    ConcentrationSpectrum basis;
};

const Receiver& default_receiver()
{
    static const Receiver rx = [] {
        const auto local = std::make_shared<const SampledManifold>(receiver_manifold(0.05, 512));
        return Receiver{local, solve(assemble(local, Wavenumber::from_wavelength(0.01)))};
    }();
    return rx;
}

Eigen::VectorXcd sample_field(const LosScenario& sc, std::uint64_t seed, const SampledManifold& rx_local)
{
    return los_field(sc, random_smooth_current(8, seed), place_on_segment(rx_segment(sc), rx_local));
}

ExperimentConfig small_config(ScenarioMode mode, int trials)
{
    ExperimentConfig c;
    c.scenario_mode = mode;
    c.trials = trials;
    c.rx_resolution = 256;
    c.tx_resolution = 256;
    c.rng_seed = 42;
    return c;
}

} // namespace

TEST_CASE("random smooth currents", "[channel]")
{
    SECTION("degree 0 is a unit constant")
    {
        const auto c = random_smooth_current(0, std::uint64_t{9});
        REQUIRE(c.size() == 1);
        CHECK(std::abs(c[0]) == Approx(1.0).epsilon(1e-15));
    }
    SECTION("same seed, same coefficients")
    {
        CHECK(random_smooth_current(8, std::uint64_t{123}) == random_smooth_current(8, std::uint64_t{123}));
        CHECK(random_smooth_current(8, std::uint64_t{123}) != random_smooth_current(8, std::uint64_t{124}));
    }
    SECTION("unit L2 energy on [-1, 1] in the orthonormal Legendre basis")
    {
        const auto c = random_smooth_current(8, std::uint64_t{5});
        CHECK(c.norm() == Approx(1.0).epsilon(1e-14));
        // midpoint integral of |sigma|^2 over [-1, 1]
        const int n = 4000;
        double energy = 0.0;
        for (int i = 0; i < n; ++i) {
            const double x = -1.0 + (i + 0.5) * 2.0 / n;
            energy += std::norm(current_value(c, x)) * 2.0 / n;
        }
        CHECK(energy == Approx(1.0).epsilon(1e-5));
    }
    SECTION("coefficients have zero mean over many draws")
    {
        const int draws = 10000;
        std::mt19937_64 rng(2024);
        Eigen::VectorXcd sum = Eigen::VectorXcd::Zero(9);
        Eigen::VectorXd sq_re = Eigen::VectorXd::Zero(9), sq_im = Eigen::VectorXd::Zero(9);
        for (int t = 0; t < draws; ++t) {
            const auto c = random_smooth_current(8, rng);
            sum += c;
            sq_re += c.real().cwiseAbs2();
            sq_im += c.imag().cwiseAbs2();
        }
        for (int k = 0; k < 9; ++k) {
            const double sigma_re = std::sqrt(sq_re[k] / draws / draws);
            const double sigma_im = std::sqrt(sq_im[k] / draws / draws);
            CHECK(std::abs(sum[k].real() / draws) <= 5.0 * sigma_re);
            CHECK(std::abs(sum[k].imag() / draws) <= 5.0 * sigma_im);
        }
    }
    CHECK_THROWS_AS(random_smooth_current(-1, std::uint64_t{1}), ConfigError);
}

TEST_CASE("orthonormal Legendre polynomials", "[channel]")
{
    const auto rule = gauss_legendre(20);
    for (int a = 0; a < 8; ++a)
        for (int b = 0; b < 8; ++b) {
            double s = 0.0;
            for (std::size_t i = 0; i < rule.nodes.size(); ++i)
                s += rule.weights[i] * orthonormal_legendre(a, rule.nodes[i]) * orthonormal_legendre(b, rule.nodes[i]);
            CHECK(s == Approx(a == b ? 1.0 : 0.0).margin(1e-13));
        }
}

TEST_CASE("point-source propagation", "[channel]")
{
    const auto k = Wavenumber::from_wavelength(0.01);
    for (double d : {0.05, 0.13, 1.0}) {
        const auto u = radiate({Vec3::Zero()}, Eigen::VectorXcd::Ones(1), {Vec3(d, 0, 0)}, k);
        CHECK(std::abs(u[0]) == Approx(1.0 / (4.0 * pi * d)).epsilon(1e-14));
    }
    CHECK_THROWS_AS(radiate({Vec3::Zero()}, Eigen::VectorXcd::Ones(1), {Vec3::Zero()}, k), ConfigError);
}

TEST_CASE("received field is linear in the current", "[channel]")
{
    const LosScenario sc;
    const auto& rx = default_receiver();
    const auto nodes = place_on_segment(rx_segment(sc), *rx.local);
    const auto c = random_smooth_current(8, std::uint64_t{3});
    const auto u1 = los_field(sc, c, nodes, 128);
    const auto u2 = los_field(sc, 2.0 * c, nodes, 128);
    CHECK((u2 - 2.0 * u1).cwiseAbs().maxCoeff() < 1e-14 * u1.cwiseAbs().maxCoeff());
}

TEST_CASE("far-away parallel segments see a plane wave", "[channel]")
{
    LosScenario sc;
    sc.distance_d = 100.0 * sc.aperture_L;
    const auto& rx = default_receiver();
    SampledManifold world = *rx.local;
    world.nodes = place_on_segment(rx_segment(sc), *rx.local);
    const auto u = los_field(sc, random_smooth_current(8, std::uint64_t{8}), world.nodes);
    CHECK(plane_wave_fit(u, world, Wavenumber::from_wavelength(sc.beta), 64).residual < 1e-3);
}

TEST_CASE("scenario geometry", "[channel]")
{
    LosScenario sc;
    sc.theta_tx = pi / 2;
    const auto tx = tx_segment(sc);
    CHECK((tx.direction - Vec3(-1, 0, 0)).norm() < 1e-15);
    CHECK((tx.at(0.5 * tx.length)).norm() < 1e-15);
    CHECK((rx_segment(sc).at(0.5 * sc.aperture_L) - Vec3(sc.distance_d, 0, 0)).norm() < 1e-15);

    SECTION("crossing segments are rejected")
    {
        LosScenario cross;
        cross.distance_d = 0.02;
        cross.theta_rx = pi / 2; // rx along x through the tx center line
        CHECK_THROWS_AS(validate(cross), ConfigError);
        CHECK_THROWS_AS(los_field(cross, random_smooth_current(2, std::uint64_t{1}), {Vec3(1, 0, 0)}), ConfigError);
    }
    SECTION("collinear overlap is rejected")
    {
        LosScenario overlap;
        overlap.distance_d = 0.02;
        overlap.theta_tx = pi / 2;
        overlap.theta_rx = pi / 2;
        CHECK_THROWS_AS(validate(overlap), ConfigError);
    }
    SECTION("parallel segments at any positive distance are fine")
    {
        LosScenario ok;
        ok.distance_d = 1e-3;
        CHECK_NOTHROW(validate(ok));
        CHECK(segment_distance(tx_segment(ok), rx_segment(ok)) == Approx(1e-3));
    }
}

TEST_CASE("Fourier coefficients", "[channel]")
{
    const auto& rx = default_receiver();
    const double L = 0.05;
    const auto n = static_cast<Eigen::Index>(rx.local->size());

    SECTION("a basis member")
    {
        Eigen::VectorXcd u(n);
        for (Eigen::Index j = 0; j < n; ++j)
            u[j] = std::exp(cplx(0.0, 2.0 * pi * rx.local->nodes[j].x() / L)) / std::sqrt(L);
        const auto idx = fourier_indices(4);
        CHECK(idx == std::vector<int>{-2, -1, 0, 1});
        const auto c = fourier_coefficients(u, *rx.local, 4, L);
        for (int i = 0; i < 4; ++i)
            CHECK(std::abs(c[i] - (idx[i] == 1 ? cplx(1.0) : cplx(0.0))) < 1e-10);
    }
    SECTION("zero field")
    {
        const auto c = fourier_coefficients(Eigen::VectorXcd::Zero(n), *rx.local, 7, L);
        CHECK(c.cwiseAbs().maxCoeff() == 0.0);
        CHECK(fourier_indices(7) == std::vector<int>{-3, -2, -1, 0, 1, 2, 3});
    }
    SECTION("a plane wave at kappa L = 10 pi peaks at index 5")
    {
        const double kappa = 10.0 * pi / L;
        Eigen::VectorXcd u(n);
        for (Eigen::Index j = 0; j < n; ++j)
            u[j] = std::exp(cplx(0.0, kappa * rx.local->nodes[j].x()));
        const auto c = fourier_coefficients(u, *rx.local, 20, L);
        Eigen::Index best = 0;
        c.cwiseAbs().maxCoeff(&best);
        CHECK(fourier_indices(20)[best] == 5);
        // full expansion of a basis member is exact
        CHECK(normalized_error(u, fourier_reconstruction(c, *rx.local, L), rx.local->weights) < 1e-20);
    }
    CHECK_THROWS_AS(fourier_coefficients(Eigen::VectorXcd::Zero(n), *rx.local, 0, L), ConfigError);
}

TEST_CASE("Slepian coefficients", "[channel]")
{
    const auto& rx = default_receiver();
    const Eigen::VectorXcd psi1 = rx.basis.slepian_values.col(0).cast<cplx>();
    const auto g = slepian_coefficients(psi1, rx.basis, 5);
    CHECK(std::abs(g[0] - cplx(1.0)) < 1e-10);
    CHECK(g.tail(4).cwiseAbs().maxCoeff() < 1e-10);

    const LosScenario sc;
    const auto u = sample_field(sc, 77, *rx.local);
    const cplx c(-0.3, 2.5);
    const auto gu = slepian_coefficients(u, rx.basis, 15);
    CHECK((slepian_coefficients(c * u, rx.basis, 15) - c * gu).cwiseAbs().maxCoeff() < 1e-12 * gu.cwiseAbs().maxCoeff());
    // nested basis: growing N leaves the leading coefficients alone
    CHECK((slepian_coefficients(u, rx.basis, 10) - gu.head(10)).cwiseAbs().maxCoeff() == 0.0);

    CHECK_THROWS_AS(slepian_coefficients(u, rx.basis, 0), ConfigError);
    CHECK_THROWS_AS(slepian_coefficients(u, rx.basis, 513), ConfigError);
}

TEST_CASE("normalized error", "[channel]")
{
    const auto& rx = default_receiver();
    const auto& w = rx.local->weights;
    const auto u = sample_field(LosScenario{}, 4, *rx.local);
    CHECK(normalized_error(u, u, w) == 0.0);
    CHECK(normalized_error(u, Eigen::VectorXcd::Zero(u.size()), w) == Approx(1.0).epsilon(1e-15));
    CHECK_THROWS_AS(normalized_error(Eigen::VectorXcd::Zero(u.size()), u, w), ConfigError);
    CHECK_THROWS_AS(normalized_error(u.head(3), u.head(3), w), ConfigError);

    double energy = 0.0;
    for (Eigen::Index j = 0; j < u.size(); ++j)
        energy += w[j] * std::norm(u[j]);
    for (int n : {1, 5, 10, 15}) {
        const auto g = slepian_coefficients(u, rx.basis, n);
        CHECK(std::abs(normalized_error(u, slepian_reconstruction(g, rx.basis), w) - (1.0 - g.squaredNorm() / energy)) <
              1e-10);
        const auto f = fourier_coefficients(u, *rx.local, n, 0.05);
        CHECK(std::abs(normalized_error(u, fourier_reconstruction(f, *rx.local, 0.05), w) -
                       (1.0 - f.squaredNorm() / energy)) < 1e-10);
    }

    // invariant under global amplitude and phase
    const cplx c(3.0, -4.0);
    const auto g = slepian_coefficients(u, rx.basis, 8);
    const double e1 = normalized_error(u, slepian_reconstruction(g, rx.basis), w);
    const double e2 = normalized_error(c * u, slepian_reconstruction(slepian_coefficients(c * u, rx.basis, 8), rx.basis), w);
    CHECK(e2 == Approx(e1).epsilon(1e-10));
}

TEST_CASE("experiment config validation", "[channel]")
{
    ExperimentConfig c;
    CHECK_NOTHROW(validate(c));
    auto bad = c;
    bad.trials = 0;
    CHECK_THROWS_AS(validate(bad), ConfigError);
    bad = c;
    bad.N_values = {3, 2};
    CHECK_THROWS_AS(validate(bad), ConfigError);
    bad = c;
    bad.N_values = {};
    CHECK_THROWS_AS(validate(bad), ConfigError);
    bad = c;
    bad.d_range = {0.2, 0.1};
    CHECK_THROWS_AS(validate(bad), ConfigError);
    bad = c;
    bad.N_values = {600};
    CHECK_THROWS_AS(validate(bad), ConfigError);
    bad = c;
    bad.polynomial_degree = -1;
    CHECK_THROWS_AS(validate(bad), ConfigError);
    CHECK(rayleigh_distance(0.05, 0.01) == Approx(0.125));
}

TEST_CASE("experiment runs are reproducible and well formed", "[channel]")
{
    for (auto mode : {ScenarioMode::parallel, ScenarioMode::random_tilt}) {
        INFO(to_string(mode));
        const auto cfg = small_config(mode, 24);
        const auto a = run_experiment(cfg);
        const auto b = run_experiment(cfg);
        REQUIRE(a.trials.size() == 24);
        for (std::size_t k = 0; k < a.N_values.size(); ++k) {
            CHECK(a.slepian[k].mean == b.slepian[k].mean);
            CHECK(a.fourier[k].mean == b.fourier[k].mean);
            CHECK(a.slepian[k].min <= a.slepian[k].mean);
            CHECK(a.slepian[k].mean <= a.slepian[k].max);
            CHECK(a.fourier[k].min <= a.fourier[k].mean);
            CHECK(a.fourier[k].mean <= a.fourier[k].max);
            CHECK(a.slepian[k].min >= 0.0);
            CHECK(a.fourier[k].min >= 0.0);
        }
        for (const auto& t : a.trials)
            for (std::size_t k = 1; k < t.slepian_error.size(); ++k)
                CHECK(t.slepian_error[k] <= t.slepian_error[k - 1] + 1e-12);
        CHECK(a.max_parseval_deviation < 1e-10);
        CHECK(a.near_field_trials + a.far_field_trials == 24);
        if (mode == ScenarioMode::parallel)
            CHECK(a.resampled == 0);
    }
}

TEST_CASE("single-trial runs repeat exactly", "[channel]")
{
    auto cfg = small_config(ScenarioMode::random_tilt, 1);
    const auto a = run_experiment(cfg);
    const auto b = run_experiment(cfg);
    CHECK(a.trials[0].slepian_error == b.trials[0].slepian_error);
    CHECK(a.trials[0].fourier_error == b.trials[0].fourier_error);
    CHECK(a.trials[0].distance_d == b.trials[0].distance_d);
    cfg.rng_seed += 1;
    CHECK(run_experiment(cfg).trials[0].distance_d != a.trials[0].distance_d);
}

TEST_CASE("default settings straddle the Rayleigh distance", "[channel]")
{
    const auto cfg = small_config(ScenarioMode::parallel, 200);
    const auto r = run_experiment(cfg);
    CHECK(r.rayleigh_distance == Approx(0.125));
    CHECK(r.near_field_trials > 0);
    CHECK(r.far_field_trials > 0);
    for (const auto& t : r.trials)
        CHECK(t.near_field == (t.distance_d < 0.125));
}

TEST_CASE("invalid random scenarios are rare at defaults", "[channel]")
{
    ExperimentConfig cfg;
    cfg.scenario_mode = ScenarioMode::random_tilt;
    int resampled = 0;
    const int draws = 20000;
    for (int t = 0; t < draws; ++t) {
        auto rng = trial_rng(cfg.rng_seed, t);
        const auto sc = detail::draw_scenario(cfg, rng, resampled);
        CHECK_NOTHROW(validate(sc));
    }
    CHECK(static_cast<double>(resampled) / (resampled + draws) < 0.01);
}
