#ifndef LIS_CLI_HPP
#define LIS_CLI_HPP

// Command-line front end: dofs, slepian, spectra, channel.
//
// Every command resolves its options into a JSON config, runs from that config
// and writes it into manifest.json next to its outputs. `--from-manifest`
// replays a previous run from its manifest.
//
// Exit codes: 0 ok, 2 configuration error, 3 numerical failure.

#include "lis/channel.hpp"
#include "lis/eigen_dof.hpp"
#include "lis/geometry.hpp"
#include "lis/io.hpp"
#include "lis/kernel.hpp"
#include "lis/spectrum.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <omp.h>

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

extern "C" void openblas_set_num_threads(int);

#ifndef LIS_VERSION_STRING
#define LIS_VERSION_STRING "0.0.0"
#endif

namespace lis::cli {

using json = nlohmann::json;

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;

/// Parses "4pi", "4*pi", "pi", "0.5pi" or a plain number.
inline double parse_kappa_l(std::string text)
{
    std::erase_if(text, [](unsigned char ch) { return std::isspace(ch); });
    if (text.empty())
        throw ConfigError("empty kappa*L value");
    double factor = 1.0;
    std::string number = text;
    if (text.size() >= 2 && text.compare(text.size() - 2, 2, "pi") == 0) {
        factor = std::numbers::pi;
        number = text.substr(0, text.size() - 2);
        if (!number.empty() && number.back() == '*')
            number.pop_back();
        if (number.empty())
            number = "1";
    }
    double value = 0.0;
    try {
        std::size_t used = 0;
        value = std::stod(number, &used);
        if (used != number.size())
            throw std::invalid_argument(number);
    } catch (const std::logic_error&) {
        throw ConfigError("cannot parse kappa*L value '" + text + "'");
    }
    value *= factor;
    if (!(value > 0.0) || !std::isfinite(value))
        throw ConfigError("kappa*L must be positive, got '" + text + "'");
    return value;
}

/// Accepts repeated flags and comma-separated lists.
inline std::vector<double> parse_kappa_list(const std::vector<std::string>& items)
{
    std::vector<double> out;
    for (const auto& item : items) {
        std::stringstream ss(item);
        std::string part;
        while (std::getline(ss, part, ','))
            if (!part.empty())
                out.push_back(parse_kappa_l(part));
    }
    return out;
}

namespace detail {

inline std::string utc_timestamp()
{
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

inline void apply_threads(int threads)
{
    if (threads > 0) {
        omp_set_num_threads(threads);
        openblas_set_num_threads(threads);
    }
}

inline void write_manifest(const std::filesystem::path& out_dir, const std::string& command, const json& config,
                           const std::vector<std::string>& outputs, const json& derived)
{
    json m{{"command", command},
           {"config", config},
           {"tool_version", LIS_VERSION_STRING},
           {"rng_seed", config.value("seed", std::uint64_t{0})},
           {"timestamp", utc_timestamp()},
           {"outputs", outputs},
           {"derived", derived}};
    write_file_atomic(out_dir / "manifest.json", m.dump(2) + "\n");
}

inline json read_manifest(const std::filesystem::path& path, const std::string& command)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open manifest '" + path.string() + "'");
    json m;
    try {
        in >> m;
    } catch (const json::exception& e) {
        throw ConfigError("malformed manifest '" + path.string() + "': " + e.what());
    }
    if (!m.is_object() || !m.contains("config") || m.value("command", "") != command)
        throw ConfigError("manifest '" + path.string() + "' was not written by '" + command + "'");
    return m.at("config");
}

inline std::filesystem::path prepare_out_dir(const std::string& dir)
{
    if (dir.empty())
        throw ConfigError("--out-dir is required");
    std::filesystem::path p(dir);
    std::error_code ec;
    std::filesystem::create_directories(p, ec);
    if (ec || !std::filesystem::is_directory(p))
        throw ConfigError("cannot create output directory '" + dir + "'");
    return p;
}

// Options shared by the geometry-based commands.
struct GeometryOptions {
    std::string geometry = "linear";
    std::string mesh;
    std::string line_rule = "midpoint";
    int nodes = 0; // 0: default for the shape
};

inline void add_geometry_options(CLI::App* sub, GeometryOptions& g)
{
    sub->add_option("--geometry", g.geometry, "linear | circular | square | paraboloid | custom");
    sub->add_option("--mesh", g.mesh, "lismesh v1 file (custom geometry)");
    sub->add_option("--nodes", g.nodes, "node/cell count (default depends on the shape)");
    sub->add_option("--line-rule", g.line_rule, "node rule for the linear shape: midpoint | gauss-legendre");
}

struct CommonOptions {
    std::string out_dir;
    std::uint64_t seed = 1;
    int threads = 0;
    std::optional<double> beta;
    std::optional<double> aperture;
    std::string from_manifest;
};

inline void add_common_options(CLI::App* sub, CommonOptions& c)
{
    sub->add_option("--out-dir", c.out_dir, "directory receiving all outputs")->required();
    sub->add_option("--seed", c.seed, "random seed");
    sub->add_option("--threads", c.threads, "worker thread cap (0: runtime default)");
    sub->add_option("--beta", c.beta, "wavelength in meters");
    sub->add_option("--aperture", c.aperture, "aperture L in meters");
    sub->add_option("--from-manifest", c.from_manifest, "rerun from a previous manifest.json");
}

inline json geometry_config(const GeometryOptions& g, const CommonOptions& c)
{
    const auto kind = parse_geometry_kind(g.geometry);
    json j{{"geometry", std::string(to_string(kind))},
           {"aperture", c.aperture.value_or(1.0)},
           {"nodes", g.nodes > 0 ? g.nodes : default_resolution(kind)},
           {"line_rule", std::string(to_string(parse_line_rule(g.line_rule)))},
           {"threads", c.threads},
           {"seed", c.seed}};
    if (kind == GeometryKind::custom) {
        if (g.mesh.empty())
            throw ConfigError("--geometry custom requires --mesh");
        j["mesh"] = std::filesystem::absolute(g.mesh).string();
    }
    return j;
}

inline GeometrySpec geometry_spec(const json& cfg)
{
    GeometrySpec spec;
    spec.kind = parse_geometry_kind(cfg.at("geometry").get<std::string>());
    spec.aperture_L = cfg.at("aperture").get<double>();
    spec.resolution = cfg.at("nodes").get<int>();
    spec.line_rule = parse_line_rule(cfg.value("line_rule", std::string("midpoint")));
    if (cfg.contains("mesh"))
        spec.mesh_path = cfg.at("mesh").get<std::string>();
    return spec;
}

/// A single kappa*L from --kappa-l or --beta (exactly one of them).
inline double single_kappa_l(const std::vector<std::string>& kappa_items, const CommonOptions& c)
{
    const auto values = parse_kappa_list(kappa_items);
    const double aperture = c.aperture.value_or(1.0);
    if (!values.empty() && c.beta)
        throw ConfigError("give either --kappa-l or --beta, not both");
    if (c.beta)
        return Wavenumber::from_wavelength(*c.beta).kappa() * aperture;
    if (values.size() != 1)
        throw ConfigError("exactly one --kappa-l value is required");
    return values.front();
}

inline json manifold_derived(const SampledManifold& m, const GeometrySpec& spec)
{
    json d{{"node_count", m.size()}, {"measure", m.measure()}, {"dim", m.dim}};
    if (spec.kind != GeometryKind::custom)
        d["analytic_measure"] = analytic_measure(spec.kind, spec.aperture_L);
    if (spec.kind == GeometryKind::paraboloid)
        d["paraboloid_area"] = paraboloid::area(spec.aperture_L);
    return d;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Command bodies, driven by resolved configs.

inline void run_dofs(const json& cfg, const std::filesystem::path& out)
{
    detail::apply_threads(cfg.value("threads", 0));
    const auto spec = detail::geometry_spec(cfg);
    const auto kappas = cfg.at("kappa_L").get<std::vector<double>>();
    const auto manifold = std::make_shared<const SampledManifold>(build_manifold(spec));

    std::vector<DofReport> reports;
    std::vector<std::string> outputs{"eigenvalues.csv", "dof_summary.csv"};
    json traces = json::array();
    for (std::size_t i = 0; i < kappas.size(); ++i) {
        if (!(kappas[i] > 0.0) || (i > 0 && !(kappas[i] > kappas[i - 1])))
            throw ConfigError("kappa*L values must be positive and ascending");
        const auto k = Wavenumber::from_kappa_l(kappas[i], spec.aperture_L);
        const auto op = assemble(manifold, k);
        if (cfg.value("dump_operator", false)) {
            const std::string name = "operator_" + std::to_string(i + 1) + ".csv";
            write_operator_csv(op, out / name);
            outputs.push_back(name);
        }
        double clipped = 0.0;
        const auto values = solve_eigenvalues(op, &clipped);
        if (clipped > 0.0)
            std::cerr << "dofs: kappa_L=" << kappas[i] << ": clipped negative eigenvalues up to " << clipped << '\n';
        reports.push_back(make_dof_report(spec.kind, kappas[i], values));
        traces.push_back({{"kappa_L", kappas[i]},
                          {"eigenvalue_sum", values.sum()},
                          {"trace_expected", 2.0 / (k.beta() * k.beta()) * manifold->measure()}});
    }
    eigenvalue_sweep_table(reports).save(out / "eigenvalues.csv");
    dof_summary_table(reports).save(out / "dof_summary.csv");
    auto derived = detail::manifold_derived(*manifold, spec);
    derived["traces"] = traces;
    detail::write_manifest(out, "dofs", cfg, outputs, derived);
}

inline void run_slepian(const json& cfg, const std::filesystem::path& out)
{
    detail::apply_threads(cfg.value("threads", 0));
    const auto spec = detail::geometry_spec(cfg);
    const double kl = cfg.at("kappa_L").get<double>();
    const int count = cfg.at("count").get<int>();
    const auto manifold = std::make_shared<const SampledManifold>(build_manifold(spec));
    if (count < 1 || count > static_cast<int>(manifold->size()))
        throw ConfigError("--count must lie in [1, " + std::to_string(manifold->size()) + "]");

    const auto spectrum = solve(assemble(manifold, Wavenumber::from_kappa_l(kl, spec.aperture_L)));

    // in-run orthonormality check under the quadrature weights
    double deviation = 0.0;
    const auto& w = manifold->weights;
    for (int i = 0; i < count; ++i)
        for (int k = 0; k <= i; ++k) {
            double g = 0.0;
            for (std::size_t j = 0; j < manifold->size(); ++j)
                g += w[j] * spectrum.slepian_values(static_cast<Eigen::Index>(j), i) *
                     spectrum.slepian_values(static_cast<Eigen::Index>(j), k);
            deviation = std::max(deviation, std::abs(g - (i == k ? 1.0 : 0.0)));
        }
    if (deviation > 1e-8)
        throw NumericalError("Slepian functions not orthonormal: deviation " + std::to_string(deviation));

    std::vector<std::string> header{"node", "x", "y", "z", "weight"};
    for (int i = 0; i < count; ++i)
        header.push_back("psi_" + std::to_string(i + 1));
    CsvTable fn(header);
    for (std::size_t j = 0; j < manifold->size(); ++j) {
        const auto& p = manifold->nodes[j];
        fn.cell(static_cast<long long>(j)).cell(p.x()).cell(p.y()).cell(p.z()).cell(w[j]);
        for (int i = 0; i < count; ++i)
            fn.cell(spectrum.slepian_values(static_cast<Eigen::Index>(j), i));
        fn.end_row();
    }
    fn.save(out / "slepian_functions.csv");

    CsvTable ev{"i", "lambda", "lambda_scaled"};
    for (Eigen::Index i = 0; i < spectrum.size(); ++i)
        ev.cell(static_cast<long long>(i + 1)).cell(spectrum.eigenvalues[i])
            .cell(spectrum.eigenvalues[i] / spectrum.eigenvalues[0]).end_row();
    ev.save(out / "slepian_eigenvalues.csv");

    auto derived = detail::manifold_derived(*manifold, spec);
    derived["orthonormality_deviation"] = deviation;
    derived["clipped_magnitude"] = spectrum.clipped_magnitude;
    detail::write_manifest(out, "slepian", cfg, {"slepian_functions.csv", "slepian_eigenvalues.csv"}, derived);
}

inline void run_spectra(const json& cfg, const std::filesystem::path& out)
{
    detail::apply_threads(cfg.value("threads", 0));
    const auto spec = detail::geometry_spec(cfg);
    const double kl = cfg.at("kappa_L").get<double>();
    const int count = cfg.at("count").get<int>();
    const int grid_size = cfg.at("grid").get<int>();
    const auto manifold = std::make_shared<const SampledManifold>(build_manifold(spec));
    if (count < 1 || count > static_cast<int>(manifold->size()))
        throw ConfigError("--count must lie in [1, " + std::to_string(manifold->size()) + "]");
    const auto grid = std::make_shared<const SphereGrid>(sphere_grid(grid_size));
    const auto spectrum = solve(assemble(manifold, Wavenumber::from_kappa_l(kl, spec.aperture_L)));

    CsvTable t{"psi", "theta", "phi", "abs", "arg"};
    for (int i = 0; i < count; ++i) {
        const auto pattern = far_field(i, spectrum, grid);
        for (std::size_t g = 0; g < grid->size(); ++g) {
            const auto& d = grid->directions[g];
            const auto v = pattern.values[static_cast<Eigen::Index>(g)];
            t.cell(i + 1).cell(std::acos(std::clamp(d.z(), -1.0, 1.0))).cell(std::atan2(d.y(), d.x()))
                .cell(std::abs(v)).cell(std::arg(v)).end_row();
        }
    }
    t.save(out / "spectra.csv");

    const auto gram = plancherel_check(spectrum, *grid, count);
    CsvTable pg{"i", "k", "re", "im"};
    for (int i = 0; i < count; ++i)
        for (int k = 0; k < count; ++k)
            pg.cell(i + 1).cell(k + 1).cell(gram(i, k).real()).cell(gram(i, k).imag()).end_row();
    pg.save(out / "plancherel.csv");

    auto derived = detail::manifold_derived(*manifold, spec);
    derived["plancherel_max_off_diagonal"] = max_relative_off_diagonal(gram);
    detail::write_manifest(out, "spectra", cfg, {"spectra.csv", "plancherel.csv"}, derived);
}

inline void run_channel(const json& cfg, const std::filesystem::path& out)
{
    detail::apply_threads(cfg.value("threads", 0));
    const auto exp = experiment_config_from_json(cfg.at("experiment"));
    const auto report = run_experiment(exp);
    std::vector<std::string> outputs{"channel_report.csv"};
    channel_report_table(report).save(out / "channel_report.csv");
    if (cfg.value("dump_trials", false)) {
        channel_trials_table(report).save(out / "channel_trials.csv");
        outputs.push_back("channel_trials.csv");
    }
    if (report.resampled > 0)
        std::cerr << "channel: resampled " << report.resampled << " invalid scenarios\n";
    json derived{{"resampled", report.resampled},
                 {"resample_rate", static_cast<double>(report.resampled) / (report.resampled + exp.trials)},
                 {"near_field_trials", report.near_field_trials},
                 {"far_field_trials", report.far_field_trials},
                 {"rayleigh_distance", report.rayleigh_distance},
                 {"max_parseval_deviation", report.max_parseval_deviation},
                 {"propagation_model", report.propagation_model}};
    detail::write_manifest(out, "channel", cfg, outputs, derived);
}

// ---------------------------------------------------------------------------

/// Entry point. Returns the process exit code; never throws.
inline int run(int argc, const char* const* argv, std::ostream& err = std::cerr)
{
    CLI::App app{"Slepian concentration analysis of continuous-aperture antennas"};
    app.require_subcommand(1);
    app.set_version_flag("--version", LIS_VERSION_STRING);

    detail::CommonOptions common;
    detail::GeometryOptions geo;
    std::vector<std::string> kappa_items;
    bool dump_operator = false;
    int count = 9;
    int grid = kDefaultSphereGridSize;
    std::string config_path;
    bool dump_trials = false;

    auto* dofs = app.add_subcommand("dofs", "eigenvalue sweep and DoF summary over kappa*L");
    detail::add_common_options(dofs, common);
    detail::add_geometry_options(dofs, geo);
    dofs->add_option("--kappa-l", kappa_items, "kappa*L values, e.g. 4pi or 2pi,4pi,6pi");
    dofs->add_flag("--dump-operator", dump_operator, "write each assembled operator as CSV");

    auto* slep = app.add_subcommand("slepian", "export the first Slepian functions at the nodes");
    detail::add_common_options(slep, common);
    detail::add_geometry_options(slep, geo);
    slep->add_option("--kappa-l", kappa_items, "kappa*L value");
    slep->add_option("--count", count, "number of Slepian functions");

    auto* spectra = app.add_subcommand("spectra", "export far-field patterns on the wavenumber sphere");
    detail::add_common_options(spectra, common);
    detail::add_geometry_options(spectra, geo);
    spectra->add_option("--kappa-l", kappa_items, "kappa*L value");
    spectra->add_option("--count", count, "number of patterns");
    spectra->add_option("--grid", grid, "sphere grid size")->capture_default_str();

    auto* channel = app.add_subcommand("channel", "Slepian vs Fourier channel-expansion experiment");
    detail::add_common_options(channel, common);
    channel->add_option("--config", config_path, "experiment config (JSON)");
    channel->add_flag("--dump-trials", dump_trials, "also write per-trial errors");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::ostringstream sink;
        app.exit(e, sink, err);
        return kExitConfig;
    }

    try {
        const auto out = detail::prepare_out_dir(common.out_dir);
        const bool replay = !common.from_manifest.empty();
        auto sub = app.get_subcommands().front()->get_name();
        json cfg;
        if (replay)
            cfg = detail::read_manifest(common.from_manifest, sub);

        if (sub == "dofs") {
            if (!replay) {
                cfg = detail::geometry_config(geo, common);
                auto values = parse_kappa_list(kappa_items);
                if (!values.empty() && common.beta)
                    throw ConfigError("give either --kappa-l or --beta, not both");
                if (common.beta)
                    values = {Wavenumber::from_wavelength(*common.beta).kappa() * cfg["aperture"].get<double>()};
                if (values.empty())
                    throw ConfigError("dofs needs --kappa-l or --beta");
                cfg["kappa_L"] = values;
                cfg["dump_operator"] = dump_operator;
            }
            run_dofs(cfg, out);
        } else if (sub == "slepian") {
            if (!replay) {
                cfg = detail::geometry_config(geo, common);
                cfg["kappa_L"] = detail::single_kappa_l(kappa_items, common);
                cfg["count"] = count;
            }
            run_slepian(cfg, out);
        } else if (sub == "spectra") {
            if (!replay) {
                cfg = detail::geometry_config(geo, common);
                cfg["kappa_L"] = detail::single_kappa_l(kappa_items, common);
                cfg["count"] = count;
                cfg["grid"] = grid;
            }
            run_spectra(cfg, out);
        } else if (sub == "channel") {
            if (!replay) {
                if (config_path.empty())
                    throw ConfigError("channel needs --config <file.json>");
                std::ifstream in(config_path);
                if (!in)
                    throw ConfigError("cannot open config '" + config_path + "'");
                json file;
                try {
                    in >> file;
                } catch (const json::exception& e) {
                    throw ConfigError("malformed config '" + config_path + "': " + e.what());
                }
                auto exp = experiment_config_from_json(file);
                if (channel->count("--seed"))
                    exp.rng_seed = common.seed;
                if (common.beta)
                    exp.beta = *common.beta;
                if (common.aperture)
                    exp.aperture_L = *common.aperture;
                validate(exp);
                cfg = json{{"experiment", to_json(exp)},
                           {"threads", common.threads},
                           {"seed", exp.rng_seed},
                           {"dump_trials", dump_trials}};
            }
            run_channel(cfg, out);
        }
        return kExitOk;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const json::exception& e) {
        err << "error: bad configuration: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    }
}

} // namespace lis::cli

#endif
