#include "lis/cli.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using Catch::Approx;
using namespace lis;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name)
{
    const auto p = fs::temp_directory_path() / ("lis_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

int run_cli(std::vector<std::string> args, std::string* err_text = nullptr)
{
    args.insert(args.begin(), "lis");
    std::vector<const char*> argv;
    for (const auto& a : args)
        argv.push_back(a.c_str());
    std::ostringstream err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), err);
    if (err_text)
        *err_text = err.str();
    return code;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p)
{
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(slurp(p));
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ','))
            cells.push_back(cell);
        if (!line.empty() && line.back() == ',')
            cells.emplace_back();
        rows.push_back(cells);
    }
    return rows;
}

} // namespace

TEST_CASE("kappa*L parsing", "[cli]")
{
    const double pi = std::numbers::pi;
    CHECK(cli::parse_kappa_l("4pi") == 4.0 * pi);
    CHECK(cli::parse_kappa_l("4*pi") == 4.0 * pi);
    CHECK(cli::parse_kappa_l("pi") == pi);
    CHECK(cli::parse_kappa_l("0.5pi") == 0.5 * pi);
    CHECK(cli::parse_kappa_l(" 12.5 ") == 12.5);
    CHECK_THROWS_AS(cli::parse_kappa_l("abc"), ConfigError);
    CHECK_THROWS_AS(cli::parse_kappa_l("-pi"), ConfigError);
    CHECK_THROWS_AS(cli::parse_kappa_l("0"), ConfigError);
    CHECK_THROWS_AS(cli::parse_kappa_l("4pix"), ConfigError);
    CHECK_THROWS_AS(cli::parse_kappa_l(""), ConfigError);
    CHECK(cli::parse_kappa_list({"2pi,4pi", "6pi"}) == std::vector<double>{2 * pi, 4 * pi, 6 * pi});
}

TEST_CASE("dofs on the linear aperture", "[cli]")
{
    const auto out = scratch("dofs_linear");
    REQUIRE(run_cli({"dofs", "--geometry", "linear", "--kappa-l", "4pi", "--nodes", "512", "--out-dir", out}) == 0);
    const auto summary = read_csv(out / "dof_summary.csv");
    REQUIRE(summary.size() == 2);
    CHECK(summary[0] == std::vector<std::string>{"kappa_L", "dof_th", "dof_90", "dof_99"});
    CHECK(std::stod(summary[1][1]) == Approx(4.0).epsilon(1e-15));

    const auto eig = read_csv(out / "eigenvalues.csv");
    CHECK(eig.size() == 513);
    CHECK(eig[1][2] == "1");
    const auto manifest = nlohmann::json::parse(slurp(out / "manifest.json"));
    CHECK(manifest["command"] == "dofs");
    CHECK(manifest["config"]["nodes"] == 512);
    CHECK(manifest["outputs"].size() == 2);
    CHECK(manifest["derived"]["traces"][0]["eigenvalue_sum"].get<double>() ==
          Approx(manifest["derived"]["traces"][0]["trace_expected"].get<double>()).epsilon(1e-10));
    CHECK(manifest.contains("tool_version"));
    CHECK(manifest.contains("timestamp"));
}

TEST_CASE("dofs with --beta and --dump-operator", "[cli]")
{
    const auto out = scratch("dofs_beta");
    REQUIRE(run_cli({"dofs", "--geometry", "circular", "--nodes", "64", "--beta", "0.25", "--dump-operator", "--out-dir",
                     out}) == 0);
    const auto summary = read_csv(out / "dof_summary.csv");
    CHECK(std::stod(summary[1][0]) == Approx(8.0 * std::numbers::pi));
    const auto op = slurp(out / "operator_1.csv");
    CHECK(op.rfind("# lis-operator v1 64 64 ", 0) == 0);
    CHECK(run_cli({"dofs", "--geometry", "circular", "--kappa-l", "4pi", "--beta", "0.25", "--out-dir", out}) == 2);
}

TEST_CASE("dofs on a custom mesh leaves dof_th empty", "[cli]")
{
    const auto out = scratch("dofs_custom");
    const auto mesh = out / "square.lismesh";
    {
        std::ofstream m(mesh);
        m << "lismesh v1 2\nv 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3\nf 1 3 4\n";
    }
    REQUIRE(run_cli({"dofs", "--geometry", "custom", "--mesh", mesh, "--kappa-l", "4pi", "--out-dir", out}) == 0);
    const auto summary = read_csv(out / "dof_summary.csv");
    REQUIRE(summary.size() == 2);
    CHECK(summary[1][1].empty());
    CHECK(run_cli({"dofs", "--geometry", "custom", "--kappa-l", "4pi", "--out-dir", out}) == 2);
}

TEST_CASE("slepian export", "[cli]")
{
    const auto out = scratch("slepian");
    SECTION("single-node mesh gives a constant function")
    {
        const auto mesh = out / "seg.lismesh";
        {
            std::ofstream m(mesh);
            m << "lismesh v1 1\nv 0 0 0\nv 0.25 0 0\ne 1 2\n";
        }
        REQUIRE(run_cli({"slepian", "--geometry", "custom", "--mesh", mesh, "--kappa-l", "pi", "--count", "1",
                         "--out-dir", out}) == 0);
        const auto rows = read_csv(out / "slepian_functions.csv");
        REQUIRE(rows.size() == 2);
        CHECK(std::stod(rows[1][5]) == Approx(2.0)); // 1 / sqrt(0.25)
        CHECK(run_cli({"slepian", "--geometry", "custom", "--mesh", mesh, "--kappa-l", "pi", "--count", "2",
                       "--out-dir", out}) == 2);
    }
    SECTION("nine orthonormal functions on the linear aperture")
    {
        REQUIRE(run_cli({"slepian", "--geometry", "linear", "--nodes", "256", "--kappa-l", "4pi", "--count", "9",
                         "--out-dir", out}) == 0);
        const auto rows = read_csv(out / "slepian_functions.csv");
        REQUIRE(rows.size() == 257);
        REQUIRE(rows[0].size() == 14);
        CHECK(rows[0][13] == "psi_9");
        for (int a = 0; a < 9; ++a)
            for (int b = 0; b < 9; ++b) {
                double g = 0.0;
                for (std::size_t j = 1; j < rows.size(); ++j)
                    g += std::stod(rows[j][4]) * std::stod(rows[j][5 + a]) * std::stod(rows[j][5 + b]);
                CHECK(g == Approx(a == b ? 1.0 : 0.0).margin(1e-8));
            }
        const auto manifest = nlohmann::json::parse(slurp(out / "manifest.json"));
        CHECK(manifest["derived"]["orthonormality_deviation"].get<double>() <= 1e-8);
    }
}

TEST_CASE("spectra export", "[cli]")
{
    const auto out = scratch("spectra");
    REQUIRE(run_cli({"spectra", "--geometry", "linear", "--nodes", "128", "--kappa-l", "4pi", "--count", "2",
                     "--out-dir", out}) == 0);
    const auto rows = read_csv(out / "spectra.csv");
    CHECK(rows.size() == 1 + 2 * 2000);
    CHECK(rows[0] == std::vector<std::string>{"psi", "theta", "phi", "abs", "arg"});
    const auto gram = read_csv(out / "plancherel.csv");
    CHECK(gram.size() == 5);
    const auto manifest = nlohmann::json::parse(slurp(out / "manifest.json"));
    CHECK(manifest["config"]["grid"] == 2000);
    CHECK(run_cli({"spectra", "--geometry", "linear", "--nodes", "128", "--kappa-l", "4pi", "--grid", "8",
                   "--out-dir", out}) == 2);
}

TEST_CASE("channel command", "[cli]")
{
    const auto out = scratch("channel");
    std::string err;
    CHECK(run_cli({"channel", "--out-dir", out}, &err) == 2);
    CHECK(err.find("--config") != std::string::npos);
    CHECK(run_cli({"channel", "--config", (out / "missing.json").string(), "--out-dir", out}) == 2);

    const auto cfg = out / "exp.json";
    {
        std::ofstream c(cfg);
        c << R"({"trials": 6, "N_values": [1, 5, 10], "rx_resolution": 128, "tx_resolution": 128,
                 "scenario_mode": "random_tilt"})";
    }
    const auto a = out / "a", b = out / "b";
    REQUIRE(run_cli({"channel", "--config", cfg, "--seed", "9", "--dump-trials", "--out-dir", a}) == 0);
    REQUIRE(run_cli({"channel", "--config", cfg, "--seed", "9", "--dump-trials", "--out-dir", b}) == 0);
    CHECK(slurp(a / "channel_report.csv") == slurp(b / "channel_report.csv"));
    CHECK(slurp(a / "channel_trials.csv") == slurp(b / "channel_trials.csv"));
    const auto report = read_csv(a / "channel_report.csv");
    CHECK(report.size() == 1 + 3 * 2);
    CHECK(read_csv(a / "channel_trials.csv").size() == 1 + 6 * 3 * 2);

    const auto manifest = nlohmann::json::parse(slurp(a / "manifest.json"));
    CHECK(manifest["rng_seed"] == 9);
    CHECK(manifest["config"]["experiment"]["rng_seed"] == 9);
    CHECK(manifest["derived"].contains("propagation_model"));

    {
        std::ofstream c(out / "bad.json");
        c << R"({"trials": 3, "colour": "blue"})";
    }
    CHECK(run_cli({"channel", "--config", (out / "bad.json").string(), "--out-dir", out}) == 2);
}

TEST_CASE("manifest replay reproduces outputs byte for byte", "[cli]")
{
    const auto out = scratch("replay");
    REQUIRE(run_cli({"dofs", "--geometry", "square", "--nodes", "100", "--kappa-l", "2pi,4pi", "--out-dir", out / "a"}) ==
            0);
    REQUIRE(run_cli({"dofs", "--from-manifest", (out / "a" / "manifest.json").string(), "--out-dir", out / "b"}) == 0);
    for (const char* f : {"eigenvalues.csv", "dof_summary.csv"})
        CHECK(slurp(out / "a" / f) == slurp(out / "b" / f));

    // a manifest from another command is rejected
    CHECK(run_cli({"slepian", "--from-manifest", (out / "a" / "manifest.json").string(), "--out-dir", out / "c"}) == 2);
}

TEST_CASE("usage errors exit with 2", "[cli]")
{
    CHECK(run_cli({}) == 2);
    CHECK(run_cli({"bogus"}) == 2);
    CHECK(run_cli({"dofs", "--kappa-l", "4pi"}) == 2); // no --out-dir
    const auto out = scratch("usage");
    CHECK(run_cli({"dofs", "--geometry", "hexagon", "--kappa-l", "4pi", "--out-dir", out}) == 2);
    CHECK(run_cli({"dofs", "--geometry", "linear", "--kappa-l", "4pi,2pi", "--out-dir", out}) == 2);
    CHECK(run_cli({"dofs", "--geometry", "linear", "--out-dir", out}) == 2);
}
