#ifndef LIS_IO_HPP
#define LIS_IO_HPP

// CSV and JSON serialization for sweeps, patterns and channel reports.
// Numbers are written in shortest round-trip form, so a rerun on the same
// build reproduces files byte for byte.

#include "lis/channel.hpp"
#include "lis/eigen_dof.hpp"
#include "lis/types.hpp"

#include <json.hpp>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace lis {

inline std::string format_number(double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

/// Writes `contents` to path.tmp, then renames over path.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view contents)
{
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw ConfigError("cannot write '" + tmp.string() + "'");
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out)
            throw ConfigError("write failed for '" + tmp.string() + "'");
    }
    std::filesystem::rename(tmp, path);
}

/// Row-oriented CSV builder.
class CsvTable {
public:
    explicit CsvTable(std::initializer_list<std::string_view> header)
    {
        bool first = true;
        for (auto h : header) {
            if (!first)
                buf_ << ',';
            buf_ << h;
            first = false;
        }
        buf_ << '\n';
        columns_ = header.size();
    }

    explicit CsvTable(const std::vector<std::string>& header)
    {
        for (std::size_t i = 0; i < header.size(); ++i)
            buf_ << (i ? "," : "") << header[i];
        buf_ << '\n';
        columns_ = header.size();
    }

    CsvTable& cell(std::string_view s)
    {
        if (in_row_)
            buf_ << ',';
        buf_ << s;
        in_row_ = true;
        ++filled_;
        return *this;
    }
    CsvTable& cell(double v) { return cell(format_number(v)); }
    CsvTable& cell(int v) { return cell(std::to_string(v)); }
    CsvTable& cell(long v) { return cell(std::to_string(v)); }
    CsvTable& cell(long long v) { return cell(std::to_string(v)); }

    void end_row()
    {
        if (filled_ != columns_)
            throw Error("CSV row has " + std::to_string(filled_) + " cells, expected " + std::to_string(columns_));
        buf_ << '\n';
        in_row_ = false;
        filled_ = 0;
    }

    std::string str() const { return buf_.str(); }

    void save(const std::filesystem::path& path) const { write_file_atomic(path, buf_.str()); }

private:
    std::ostringstream buf_;
    std::size_t columns_ = 0;
    std::size_t filled_ = 0;
    bool in_row_ = false;
};

// ---------------------------------------------------------------------------
// DoF sweep

/// kappa_L,i,lambda_scaled with 1-based i.
inline CsvTable eigenvalue_sweep_table(const std::vector<DofReport>& reports)
{
    CsvTable t{"kappa_L", "i", "lambda_scaled"};
    for (const auto& r : reports)
        for (Eigen::Index i = 0; i < r.eigenvalues_scaled.size(); ++i)
            t.cell(r.kappa_L).cell(static_cast<long long>(i + 1)).cell(r.eigenvalues_scaled[i]).end_row();
    return t;
}

/// kappa_L,dof_th,dof_90,dof_99. dof_th is empty for shapes without a formula.
inline CsvTable dof_summary_table(const std::vector<DofReport>& reports)
{
    CsvTable t{"kappa_L", "dof_th", "dof_90", "dof_99"};
    for (const auto& r : reports) {
        t.cell(r.kappa_L);
        t.cell(r.dof_th ? format_number(*r.dof_th) : std::string());
        t.cell(r.dof_90).cell(r.dof_99).end_row();
    }
    return t;
}

// ---------------------------------------------------------------------------
// Channel experiment

inline CsvTable channel_report_table(const ChannelExperimentReport& report)
{
    CsvTable t{"N", "basis", "mean", "min", "max"};
    for (std::size_t k = 0; k < report.N_values.size(); ++k) {
        t.cell(report.N_values[k]).cell("slepian").cell(report.slepian[k].mean).cell(report.slepian[k].min)
            .cell(report.slepian[k].max).end_row();
        t.cell(report.N_values[k]).cell("fourier").cell(report.fourier[k].mean).cell(report.fourier[k].min)
            .cell(report.fourier[k].max).end_row();
    }
    return t;
}

inline CsvTable channel_trials_table(const ChannelExperimentReport& report)
{
    CsvTable t{"trial", "d", "theta_tx", "theta_rx", "zone", "N", "basis", "error"};
    for (std::size_t i = 0; i < report.trials.size(); ++i) {
        const auto& r = report.trials[i];
        for (std::size_t k = 0; k < report.N_values.size(); ++k) {
            for (const auto& [basis, err] : {std::pair<std::string_view, double>{"slepian", r.slepian_error[k]},
                                             std::pair<std::string_view, double>{"fourier", r.fourier_error[k]}}) {
                t.cell(static_cast<long long>(i)).cell(r.distance_d).cell(r.theta_tx).cell(r.theta_rx);
                t.cell(r.near_field ? "near" : "far").cell(report.N_values[k]).cell(basis).cell(err).end_row();
            }
        }
    }
    return t;
}

inline nlohmann::json to_json(const ExperimentConfig& c)
{
    return nlohmann::json{{"scenario_mode", std::string(to_string(c.scenario_mode))},
                          {"aperture_L", c.aperture_L},
                          {"beta", c.beta},
                          {"d_range", {c.d_range[0], c.d_range[1]}},
                          {"trials", c.trials},
                          {"N_values", c.N_values},
                          {"polynomial_degree", c.polynomial_degree},
                          {"rng_seed", c.rng_seed},
                          {"rx_resolution", c.rx_resolution},
                          {"tx_resolution", c.tx_resolution}};
}

/// Missing keys keep their defaults; unknown keys are rejected.
inline ExperimentConfig experiment_config_from_json(const nlohmann::json& j)
{
    if (!j.is_object())
        throw ConfigError("experiment config must be a JSON object");
    static const std::set<std::string> known{"scenario_mode", "aperture_L",        "beta",     "d_range",
                                             "trials",        "N_values",          "rng_seed", "rx_resolution",
                                             "tx_resolution", "polynomial_degree"};
    for (const auto& item : j.items())
        if (!known.count(item.key()))
            throw ConfigError("unknown experiment config key '" + item.key() + "'");
    ExperimentConfig c;
    try {
        if (j.contains("scenario_mode"))
            c.scenario_mode = parse_scenario_mode(j.at("scenario_mode").get<std::string>());
        if (j.contains("aperture_L"))
            c.aperture_L = j.at("aperture_L").get<double>();
        if (j.contains("beta"))
            c.beta = j.at("beta").get<double>();
        if (j.contains("d_range")) {
            const auto r = j.at("d_range").get<std::vector<double>>();
            if (r.size() != 2)
                throw ConfigError("d_range must have two entries");
            c.d_range = {r[0], r[1]};
        }
        if (j.contains("trials"))
            c.trials = j.at("trials").get<int>();
        if (j.contains("N_values"))
            c.N_values = j.at("N_values").get<std::vector<int>>();
        if (j.contains("polynomial_degree"))
            c.polynomial_degree = j.at("polynomial_degree").get<int>();
        if (j.contains("rng_seed"))
            c.rng_seed = j.at("rng_seed").get<std::uint64_t>();
        if (j.contains("rx_resolution"))
            c.rx_resolution = j.at("rx_resolution").get<int>();
        if (j.contains("tx_resolution"))
            c.tx_resolution = j.at("tx_resolution").get<int>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad experiment config: ") + e.what());
    }
    validate(c);
    return c;
}

} // namespace lis

#endif
