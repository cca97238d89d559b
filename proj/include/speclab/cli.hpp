#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "auditor.hpp"
#include "io.hpp"

namespace speclab {

enum ExitCode : int { exit_ok = 0, exit_config = 1, exit_blow_up = 2, exit_violation = 3 };

/// One axis of a `--sweep key=v1,v2,...` argument.
struct SweepAxis {
    std::string key;
    std::vector<double> values;
};

inline SweepAxis parse_sweep(const std::string& text)
{
    const auto eq = text.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ConfigError("sweep", "expected key=v1,v2,... got '" + text + "'");
    SweepAxis axis{detail::trim(text.substr(0, eq)), {}};
    for (const auto& item : detail::split_list({text.substr(eq + 1)}))
        axis.values.push_back(detail::parse_double("sweep." + axis.key, item));
    if (axis.values.empty())
        throw ConfigError("sweep", "no values for '" + axis.key + "'");
    return axis;
}

/// Set one estimate parameter by its config key.
inline void set_estimate_value(EstimateParams& est, const std::string& key, double value)
{
    static const std::vector<std::string> keys = {"p",  "beta",      "T",        "t_freeze", "c1",    "c2",
                                                  "c3", "c4",        "c_generic", "c_p",     "c0_embed",
                                                  "gamma_star", "v0_l2", "v0_l6", "vt0_l2",  "phi0_p", "X0", "B0"};
    if (key == "mu")
        est.mu = value;
    else if (key == "nu")
        est.nu = value;
    else if (key == "gamma")
        est.gamma = value;
    else if (key.rfind("c.", 0) == 0 || std::find(keys.begin(), keys.end(), key) != keys.end()) {
        Config tmp;
        tmp.est = est;
        apply_config_value(tmp, key, {format_number(value)});
        est = tmp.est;
    } else {
        throw ConfigError(key, "not an estimate parameter");
    }
}

/// Cartesian product of the axes, first axis slowest.
inline std::vector<std::vector<double>> sweep_points(const std::vector<SweepAxis>& axes)
{
    std::vector<std::vector<double>> out = {{}};
    for (const auto& axis : axes) {
        std::vector<std::vector<double>> next;
        for (const auto& prefix : out)
            for (double v : axis.values) {
                auto p = prefix;
                p.push_back(v);
                next.push_back(std::move(p));
            }
        out = std::move(next);
    }
    return out;
}

inline std::vector<std::string> fixed_point_row(const FixedPointResult& r, double nu)
{
    std::string violation = r.regime_violation ? *r.regime_violation : (r.failure ? *r.failure : "");
    for (char& c : violation)
        if (c == ',' || c == '\n')
            c = ';';
    return {format_number(nu),
            format_number(r.A),
            std::to_string(r.iterations),
            format_number(r.contraction_modulus),
            r.converged ? "1" : "0",
            r.relaxed ? "1" : "0",
            r.regime_violation ? "0" : "1",
            violation,
            format_number(r.lower_bound)};
}

inline const std::vector<std::string>& fixed_point_header()
{
    static const std::vector<std::string> h = {"nu",        "A",        "iterations", "contraction_modulus", "converged",
                                               "relaxed",   "regime_ok", "violation", "lower_bound"};
    return h;
}

namespace detail {

struct CommonArgs {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<double> nu;
    std::vector<std::string> checks;
};

inline Config resolve_config(const CommonArgs& a)
{
    Config cfg = load_config(a.config);
    if (a.seed)
        cfg.seed = *a.seed;
    if (a.nu)
        cfg.physics.nu = *a.nu;
    if (!a.out.empty())
        cfg.output_dir = a.out;
    if (!a.checks.empty())
        cfg.checks = split_list(a.checks);
    cfg.sync();
    cfg.validate();
    return cfg;
}

inline std::filesystem::path prepare_dir(const std::string& dir)
{
    std::filesystem::path p(dir.empty() ? "." : dir);
    std::error_code ec;
    std::filesystem::create_directories(p, ec);
    if (ec)
        throw IoError("cannot create '" + p.string() + "': " + ec.message());
    return p;
}

struct RunOutput {
    Trajectory trajectory;
    InitialData data;
};

inline RunOutput simulate_and_write(const Config& cfg, std::ostream& out)
{
    const auto dir = prepare_dir(cfg.output_dir);
    const Grid g = Grid::create(cfg.grid_n);
    const auto start = std::chrono::steady_clock::now();
    InitialData data = make_initial_data(g, cfg.scenario, cfg.physics, cfg.est, cfg.seed);
    Trajectory tr = run_from(cfg, data);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_timeseries(tr, dir / "timeseries.csv");
    write_json(make_manifest(cfg, data, tr, secs).to_json(), dir / "manifest.json");
    out << "wrote " << (dir / "timeseries.csv").string() << " (" << tr.ledger.size() << " samples)\n";
    if (tr.blow_up)
        out << "blow-up: " << *tr.blow_up << '\n';
    return {std::move(tr), std::move(data)};
}

} // namespace detail

/// Entry point of the command-line tool; returns the process exit code.
inline int run_cli(int argc, char** argv, std::ostream& out = std::cout, std::ostream& err = std::cerr)
{
    CLI::App app{"Spectral simulation and estimate audit of the bulk-viscosity regularized flow"};
    app.name("speclab");
    app.require_subcommand(1);

    detail::CommonArgs common;
    std::vector<std::string> sweeps;
    std::string input;

    auto add_common = [&](CLI::App* sub, bool config_required) {
        auto* opt = sub->add_option("--config", common.config, "configuration file");
        if (config_required)
            opt->required();
        sub->add_option("--out", common.out, "output directory");
        sub->add_option("--seed", common.seed, "random seed override");
        sub->add_option("--nu", common.nu, "bulk viscosity override");
    };

    auto* run = app.add_subcommand("run", "simulate and write the time series and manifest");
    add_common(run, true);
    auto* audit = app.add_subcommand("audit", "simulate, then audit identities and inequalities");
    add_common(audit, true);
    audit->add_option("--check", common.checks, "audit identifiers (repeatable or comma separated)");
    auto* fixed = app.add_subcommand("fixed-point", "solve the self-bound for A over a parameter sweep");
    add_common(fixed, false);
    fixed->add_option("--sweep", sweeps, "key=v1,v2,...; repeated sweeps form a product");
    auto* decomp = app.add_subcommand("decompose", "split a vector field file into its potentials");
    decomp->add_option("--input", input, "field file")->required();
    decomp->add_option("--out", common.out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return exit_ok;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return exit_ok;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return exit_config;
    }

    try {
        if (run->parsed()) {
            const Config cfg = detail::resolve_config(common);
            const auto res = detail::simulate_and_write(cfg, out);
            return res.trajectory.blow_up ? exit_blow_up : exit_ok;
        }
        if (audit->parsed()) {
            const Config cfg = detail::resolve_config(common);
            const auto res = detail::simulate_and_write(cfg, out);
            const auto reports = run_audits(res.trajectory, cfg);
            const auto dir = detail::prepare_dir(cfg.output_dir);
            std::ofstream f(dir / "audit.txt", std::ios::binary);
            if (!f)
                throw IoError("cannot write '" + (dir / "audit.txt").string() + "'");
            write_audit_text(f, reports);
            write_audit_text(out, reports);
            if (res.trajectory.blow_up)
                return exit_blow_up;
            return any_violated(reports) ? exit_violation : exit_ok;
        }
        if (fixed->parsed()) {
            EstimateParams base;
            if (!common.config.empty()) {
                const Config cfg = detail::resolve_config(common);
                base = cfg.est;
            }
            if (common.nu)
                base.nu = *common.nu;
            std::vector<SweepAxis> axes;
            for (const auto& s : sweeps)
                axes.push_back(parse_sweep(s));
            std::vector<std::vector<std::string>> rows;
            std::vector<std::string> header;
            for (const auto& a : axes)
                if (a.key != "nu")
                    header.push_back(a.key);
            for (const auto& h : fixed_point_header())
                header.push_back(h);
            for (const auto& point : sweep_points(axes)) {
                EstimateParams est = base;
                std::vector<std::string> row;
                for (std::size_t i = 0; i < axes.size(); ++i) {
                    set_estimate_value(est, axes[i].key, point[i]);
                    if (axes[i].key != "nu")
                        row.push_back(format_number(point[i]));
                }
                est.validate();
                for (auto& cell : fixed_point_row(solve_A(est), est.nu))
                    row.push_back(std::move(cell));
                rows.push_back(std::move(row));
            }
            const auto dir = detail::prepare_dir(common.out.empty() ? "." : common.out);
            write_csv(dir / "fixed_point.csv", header, rows);
            out << "wrote " << (dir / "fixed_point.csv").string() << " (" << rows.size() << " rows)\n";
            return exit_ok;
        }
        if (decomp->parsed()) {
            const RealField f = read_field(input);
            if (f.rank() != Rank::vector)
                throw UsageError("decompose needs a vector field");
            const SpectralField v = to_spectral(f);
            const PotentialPair pp = decompose(v);
            const SpectralField gp = gradient(pp.phi);
            const SpectralField rp = curl(pp.psi);
            const auto dir = detail::prepare_dir(common.out.empty() ? "." : common.out);
            write_field(to_real(pp.phi), dir / "phi.field");
            write_field(to_real(pp.psi), dir / "psi.field");
            const double nv = l2_norm_sq(v);
            nlohmann::json rep;
            rep["grid_n"] = f.grid().n();
            rep["v_l2sq"] = nv;
            rep["grad_phi_l2sq"] = l2_norm_sq(gp);
            rep["rot_psi_l2sq"] = l2_norm_sq(rp);
            rep["orthogonality"] = nv > 0.0 ? std::abs(inner(gp, rp)) / nv : 0.0;
            rep["recompose_error"] = std::sqrt(l2_norm_sq(recompose(pp) - v) / std::max(nv, 1e-300));
            rep["div_psi_l2"] = std::sqrt(l2_norm_sq(divergence(pp.psi)));
            write_json(rep, dir / "decompose.json");
            out << rep.dump(2) << '\n';
            return exit_ok;
        }
    } catch (const ConfigError& e) {
        err << "configuration error: " << e.what() << '\n';
        return exit_config;
    } catch (const BlowUpError& e) {
        err << "blow-up: " << e.what() << '\n';
        return exit_blow_up;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_config;
    }
    err << app.help();
    return exit_config;
}

} // namespace speclab
