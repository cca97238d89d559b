#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dynamics.hpp"

namespace speclab {

/// Audit identifiers accepted by the `checks` key and `--check`.
inline const std::vector<std::string>& audit_check_ids()
{
    static const std::vector<std::string> ids = {
        "energy",         "decay",     "gronwall-grad-phi", "gronwall-rot-psi", "gronwall-y",
        "gronwall-u",     "gronwall-grad-u", "phi-heat",    "stability",        "final-bound",
        "x-bound",        "difference-residual", "lr-identity"};
    return ids;
}

struct Config {
    int grid_n = 0;
    double dt = 1e-3;
    double t_end = 1.0;
    int sample_stride = 10;
    PhysicalParams physics;
    EstimateParams est;
    ScenarioOptions scenario;
    std::uint64_t seed = 0;
    StepOptions step;
    std::vector<std::string> checks;
    std::string output_dir = "out";
    double slab_start = 0.0;
    /// Checkpoint period T; NaN means the estimate default nu^(1-kappa).
    double period = std::numeric_limits<double>::quiet_NaN();
    bool keep_states = false;

    double period_value() const { return std::isnan(period) ? est.T_value() : period; }

    /// The estimate parameters always see the physical mu and nu.
    void sync() { est.mu = physics.mu, est.nu = physics.nu, est.gamma = scenario.gamma; }

    void validate() const
    {
        Grid::create(grid_n);
        if (!(dt > 0.0) || !std::isfinite(dt))
            throw ConfigError("dt", "must be positive");
        if (!(t_end > 0.0) || !std::isfinite(t_end))
            throw ConfigError("t_end", "must be positive");
        if (sample_stride < 1)
            throw ConfigError("sample_stride", "must be at least 1");
        physics.validate();
        est.validate();
        if (!(scenario.amplitude >= 0.0))
            throw ConfigError("amplitude", "must be nonnegative");
        if (scenario.k_min < 1 || scenario.k_max < scenario.k_min)
            throw ConfigError("k_max", "band needs 1 <= k_min <= k_max");
        if (scenario.grad_k_max < 1)
            throw ConfigError("grad_k_max", "must be at least 1");
        if (!(scenario.grad_fraction >= 0.0))
            throw ConfigError("grad_fraction", "must be nonnegative");
        if (!(slab_start >= 0.0))
            throw ConfigError("slab_start", "must be nonnegative");
        if (!std::isnan(period) && !(period > 0.0))
            throw ConfigError("period", "must be positive");
        const auto& ids = audit_check_ids();
        for (const auto& c : checks)
            if (std::find(ids.begin(), ids.end(), c) == ids.end())
                throw ConfigError("checks", "unknown audit identifier '" + c + "'");
    }

    /// Selected checks, all of them when none were named.
    std::vector<std::string> selected_checks() const { return checks.empty() ? audit_check_ids() : checks; }
};

namespace detail {

inline std::string trim(std::string s)
{
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos)
        return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

inline double parse_double(const std::string& key, const std::string& text)
{
    const std::string t = trim(text);
    double x = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), x);
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
        throw ConfigError(key, "expected a number, got '" + text + "'");
    return x;
}

template <typename Int>
Int parse_int(const std::string& key, const std::string& text)
{
    const std::string t = trim(text);
    Int x = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), x);
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
        throw ConfigError(key, "expected an integer, got '" + text + "'");
    return x;
}

inline bool parse_bool(const std::string& key, const std::string& text)
{
    std::string t = trim(text);
    std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (t == "true" || t == "1" || t == "yes" || t == "on")
        return true;
    if (t == "false" || t == "0" || t == "no" || t == "off")
        return false;
    throw ConfigError(key, "expected a boolean, got '" + text + "'");
}

inline std::vector<std::string> split_list(const std::vector<std::string>& inputs)
{
    std::vector<std::string> out;
    for (const auto& in : inputs) {
        std::stringstream ss(in);
        std::string item;
        while (std::getline(ss, item, ','))
            if (auto t = trim(item); !t.empty())
                out.push_back(t);
    }
    return out;
}

inline ScenarioKind parse_scenario(const std::string& text)
{
    const std::string t = trim(text);
    if (t == "taylor-green")
        return ScenarioKind::taylor_green;
    if (t == "random-band")
        return ScenarioKind::random_band;
    if (t == "paper-scaling")
        return ScenarioKind::paper_scaling;
    throw ConfigError("scenario", "unknown scenario '" + text + "'");
}

} // namespace detail

/// Assign one key. Keys are flat: the section a key sits in is ignored.
inline void apply_config_value(Config& cfg, const std::string& key, const std::vector<std::string>& inputs)
{
    using namespace detail;
    std::string joined;
    for (std::size_t i = 0; i < inputs.size(); ++i)
        joined += (i ? "," : "") + inputs[i];
    const auto num = [&] { return parse_double(key, joined); };
    const auto integer = [&] { return parse_int<int>(key, joined); };

    if (key.rfind("c.", 0) == 0) {
        const std::string tag = key.substr(2);
        if (tag.empty())
            throw ConfigError(key, "empty constant tag");
        cfg.est.c_override[tag] = num();
        return;
    }

    static const std::map<std::string, std::function<void(Config&, const std::function<double()>&,
                                                           const std::function<int()>&, const std::string&)>>
        table = {
            {"grid_n", [](Config& c, auto&, auto& i, auto&) { c.grid_n = i(); }},
            {"dt", [](Config& c, auto& d, auto&, auto&) { c.dt = d(); }},
            {"t_end", [](Config& c, auto& d, auto&, auto&) { c.t_end = d(); }},
            {"sample_stride", [](Config& c, auto&, auto& i, auto&) { c.sample_stride = i(); }},
            {"mu", [](Config& c, auto& d, auto&, auto&) { c.physics.mu = d(); }},
            {"nu", [](Config& c, auto& d, auto&, auto&) { c.physics.nu = d(); }},
            {"scenario", [](Config& c, auto&, auto&, auto& s) { c.scenario.kind = parse_scenario(s); }},
            {"amplitude", [](Config& c, auto& d, auto&, auto&) { c.scenario.amplitude = d(); }},
            {"k_min", [](Config& c, auto&, auto& i, auto&) { c.scenario.k_min = i(); }},
            {"k_max", [](Config& c, auto&, auto& i, auto&) { c.scenario.k_max = i(); }},
            {"grad_fraction", [](Config& c, auto& d, auto&, auto&) { c.scenario.grad_fraction = d(); }},
            {"grad_k_max", [](Config& c, auto&, auto& i, auto&) { c.scenario.grad_k_max = i(); }},
            {"gamma", [](Config& c, auto& d, auto&, auto&) { c.scenario.gamma = d(); }},
            {"gamma_star", [](Config& c, auto& d, auto&, auto&) { c.est.gamma_star = d(); }},
            {"p", [](Config& c, auto& d, auto&, auto&) { c.est.p = d(); }},
            {"beta", [](Config& c, auto& d, auto&, auto&) { c.est.beta = d(); }},
            {"T", [](Config& c, auto& d, auto&, auto&) { c.est.T = d(); }},
            {"t_freeze", [](Config& c, auto& d, auto&, auto&) { c.est.t_freeze = d(); }},
            {"c1", [](Config& c, auto& d, auto&, auto&) { c.est.c1 = d(); }},
            {"c2", [](Config& c, auto& d, auto&, auto&) { c.est.c2 = d(); }},
            {"c3", [](Config& c, auto& d, auto&, auto&) { c.est.c3 = d(); }},
            {"c4", [](Config& c, auto& d, auto&, auto&) { c.est.c4 = d(); }},
            {"c_generic", [](Config& c, auto& d, auto&, auto&) { c.est.c_generic = d(); }},
            {"c_p", [](Config& c, auto& d, auto&, auto&) { c.est.c_p = d(); }},
            {"c0_embed", [](Config& c, auto& d, auto&, auto&) { c.est.c0_embed = d(); }},
            {"v0_l2", [](Config& c, auto& d, auto&, auto&) { c.est.v0_l2 = d(); }},
            {"v0_l6", [](Config& c, auto& d, auto&, auto&) { c.est.v0_l6 = d(); }},
            {"vt0_l2", [](Config& c, auto& d, auto&, auto&) { c.est.vt0_l2 = d(); }},
            {"phi0_p", [](Config& c, auto& d, auto&, auto&) { c.est.phi0_p = d(); }},
            {"X0", [](Config& c, auto& d, auto&, auto&) { c.est.X0 = d(); }},
            {"B0", [](Config& c, auto& d, auto&, auto&) { c.est.B0 = d(); }},
            {"mixed_exponent",
             [](Config& c, auto&, auto&, auto& s) {
                 const std::string t = trim(s);
                 if (t == "p-1")
                     c.est.mixed = MixedExponent::p_minus_1;
                 else if (t == "p-2")
                     c.est.mixed = MixedExponent::p_minus_2;
                 else
                     throw ConfigError("mixed_exponent", "expected p-1 or p-2");
             }},
            {"d2_form",
             [](Config& c, auto&, auto&, auto& s) {
                 const std::string t = trim(s);
                 if (t == "halved")
                     c.est.d2_form = D2Form::halved;
                 else if (t == "unhalved")
                     c.est.d2_form = D2Form::unhalved;
                 else
                     throw ConfigError("d2_form", "expected halved or unhalved");
             }},
            {"lower_bound_norm",
             [](Config& c, auto&, auto&, auto& s) {
                 const std::string t = trim(s);
                 if (t == "l6")
                     c.est.lower_norm = LowerBoundNorm::l6;
                 else if (t == "l2")
                     c.est.lower_norm = LowerBoundNorm::l2;
                 else
                     throw ConfigError("lower_bound_norm", "expected l6 or l2");
             }},
            {"seed", [](Config& c, auto&, auto&, auto& s) { c.seed = parse_int<std::uint64_t>("seed", s); }},
            {"dealias", [](Config& c, auto&, auto&, auto& s) { c.step.dealias = parse_bool("dealias", s); }},
            {"convection", [](Config& c, auto&, auto&, auto& s) { c.step.convection = parse_bool("convection", s); }},
            {"project_v", [](Config& c, auto&, auto&, auto& s) { c.step.project_v = parse_bool("project_v", s); }},
            {"keep_states", [](Config& c, auto&, auto&, auto& s) { c.keep_states = parse_bool("keep_states", s); }},
            {"output_dir", [](Config& c, auto&, auto&, auto& s) { c.output_dir = trim(s); }},
            {"slab_start", [](Config& c, auto& d, auto&, auto&) { c.slab_start = d(); }},
            {"period", [](Config& c, auto& d, auto&, auto&) { c.period = d(); }},
        };

    if (key == "checks") {
        cfg.checks = split_list(inputs);
        return;
    }
    auto it = table.find(key);
    if (it == table.end())
        throw ConfigError(key, "unknown key");
    it->second(cfg, num, integer, joined);
}

/// Parse INI-style text (key = value lines, optional [section] headers, # comments).
inline Config parse_config(const std::string& text)
{
    std::istringstream in(text);
    std::vector<CLI::ConfigItem> items;
    try {
        items = CLI::ConfigINI().from_config(in);
    } catch (const CLI::Error& e) {
        throw ConfigError("config", e.what());
    }
    Config cfg;
    bool has_grid = false;
    bool has_scenario = false;
    for (const auto& item : items) {
        if (item.name == "++" || item.name == "--")
            continue;
        std::string key = item.name;
        if (!item.parents.empty() && item.parents.back() == "c")
            key = "c." + key;
        has_grid = has_grid || key == "grid_n";
        has_scenario = has_scenario || key == "scenario";
        apply_config_value(cfg, key, item.inputs);
    }
    if (!has_grid)
        throw ConfigError("grid_n", "required key missing");
    if (!has_scenario)
        throw ConfigError("scenario", "required key missing");
    cfg.sync();
    cfg.validate();
    return cfg;
}

inline Config load_config(const std::string& path)
{
    std::ifstream f(path);
    if (!f)
        throw ConfigError("config", "cannot open '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str());
}

} // namespace speclab
