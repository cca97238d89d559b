#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "simulation.hpp"

namespace speclab {

inline constexpr const char* version = "1.0.0";

/// Columns of the time-series CSV, in order; every name is a ledger series.
inline const std::vector<std::string>& timeseries_columns()
{
    static const std::vector<std::string> cols = {"v_l2", "V_l2", "u_h1", "v_h1", "V_h1", "div_v_l2",
                                                  "Psi",  "chi0", "X",    "Y",    "X0_v", "X0_u",
                                                  "G",    "K",    "D1",   "D2",   "energy_residual"};
    return cols;
}

/// Seventeen significant digits, so doubles round-trip.
inline std::string format_number(double x)
{
    std::array<char, 40> buf{};
    std::snprintf(buf.data(), buf.size(), "%.17g", x);
    return buf.data();
}

inline void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
                      const std::vector<std::vector<std::string>>& rows)
{
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw IoError("cannot write '" + path.string() + "'");
    for (std::size_t i = 0; i < header.size(); ++i)
        f << (i ? "," : "") << header[i];
    f << '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i)
            f << (i ? "," : "") << row[i];
        f << '\n';
    }
    if (!f)
        throw IoError("write to '" + path.string() + "' failed");
}

inline void write_timeseries(const NormLedger& ledger, const std::filesystem::path& path)
{
    std::vector<std::string> header = {"t"};
    for (const auto& c : timeseries_columns())
        header.push_back(c);
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < ledger.size(); ++i) {
        std::vector<std::string> row = {format_number(ledger.times[i])};
        for (const auto& c : timeseries_columns())
            row.push_back(format_number(ledger.at(c)[i]));
        rows.push_back(std::move(row));
    }
    write_csv(path, header, rows);
}

inline void write_timeseries(const Trajectory& tr, const std::filesystem::path& path)
{
    write_timeseries(tr.ledger, path);
}

/// 64-bit FNV-1a over the little-endian bytes of the real-space samples.
inline std::uint64_t fnv1a(const RealField& f)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (double x : f.values()) {
        std::uint64_t bits = std::bit_cast<std::uint64_t>(x);
        for (int b = 0; b < 8; ++b) {
            h ^= (bits >> (8 * b)) & 0xffU;
            h *= 0x100000001b3ULL;
        }
    }
    return h;
}

inline std::string hex64(std::uint64_t h)
{
    std::array<char, 17> buf{};
    std::snprintf(buf.data(), buf.size(), "%016llx", static_cast<unsigned long long>(h));
    return buf.data();
}

inline nlohmann::json config_json(const Config& cfg)
{
    nlohmann::json j;
    j["grid_n"] = cfg.grid_n;
    j["dt"] = cfg.dt;
    j["t_end"] = cfg.t_end;
    j["sample_stride"] = cfg.sample_stride;
    j["mu"] = cfg.physics.mu;
    j["nu"] = cfg.physics.nu;
    j["scenario"] = to_string(cfg.scenario.kind);
    j["amplitude"] = cfg.scenario.amplitude;
    j["k_min"] = cfg.scenario.k_min;
    j["k_max"] = cfg.scenario.k_max;
    j["grad_fraction"] = cfg.scenario.grad_fraction;
    j["grad_k_max"] = cfg.scenario.grad_k_max;
    j["gamma"] = cfg.scenario.gamma;
    j["gamma_star"] = cfg.est.gamma_star;
    j["p"] = cfg.est.p;
    j["seed"] = cfg.seed;
    j["dealias"] = cfg.step.dealias;
    j["convection"] = cfg.step.convection;
    j["project_v"] = cfg.step.project_v;
    j["c_generic"] = cfg.est.c_generic;
    j["c1"] = cfg.est.c1;
    j["c2"] = cfg.est.c2;
    j["c3"] = cfg.est.c3;
    j["c4"] = cfg.est.c4;
    for (const auto& [tag, value] : cfg.est.c_override)
        j["c." + tag] = value;
    j["slab_start"] = cfg.slab_start;
    j["period"] = cfg.period_value();
    j["checks"] = cfg.selected_checks();
    j["output_dir"] = cfg.output_dir;
    return j;
}

struct RunManifest {
    Config config;
    double wall_seconds = 0.0;
    std::string hash_V0;
    std::string hash_v0;
    std::string outcome; ///< "completed" or the blow-up message
    std::int64_t steps = 0;
    std::size_t samples = 0;

    nlohmann::json to_json() const
    {
        nlohmann::json j;
        j["config"] = config_json(config);
        j["version"] = version;
        j["wall_clock_seconds"] = wall_seconds;
        j["initial_field_hashes"] = {{"V0", hash_V0}, {"v0", hash_v0}};
        j["outcome"] = outcome;
        j["steps"] = steps;
        j["samples"] = samples;
        return j;
    }
};

inline RunManifest make_manifest(const Config& cfg, const InitialData& data, const Trajectory& tr, double seconds)
{
    RunManifest m;
    m.config = cfg;
    m.wall_seconds = seconds;
    m.hash_V0 = hex64(fnv1a(to_real(data.V0)));
    m.hash_v0 = hex64(fnv1a(to_real(data.v0)));
    m.outcome = tr.blow_up ? *tr.blow_up : "completed";
    m.steps = tr.steps;
    m.samples = tr.ledger.size();
    return m;
}

inline void write_json(const nlohmann::json& j, const std::filesystem::path& path)
{
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw IoError("cannot write '" + path.string() + "'");
    f << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Field files: "SLFIELD1", uint32 n, uint32 rank, then float64 samples, all
// little endian, component blocks in row-major order.
// ---------------------------------------------------------------------------

namespace detail {

template <typename U>
U to_little(U x)
{
    if constexpr (std::endian::native == std::endian::big) {
        U out = 0;
        for (std::size_t b = 0; b < sizeof(U); ++b)
            out = (out << 8) | ((x >> (8 * b)) & 0xffU);
        return out;
    }
    return x;
}

inline constexpr char field_magic[8] = {'S', 'L', 'F', 'I', 'E', 'L', 'D', '1'};

} // namespace detail

inline void write_field(const RealField& f, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write '" + path.string() + "'");
    out.write(detail::field_magic, 8);
    const std::uint32_t header[2] = {detail::to_little(static_cast<std::uint32_t>(f.grid().n())),
                                     detail::to_little(static_cast<std::uint32_t>(f.components()))};
    out.write(reinterpret_cast<const char*>(header), sizeof header);
    for (double x : f.values()) {
        const std::uint64_t bits = detail::to_little(std::bit_cast<std::uint64_t>(x));
        out.write(reinterpret_cast<const char*>(&bits), 8);
    }
    if (!out)
        throw IoError("write to '" + path.string() + "' failed");
}

inline RealField read_field(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open '" + path.string() + "'");
    char magic[8];
    std::uint32_t header[2];
    in.read(magic, 8);
    in.read(reinterpret_cast<char*>(header), sizeof header);
    if (!in || !std::equal(magic, magic + 8, detail::field_magic))
        throw IoError("'" + path.string() + "' is not a field file");
    const int n = static_cast<int>(detail::to_little(header[0]));
    const auto rank = detail::to_little(header[1]);
    if (rank != 1 && rank != 3)
        throw IoError("'" + path.string() + "' has unsupported rank " + std::to_string(rank));
    const Grid g = Grid::create(n);
    RealField f(g, rank == 1 ? Rank::scalar : Rank::vector);
    for (double& x : f.values()) {
        std::uint64_t bits = 0;
        in.read(reinterpret_cast<char*>(&bits), 8);
        x = std::bit_cast<double>(detail::to_little(bits));
    }
    if (!in)
        throw IoError("'" + path.string() + "' is truncated");
    if (in.peek() != std::char_traits<char>::eof())
        throw IoError("'" + path.string() + "' has trailing bytes");
    return f;
}

} // namespace speclab
