#pragma once

#include <optional>
#include <string>
#include <vector>

#include "config.hpp"
#include "diagnostics.hpp"

namespace speclab {

/// Result of a coupled run. Ledger rows exist for every sample; full states
/// are kept for the first and last sample unless keep_states is set.
struct Trajectory {
    PhysicalParams params;
    StepOptions options;
    double dt = 0.0;
    std::vector<SimState> samples;
    NormLedger ledger;
    std::optional<std::string> blow_up; ///< set when the run stopped early
    std::int64_t steps = 0;

    const SimState& initial() const { return samples.front(); }
    const SimState& final() const { return samples.back(); }
};

inline LedgerOptions ledger_options(const Config& cfg)
{
    LedgerOptions o;
    o.physics = cfg.physics;
    o.step = cfg.step;
    o.est = cfg.est;
    o.slab_start = cfg.slab_start;
    o.period = cfg.period_value();
    return o;
}

/// Co-evolve (V, v) from the given data and sample every `sample_stride` steps.
inline Trajectory run_from(const Config& cfg, const InitialData& data)
{
    Trajectory tr{cfg.physics, cfg.step, cfg.dt, {}, NormLedger(ledger_options(cfg)), std::nullopt, 0};
    const auto steps = static_cast<std::int64_t>(std::llround(cfg.t_end / cfg.dt));
    if (steps < 1)
        throw ConfigError("t_end", "shorter than one step");

    SimState s = make_state(data.V0, data.v0, 0.0, 0, cfg.physics, cfg.step);
    ledger_update(tr.ledger, s, 0.0);
    tr.samples.push_back(s);
    double last_t = 0.0;
    try {
        for (std::int64_t k = 1; k <= steps; ++k) {
            s = step(s, cfg.dt, cfg.physics, cfg.step);
            s.t = static_cast<double>(k) * cfg.dt;
            tr.steps = k;
            if (k % cfg.sample_stride == 0 || k == steps) {
                ledger_update(tr.ledger, s, s.t - last_t);
                last_t = s.t;
                if (cfg.keep_states || k == steps)
                    tr.samples.push_back(s);
            }
        }
    } catch (const BlowUpError& e) {
        tr.blow_up = e.what();
    }
    return tr;
}

inline Trajectory run_coupled(const Config& cfg)
{
    const Grid g = Grid::create(cfg.grid_n);
    return run_from(cfg, make_initial_data(g, cfg.scenario, cfg.physics, cfg.est, cfg.seed));
}

} // namespace speclab
