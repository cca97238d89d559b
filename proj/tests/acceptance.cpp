// Acceptance harness: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "speclab/cli.hpp"
#include "support.hpp"

using namespace speclab;
using testing_support::band_limited;
using testing_support::rel;
namespace fs = std::filesystem;

namespace {

// ---- pinned tolerances ------------------------------------------------------
constexpr double spectral_tol = 1e-12;
constexpr double round_trip_tol = 1e-12;
constexpr double helmholtz_tol = 1e-12;
constexpr double pythagoras_tol = 1e-10;
constexpr double energy_identity_tol = 1e-6;
constexpr double neutrality_tol = 1e-10;
constexpr double order_band = 0.10;
constexpr double residual_tol = 1e-4;
constexpr double defect_floor = 1e-3;
constexpr double stability_fraction = 0.05;
constexpr double refinement_band = 0.20;
constexpr double triangle_tol = 1e-12;
constexpr double norm_tol = 1e-10;

constexpr double pi = std::numbers::pi;
constexpr double pi3 = pi * pi * pi;

struct Outcome {
    bool pass = true;
    std::string detail;
};

std::string fmt(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", x);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Config base_config(ScenarioKind kind, double nu, double t_end, int n = 16, double dt = 1e-3)
{
    Config cfg;
    cfg.grid_n = n;
    cfg.dt = dt;
    cfg.t_end = t_end;
    cfg.sample_stride = 10;
    cfg.physics = {1.0, nu};
    cfg.scenario.kind = kind;
    cfg.sync();
    cfg.validate();
    return cfg;
}

const AuditReport& report(const std::vector<AuditReport>& rs, const std::string& id)
{
    for (const auto& r : rs)
        if (r.check_id == id)
            return r;
    throw std::runtime_error("no report " + id);
}

double series_max(const NormLedger& L, const std::string& name)
{
    const auto& s = L.at(name);
    return *std::max_element(s.begin(), s.end());
}

// ---- 1: spectral exactness ------------------------------------------------

/// f = sum a cos(k.x + theta); derivative alpha adds |alpha| quarter turns and prod k^alpha.
struct Wave {
    double a;
    std::array<int, 3> k;
    double theta;
};

RealField sample_waves(const Grid& g, const std::vector<Wave>& ws, MultiIndex alpha)
{
    return RealField::sample_scalar(g, [&](double x, double y, double z) {
        double s = 0.0;
        for (const auto& w : ws) {
            double scale = w.a;
            for (int d = 0; d < 3; ++d)
                scale *= std::pow(static_cast<double>(w.k[d]), alpha[d]);
            const int order = alpha[0] + alpha[1] + alpha[2];
            s += scale * std::cos(w.k[0] * x + w.k[1] * y + w.k[2] * z + w.theta + order * pi / 2.0);
        }
        return s;
    });
}

Outcome spectral_exactness()
{
    const Grid g = Grid::create(16);
    const std::vector<Wave> ws = {{1.0, {1, 0, 0}, 0.3}, {0.5, {2, -3, 1}, -1.1}, {0.25, {0, 5, -4}, 2.0},
                                  {0.8, {7, 1, 0}, 0.7}, {-0.3, {3, 3, 3}, 0.0}};
    const SpectralField f = to_spectral(sample_waves(g, ws, {0, 0, 0}));
    double worst = 0.0;
    for (int order = 1; order <= 4; ++order)
        for (const auto& alpha : multi_indices_of_order(order)) {
            const RealField exact = sample_waves(g, ws, alpha);
            const RealField got = to_real(differentiate(f, alpha));
            worst = std::max(worst, testing_support::max_diff(got, exact) / max_abs(exact));
        }
    const RealField r = sample_waves(g, ws, {0, 0, 0});
    const double trip = testing_support::max_diff(to_real(to_spectral(r)), r) / max_abs(r);
    return {worst <= spectral_tol && trip <= round_trip_tol,
            "max derivative error " + fmt(worst) + ", round trip " + fmt(trip)};
}

// ---- 2: Helmholtz -------------------------------------------------------------

Outcome helmholtz_correctness()
{
    const Grid g = Grid::create(16);
    double rec = 0.0, orth = 0.0, pyth = 0.0, div = 0.0;
    for (std::uint64_t seed = 1; seed <= 8; ++seed) {
        const SpectralField v = band_limited(g, Rank::vector, seed);
        const PotentialPair p = decompose(v);
        const SpectralField gp = gradient(p.phi);
        const SpectralField rp = curl(p.psi);
        const double vv = l2_norm_sq(v);
        rec = std::max(rec, std::sqrt(l2_norm_sq(recompose(p) - v) / vv));
        orth = std::max(orth, std::abs(inner(gp, rp)) / vv);
        pyth = std::max(pyth, rel(l2_norm_sq(gp) + l2_norm_sq(rp), vv));
        div = std::max(div, std::sqrt(l2_norm_sq(divergence(p.psi)) / l2_norm_sq(p.psi)));
    }
    return {rec <= helmholtz_tol && orth <= helmholtz_tol && pyth <= pythagoras_tol && div <= helmholtz_tol,
            "recompose " + fmt(rec) + ", orthogonality " + fmt(orth) + ", pythagoras " + fmt(pyth) + ", div psi " +
                fmt(div)};
}

// ---- 3: energy identity -------------------------------------------------------

Outcome energy_identity()
{
    const Config cfg = base_config(ScenarioKind::taylor_green, 100.0, 1.0);
    const Trajectory tr = run_coupled(cfg);
    const auto rs = audit_energy(tr);
    const double id = report(rs, "energy-identity").max_relative_residual;
    const double neutral = report(rs, "convection-neutrality").max_relative_residual;
    return {!tr.blow_up && tr.steps == 1000 && id <= energy_identity_tol && neutral <= neutrality_tol,
            std::to_string(tr.steps) + " steps, identity residual " + fmt(id) + ", convection " + fmt(neutral)};
}

// ---- 4 and 10: shipped scenarios ---------------------------------------------

struct ScenarioRun {
    std::string name;
    Config cfg;
    Trajectory tr;
};

std::vector<ScenarioRun> shipped_runs()
{
    std::vector<ScenarioRun> out;
    // paper-scaling needs nu large enough for the pinned |phi(0)|_p to fit inside gamma
    const std::vector<std::pair<ScenarioKind, double>> kinds = {
        {ScenarioKind::taylor_green, 100.0}, {ScenarioKind::random_band, 100.0}, {ScenarioKind::paper_scaling, 1e4}};
    for (const auto& [kind, nu] : kinds) {
        Config cfg = base_config(kind, nu, 0.5);
        cfg.seed = 7;
        out.push_back({to_string(kind), cfg, run_coupled(cfg)});
    }
    return out;
}

Outcome decay_envelope(const std::vector<ScenarioRun>& runs)
{
    Outcome o;
    for (const auto& r : runs) {
        const auto rs = audit_decay(r.tr);
        const AuditReport& env = report(rs, "decay-envelope");
        // t = 0 has margin zero by construction; every later sample must clear the envelope
        double least = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < env.times.size(); ++i)
            if (env.times[i] > 0.0)
                least = std::min(least, env.margins[i]);
        const bool ok = !r.tr.blow_up && !env.violated() && least > 0.0;
        o.pass = o.pass && ok;
        o.detail += (o.detail.empty() ? "" : "; ") + r.name + " min relative margin " + fmt(least);
    }
    return o;
}

Outcome final_bound_chain(const std::vector<ScenarioRun>& runs)
{
    Outcome o;
    for (const auto& r : runs) {
        const BoundConstant bc = bound_constant(r.tr, r.cfg.est);
        const auto rs = audit_final_bound(r.tr, r.cfg.scenario.gamma, bc.A);
        const AuditReport& tri = report(rs, "triangle");
        const AuditReport& fb = report(rs, "final-bound");
        const double least =
            fb.margins.empty() ? -1.0 : *std::min_element(fb.margins.begin(), fb.margins.end());
        const bool ok = tri.max_relative_residual <= triangle_tol && !tri.violated() &&
                        fb.status == AuditStatus::fitted && fb.fitted_constant && least >= 0.0;
        o.pass = o.pass && ok;
        o.detail += (o.detail.empty() ? "" : "; ") + r.name + " triangle " + fmt(tri.max_relative_residual) +
                    ", c " + (fb.fitted_constant ? fmt(*fb.fitted_constant) : std::string("none"));
    }
    return o;
}

// ---- 5: integrator order -------------------------------------------------------

Outcome integrator_order()
{
    const Grid g = Grid::create(16);
    const PhysicalParams p{0.1, 1.0};
    const double T = 0.8;
    const SpectralField tg = taylor_green(g);
    const auto at_T = [&](int steps) {
        SimState s = make_state(tg, tg, 0.0, 0, p, {});
        for (int i = 0; i < steps; ++i)
            s = step(s, T / steps, p);
        return s.v;
    };
    // Richardson triplet: no reference solution, the ratio of successive differences is 2^order
    const SpectralField a = at_T(8), b = at_T(16), c = at_T(32);
    const double order = std::log2(std::sqrt(l2_norm_sq(a - b) / l2_norm_sq(b - c)));
    return {std::abs(order - 4.0) <= order_band * 4.0, "observed order " + fmt(order) + " (dt = 0.1, 0.05, 0.025)"};
}

// ---- 6: difference-system residual -------------------------------------------

Outcome difference_system()
{
    Config cfg = base_config(ScenarioKind::random_band, 1e3, 1.0);
    cfg.keep_states = true;
    const Trajectory tr = run_coupled(cfg);
    const double worst = series_max(tr.ledger, "curl_residual");
    // a solenoidal defect of 1% of |u_t| injected at every sample of the run
    double weakest = std::numeric_limits<double>::infinity();
    double weakest_t = 0.0;
    double initial = 0.0;
    for (const SimState& s : tr.samples) {
        SpectralField defect = leray_project(band_limited(s.grid(), Rank::vector, 99));
        defect *= 1e-2 * std::sqrt(l2_norm_sq(s.u_t()) / l2_norm_sq(defect));
        const double ratio = difference_residual(s, tr.params, tr.options, &defect).curl_ratio;
        if (s.t == 0.0)
            initial = ratio;
        if (ratio < weakest) {
            weakest = ratio;
            weakest_t = s.t;
        }
    }
    return {!tr.blow_up && worst <= residual_tol && weakest > defect_floor,
            "max curl ratio " + fmt(worst) + "; with 1% defect: " + fmt(initial) + " at t = 0, weakest " +
                fmt(weakest) + " at t = " + fmt(weakest_t)};
}

// ---- 7: stability trend -----------------------------------------------------

Outcome stability_trend()
{
    const Grid g = Grid::create(16);
    const SpectralField tg = taylor_green(g);
    const double V0 = sobolev_norm(tg, 1);
    std::vector<double> sup;
    for (double nu : {10.0, 100.0, 1000.0}) {
        const PhysicalParams p{1.0, nu};
        SimState s = make_state(tg, tg, 0.0, 0, p, {});
        double m = 0.0;
        for (int k = 0; k < 1000; ++k) {
            s = step(s, 1e-3, p);
            m = std::max(m, sobolev_norm(s.u(), 1));
        }
        sup.push_back(m);
    }
    const bool decreasing = sup[0] > sup[1] && sup[1] > sup[2];
    return {decreasing && sup[2] <= stability_fraction * V0,
            "sup ||u||_1 = " + fmt(sup[0]) + ", " + fmt(sup[1]) + ", " + fmt(sup[2]) + " against ||V0||_1 = " +
                fmt(V0)};
}

// ---- 8: Gronwall fitted constants ---------------------------------------------

/// Minimal c: zero when the inequality holds without its right-hand side.
double minimal_c(const AuditReport& r)
{
    if (r.status == AuditStatus::identity_pass)
        return 0.0;
    return r.fitted_constant ? *r.fitted_constant : std::numeric_limits<double>::quiet_NaN();
}

bool within(double a, double b, double band)
{
    return std::isfinite(a) && std::isfinite(b) && std::abs(a - b) <= band * std::max(std::abs(a), std::abs(b));
}

Outcome gronwall_constants()
{
    Outcome o;
    // the default data, and a stronger amplitude where the right-hand side of the u inequality is needed
    for (double amplitude : {1.0, 4.0}) {
        const auto fitted = [&](int n, double dt) {
            Config cfg = base_config(ScenarioKind::paper_scaling, 1e4, 0.1, n, dt);
            cfg.seed = 3;
            cfg.scenario.amplitude = amplitude;
            cfg.sample_stride = static_cast<int>(std::lround(0.005 / dt));
            const Trajectory tr = run_coupled(cfg);
            return std::pair<double, double>{minimal_c(audit_gronwall(tr, gronwall_y(cfg.physics.mu))),
                                             minimal_c(audit_gronwall(tr, gronwall_u(cfg.physics.mu)))};
        };
        const auto base = fitted(16, 1e-3);
        const auto fine = fitted(24, 1e-3);
        const auto half = fitted(16, 5e-4);
        const auto judge = [&](const char* name, double b, double f, double h) {
            o.pass = o.pass && within(b, f, refinement_band) && within(b, h, refinement_band);
            o.detail += (o.detail.empty() ? "" : "; ") + std::string(name) + " amplitude " + fmt(amplitude) + " c " +
                        fmt(b) + " (n=24 " + fmt(f) + ", dt/2 " + fmt(h) + ")";
        };
        judge("gronwall-y", base.first, fine.first, half.first);
        judge("gronwall-u", base.second, fine.second, half.second);
    }
    return o;
}

// ---- 9: fixed point ----------------------------------------------------------

Outcome fixed_point()
{
    EstimateParams p;
    p.mu = 1.0;
    std::vector<double> As;
    bool ok = true;
    std::string detail;
    for (double nu : {1e4, 1e5, 1e6}) {
        p.nu = nu;
        const FixedPointResult r = solve_A(p);
        ok = ok && r.converged && r.contraction_modulus < 1.0;
        if (!As.empty())
            ok = ok && r.A <= As.back();
        As.push_back(r.A);
        detail += "A(" + fmt(nu) + ") = " + fmt(r.A) + " q " + fmt(r.contraction_modulus) + "; ";
    }
    p.nu = 1.0;
    const FixedPointResult small = solve_A(p);
    const bool flagged = !small.converged && (small.regime_violation || !(small.contraction_modulus < 1.0));
    detail += std::string("nu = 1 ") + (flagged ? "flagged" : "not flagged");
    return {ok && flagged, detail};
}

// ---- 11: norm oracles ---------------------------------------------------------

Outcome norm_oracles()
{
    const Grid g = Grid::create(16);
    const SpectralField s = to_spectral(RealField::sample_scalar(g, [](double x, double, double) { return std::sin(x); }));
    const SpectralField tg = taylor_green(g);
    const SpectralField zero(g, Rank::vector);
    const std::vector<std::pair<double, double>> pairs = {
        {std::pow(lp_norm(s, 2.0), 2.0), 4.0 * pi3},
        {std::pow(lp_norm(s, 4.0), 4.0), 3.0 * pi3},
        {lp_norm(s, std::numeric_limits<double>::infinity()), 1.0},
        {sobolev_norm_sq(s, 1), 8.0 * pi3},
        {l2_norm_sq(tg), 4.0 * pi3},
        {sobolev_norm_sq(tg, 1), 12.0 * pi3},
        {sobolev_norm_sq(tg, 2), 24.0 * pi3},
        {gamma_norm_sq(tg, &zero, 2, 0), 24.0 * pi3},
        {gamma_norm_sq(tg, &zero, 2, 1), 24.0 * pi3},
    };
    double worst = 0.0;
    for (const auto& [got, want] : pairs)
        worst = std::max(worst, rel(got, want));
    return {worst <= norm_tol, std::to_string(pairs.size()) + " closed forms, worst " + fmt(worst)};
}

// ---- 12: determinism ------------------------------------------------------

std::string slurp(const fs::path& p)
{
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

Outcome determinism()
{
    const fs::path dir = fs::temp_directory_path() / ("speclab_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::ofstream(dir / "run.cfg") << "grid_n = 16\nscenario = random-band\nseed = 2024\nt_end = 0.1\n"
                                      "sample_stride = 5\nnu = 1000\n";
    const auto run = [&](const std::string& out) {
        const std::string cmd = std::string("\"") + SPECLAB_CLI + "\" run --config \"" + (dir / "run.cfg").string() +
                                "\" --out \"" + (dir / out).string() + "\" > /dev/null";
        return std::system(cmd.c_str());
    };
    const int a = run("a");
    const int b = run("b");
    const std::string ca = slurp(dir / "a" / "timeseries.csv");
    const std::string cb = slurp(dir / "b" / "timeseries.csv");
    fs::remove_all(dir);
    const bool ok = a == 0 && b == 0 && !ca.empty() && ca == cb;
    return {ok, "two processes, " + std::to_string(ca.size()) + " bytes, " + (ca == cb ? "identical" : "different")};
}

} // namespace

int main()
{
    int failures = 0;
    const auto criterion = [&](int id, const char* name, const std::function<Outcome()>& f) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = f();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += o.pass ? 0 : 1;
        std::printf("criterion %2d %-28s %s  %s [%.2f s]\n", id, name, o.pass ? "PASS" : "FAIL", o.detail.c_str(),
                    seconds_since(t0));
        std::fflush(stdout);
    };

    criterion(1, "spectral exactness", spectral_exactness);
    criterion(2, "helmholtz correctness", helmholtz_correctness);
    criterion(3, "energy identity", energy_identity);
    std::vector<ScenarioRun> runs;
    criterion(4, "decay envelope", [&] {
        runs = shipped_runs();
        return decay_envelope(runs);
    });
    criterion(5, "integrator order", integrator_order);
    criterion(6, "difference residual", difference_system);
    criterion(7, "stability trend", stability_trend);
    criterion(8, "gronwall constants", gronwall_constants);
    criterion(9, "fixed point", fixed_point);
    criterion(10, "final bound chain", [&] {
        if (runs.empty())
            runs = shipped_runs();
        return final_bound_chain(runs);
    });
    criterion(11, "norm oracles", norm_oracles);
    criterion(12, "determinism", determinism);

    std::printf("%d of 12 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
