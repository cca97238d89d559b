#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "simulation.hpp"

namespace speclab {

enum class AuditStatus { identity_pass, inequality_pass, fitted, violated, not_applicable };

inline std::string to_string(AuditStatus s)
{
    switch (s) {
    case AuditStatus::identity_pass: return "identity-pass";
    case AuditStatus::inequality_pass: return "inequality-pass";
    case AuditStatus::fitted: return "fitted";
    case AuditStatus::violated: return "violated";
    case AuditStatus::not_applicable: return "not-applicable";
    }
    return "?";
}

struct AuditReport {
    std::string check_id;
    AuditStatus status = AuditStatus::not_applicable;
    double max_relative_residual = 0.0;
    std::optional<double> fitted_constant;
    double worst_time = 0.0;
    std::vector<double> times;   ///< sample times of `margins`
    std::vector<double> margins; ///< per-sample margin; negative means the check failed there
    std::map<std::string, double> extra;
    std::string note;

    bool violated() const { return status == AuditStatus::violated; }
};

/// Tolerances of the identity-class checks.
struct AuditTolerances {
    double energy_identity = 1e-6;
    double convection_neutrality = 1e-10;
    double energy_inequality = 1e-6;
    double decay_envelope = 1e-6;
    double phi_heat = 1e-4;
    double rot_energy = 1e-8;
    double difference_residual = 1e-4;
    double lr_identity = 1e-6;
    double triangle = 1e-12;
    double gronwall_zero_rhs = 1e-6;
};

namespace detail {

inline double trapezoid(const std::vector<double>& t, const std::vector<double>& f, std::size_t upto)
{
    double s = 0.0;
    for (std::size_t i = 1; i <= upto && i < t.size(); ++i)
        s += 0.5 * (t[i] - t[i - 1]) * (f[i] + f[i - 1]);
    return s;
}

/// Report for a per-sample residual series checked against a tolerance.
inline AuditReport identity_report(std::string id, const NormLedger& ledger, const std::string& series, double tol)
{
    AuditReport r;
    r.check_id = std::move(id);
    r.times = ledger.times;
    const auto& res = ledger.at(series);
    for (std::size_t i = 0; i < res.size(); ++i) {
        r.margins.push_back(tol - res[i]);
        // NaN counts as worst so it cannot hide behind a comparison
        if (i == 0 || !(res[i] <= r.max_relative_residual)) {
            r.max_relative_residual = res[i];
            r.worst_time = ledger.times[i];
        }
    }
    r.status = r.max_relative_residual <= tol ? AuditStatus::identity_pass : AuditStatus::violated;
    r.extra["tolerance"] = tol;
    return r;
}

/// Smallest c >= 0 with lhs_i <= rhs(c, i) for all i, rhs nondecreasing in c; nullopt when none below c_max.
inline std::optional<double> fit_monotone(std::size_t count, const std::function<bool(double, std::size_t)>& holds,
                                          double c_max = 1e12)
{
    auto all = [&](double c) {
        for (std::size_t i = 0; i < count; ++i)
            if (!holds(c, i))
                return false;
        return true;
    };
    if (all(0.0))
        return 0.0;
    double hi = 1e-6;
    while (!all(hi)) {
        hi *= 2.0;
        if (hi > c_max)
            return std::nullopt;
    }
    double lo = hi / 2.0;
    if (hi == 1e-6)
        lo = 0.0;
    for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (all(mid) ? hi : lo) = mid;
    }
    return hi;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Energy
// ---------------------------------------------------------------------------

/// Energy identity per sample, convection neutrality, and the integrated energy inequality.
inline std::vector<AuditReport> audit_energy(const Trajectory& tr, const AuditTolerances& tol = {},
                                             double c_energy = 1.0)
{
    const NormLedger& L = tr.ledger;
    std::vector<AuditReport> out;
    out.push_back(detail::identity_report("energy-identity", L, "energy_residual", tol.energy_identity));
    out.push_back(detail::identity_report("convection-neutrality", L, "convection_energy", tol.convection_neutrality));

    AuditReport r;
    r.check_id = "energy-inequality";
    r.times = L.times;
    const auto& v2 = L.at("v_l2sq");
    const auto& h1 = L.at("v_h1sq");
    const auto& div = L.at("div_v_l2sq");
    const double mu = tr.params.mu;
    const double nu = tr.params.nu;
    const double v0 = v2.front();
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < L.size(); ++i) {
        const double lhs = v2[i] + mu * detail::trapezoid(L.times, h1, i) + nu * detail::trapezoid(L.times, div, i);
        const double ratio = v0 > 0.0 ? lhs / v0 : (lhs > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
        r.margins.push_back(c_energy * (1.0 + tol.energy_inequality) - ratio);
        if (ratio > worst) {
            worst = ratio;
            r.worst_time = L.times[i];
        }
    }
    r.extra["max_ratio"] = worst;
    r.extra["c"] = c_energy;
    r.max_relative_residual = std::max(0.0, worst - c_energy);
    r.status = worst <= c_energy * (1.0 + tol.energy_inequality) ? AuditStatus::inequality_pass : AuditStatus::violated;
    out.push_back(std::move(r));
    return out;
}

// ---------------------------------------------------------------------------
// Decay
// ---------------------------------------------------------------------------

/// |v(t)|_2^2 <= e^{-mu t} |v(0)|_2^2 pointwise; fitted c in Y^2(t) <= exp(-mu t + c A^4) Y^2(0).
inline std::vector<AuditReport> audit_decay(const Trajectory& tr, const AuditTolerances& tol = {},
                                            std::optional<double> A = std::nullopt)
{
    const NormLedger& L = tr.ledger;
    const double mu = tr.params.mu;
    std::vector<AuditReport> out;

    AuditReport env;
    env.check_id = "decay-envelope";
    env.times = L.times;
    const auto& v2 = L.at("v_l2sq");
    const double v0 = v2.front();
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < L.size(); ++i) {
        const double bound = std::exp(-mu * L.times[i]) * v0;
        const double margin = v0 > 0.0 ? (bound - v2[i]) / v0 : 0.0;
        env.margins.push_back(margin);
        if (margin < worst) {
            worst = margin;
            env.worst_time = L.times[i];
        }
    }
    env.max_relative_residual = std::max(0.0, -worst);
    env.extra["min_margin"] = worst;
    env.status = worst >= -tol.decay_envelope ? AuditStatus::inequality_pass : AuditStatus::violated;
    if (v0 == 0.0)
        env.note = "zero field, vacuous";
    out.push_back(std::move(env));

    AuditReport y;
    y.check_id = "decay-y";
    y.times = L.times;
    const auto& Y2 = L.at("Y2");
    const double a = A ? *A : *std::max_element(L.at("X").begin(), L.at("X").end());
    y.extra["A"] = a;
    if (Y2.front() <= 0.0) {
        y.status = AuditStatus::not_applicable;
        y.note = "Y(0) = 0";
    } else {
        double c = 0.0;
        double need_A4 = 0.0;
        for (std::size_t i = 0; i < L.size(); ++i) {
            const double need = Y2[i] > 0.0 ? std::log(Y2[i] / Y2.front()) + mu * L.times[i] : -std::numeric_limits<double>::infinity();
            y.margins.push_back(-need);
            if (need > need_A4) {
                need_A4 = need;
                y.worst_time = L.times[i];
            }
        }
        const double a4 = std::pow(a, 4);
        if (need_A4 > 0.0 && a4 > 0.0)
            c = need_A4 / a4;
        else if (need_A4 > 0.0)
            c = std::numeric_limits<double>::infinity();
        y.fitted_constant = c;
        y.extra["c_times_A4"] = need_A4;
        y.extra["c_per_A2"] = a > 0.0 ? need_A4 / (a * a) : 0.0;
        y.status = std::isfinite(c) ? AuditStatus::fitted : AuditStatus::violated;
    }
    out.push_back(std::move(y));
    return out;
}

// ---------------------------------------------------------------------------
// Gronwall family
// ---------------------------------------------------------------------------

/// coeff * prod(series_k ^ exponent_k).
struct Monomial {
    double coeff = 1.0;
    std::vector<std::pair<std::string, double>> factors;
};

/// d/dt lhs + sum(dissipation) <= c * sum(rhs), audited in fitted mode.
struct GronwallSpec {
    std::string id;
    std::string lhs;
    std::vector<Monomial> dissipation;
    std::vector<Monomial> rhs;
};

inline double evaluate(const NormLedger& L, const std::vector<Monomial>& terms, std::size_t i)
{
    double s = 0.0;
    for (const auto& m : terms) {
        double p = m.coeff;
        for (const auto& [name, e] : m.factors)
            p *= std::pow(L.at(name)[i], e);
        s += p;
    }
    return s;
}

/// Gradient part: d/dt |grad phi|^2 + mu |grad^2 phi|^2 + nu |Delta phi|^2 <= (c / nu) |curl psi|_3^2 |v|_6^2.
inline GronwallSpec gronwall_grad_phi(double mu, double nu)
{
    return {"gronwall-grad-phi",
            "grad_phi_l2sq",
            {{mu, {{"hess_phi_l2sq", 1.0}}}, {nu, {{"lap_phi_l2sq", 1.0}}}},
            {{nu > 0.0 ? 1.0 / nu : 0.0, {{"rotpsi_l3", 2.0}, {"v_l6", 2.0}}}}};
}

/// d/dt Y^2 + mu Y^2 <= c Y^2 (|v|_6^4 + |v_x|_6^4 + |v_t|_6^4 + |curl psi|_6^4).
inline GronwallSpec gronwall_y(double mu)
{
    return {"gronwall-y",
            "Y2",
            {{mu, {{"Y2", 1.0}}}},
            {{1.0, {{"Y2", 1.0}, {"v_l6", 4.0}}},
             {1.0, {{"Y2", 1.0}, {"grad_v_l6", 4.0}}},
             {1.0, {{"Y2", 1.0}, {"vt_l6", 4.0}}},
             {1.0, {{"Y2", 1.0}, {"rotpsi_l6", 4.0}}}}};
}

/// d/dt |u|^2 + mu ||u||_1^2 <= c |u|^2 (|grad v|_6^2 + |grad phi|_6^4) + c (||v||_1^2 |grad phi|_6^2 + ||grad phi||_1^2 + |grad phi_t|^2).
inline GronwallSpec gronwall_u(double mu)
{
    return {"gronwall-u",
            "u_l2sq",
            {{mu, {{"u_h1sq", 1.0}}}},
            {{1.0, {{"u_l2sq", 1.0}, {"grad_v_l6", 2.0}}},
             {1.0, {{"u_l2sq", 1.0}, {"grad_phi_l6", 4.0}}},
             {1.0, {{"v_h1sq", 1.0}, {"grad_phi_l6", 2.0}}},
             {1.0, {{"grad_phi_h1sq", 1.0}}},
             {1.0, {{"grad_phit_l2sq", 1.0}}}}};
}

/// d/dt |u_x|^2 + mu ||grad u||_1^2 <= c |u_x|^6 + c ||u||_1^2 ||v||_2^2 + c (the five forcing terms of G^2).
inline GronwallSpec gronwall_grad_u(double mu)
{
    return {"gronwall-grad-u",
            "grad_u_l2sq",
            {{mu, {{"grad_u_h1sq", 1.0}}}},
            {{1.0, {{"grad_u_l2sq", 3.0}}},
             {1.0, {{"u_h1sq", 1.0}, {"v_h2sq", 1.0}}},
             {1.0, {{"v_h2sq", 1.0}, {"grad_phi_h1sq", 1.0}}},
             {1.0, {{"hess_phit_l2sq", 1.0}}},
             {1.0, {{"grad_phi_h2sq", 1.0}}},
             {1.0, {{"grad_phi_l6", 2.0}, {"hess_phi_l3", 2.0}}},
             {1.0, {{"hess_phi_l2sq", 1.0}, {"hess_phi_l3", 2.0}}}}};
}

namespace detail {

struct GronwallFit {
    double c = 0.0;
    bool rhs_zero = true;
    bool zero_rhs_violation = false;
    double worst_time = 0.0;
    double max_excess_rel = 0.0; ///< max (lhs' + diss) / scale where rhs vanishes
    double max_excess_all = 0.0; ///< same over every sample
    std::vector<double> times, excess, rhs;
};

inline GronwallFit fit_gronwall(const NormLedger& L, const GronwallSpec& spec, std::size_t stride, double tol)
{
    GronwallFit f;
    const auto& lhs = L.at(spec.lhs);
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < L.size(); i += stride)
        idx.push_back(i);
    double scale = 0.0;
    for (std::size_t k = 1; k + 1 < idx.size(); ++k) {
        const std::size_t a = idx[k - 1], i = idx[k], b = idx[k + 1];
        const double deriv = (lhs[b] - lhs[a]) / (L.times[b] - L.times[a]);
        const double diss = evaluate(L, spec.dissipation, i);
        f.times.push_back(L.times[i]);
        f.excess.push_back(deriv + diss);
        f.rhs.push_back(evaluate(L, spec.rhs, i));
        scale = std::max(scale, std::abs(deriv) + std::abs(diss));
    }
    const double rhs_max = f.rhs.empty() ? 0.0 : *std::max_element(f.rhs.begin(), f.rhs.end());
    f.rhs_zero = !(rhs_max > 0.0);
    double best = 0.0;
    for (std::size_t k = 0; k < f.times.size(); ++k) {
        if (scale > 0.0)
            f.max_excess_all = std::max(f.max_excess_all, f.excess[k] / scale);
        const bool rhs_vanishes = !(f.rhs[k] > 1e-300 + 1e-14 * rhs_max);
        if (rhs_vanishes) {
            const double rel = scale > 0.0 ? f.excess[k] / scale : 0.0;
            f.max_excess_rel = std::max(f.max_excess_rel, rel);
            if (rel > tol) {
                f.zero_rhs_violation = true;
                f.worst_time = f.times[k];
            }
            continue;
        }
        const double c = f.excess[k] / f.rhs[k];
        if (c > best) {
            best = c;
            if (!f.zero_rhs_violation)
                f.worst_time = f.times[k];
        }
    }
    f.c = best;
    return f;
}

} // namespace detail

/// Fitted constant of a differential inequality, with its stability when every other sample is dropped.
inline AuditReport audit_gronwall(const Trajectory& tr, const GronwallSpec& spec, const AuditTolerances& tol = {})
{
    const NormLedger& L = tr.ledger;
    AuditReport r;
    r.check_id = spec.id;
    if (L.size() < 3) {
        r.status = AuditStatus::not_applicable;
        r.note = "fewer than three samples";
        return r;
    }
    const auto full = detail::fit_gronwall(L, spec, 1, tol.gronwall_zero_rhs);
    r.times = full.times;
    for (std::size_t k = 0; k < full.times.size(); ++k)
        r.margins.push_back(full.c * full.rhs[k] - full.excess[k]);
    r.worst_time = full.worst_time;
    r.max_relative_residual = full.max_excess_rel;
    if (full.zero_rhs_violation) {
        r.status = AuditStatus::violated;
        r.note = "right-hand side vanishes while the left-hand side grows";
        return r;
    }
    if (full.rhs_zero) {
        r.status = AuditStatus::identity_pass;
        r.note = "right-hand side identically zero";
        return r;
    }
    if (full.max_excess_all <= tol.gronwall_zero_rhs) {
        r.status = AuditStatus::identity_pass;
        r.note = "holds without the right-hand side";
        r.max_relative_residual = full.max_excess_all;
        return r;
    }
    r.status = AuditStatus::fitted;
    r.fitted_constant = full.c;
    if (L.size() >= 5) {
        const auto half = detail::fit_gronwall(L, spec, 2, tol.gronwall_zero_rhs);
        r.extra["c_half_stride"] = half.c;
        r.extra["stride_ratio"] = full.c > 0.0 ? half.c / full.c : (half.c > 0.0 ? std::numeric_limits<double>::infinity() : 1.0);
    }
    return r;
}

// ---------------------------------------------------------------------------
// Per-sample identities recorded in the ledger
// ---------------------------------------------------------------------------

inline AuditReport audit_phi_heat(const Trajectory& tr, const AuditTolerances& tol = {})
{
    return detail::identity_report("phi-heat", tr.ledger, "phi_heat_residual", tol.phi_heat);
}

/// Energy identity of the solenoidal part: half d/dt |curl psi|^2 + mu |grad curl psi|^2 = -<curl psi . grad v, curl psi>.
inline AuditReport audit_rot_energy(const Trajectory& tr, const AuditTolerances& tol = {})
{
    return detail::identity_report("gronwall-rot-psi", tr.ledger, "rot_energy_residual", tol.rot_energy);
}

inline AuditReport audit_difference_residual(const Trajectory& tr, const AuditTolerances& tol = {})
{
    return detail::identity_report("difference-residual", tr.ledger, "curl_residual", tol.difference_residual);
}

inline AuditReport audit_lr_identity(const Trajectory& tr, const AuditTolerances& tol = {})
{
    return detail::identity_report("lr-identity", tr.ledger, "lr_identity_residual", tol.lr_identity);
}

// ---------------------------------------------------------------------------
// Stability of u = v - V and the final bound
// ---------------------------------------------------------------------------

/// [c (A^2 + 1) A^2 / nu^2 + gamma] exp(c A^2).
inline double u_envelope(double c, double A, double nu, double gamma)
{
    const double A2 = A * A;
    const double lead = nu > 0.0 ? c * (A2 + 1.0) * A2 / (nu * nu) : (c > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    return (lead + gamma) * std::exp(c * A2);
}

/// Checkpoint recurrence ||u(kT)||_1^2 <= gamma and the fitted envelope for ||u(t)||_1^2.
inline std::vector<AuditReport> audit_stability(const Trajectory& tr, double gamma, double period, double A)
{
    const NormLedger& L = tr.ledger;
    const auto& u2 = L.at("u_h1sq");
    const double nu = tr.params.nu;
    std::vector<AuditReport> out;

    AuditReport cp;
    cp.check_id = "stability-checkpoints";
    const double half_dt = 0.5 * tr.dt * 1.000001;
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < L.size(); ++i) {
        const double t = L.times[i];
        const double k = std::round(t / period);
        if (std::abs(t - k * period) > half_dt)
            continue;
        cp.times.push_back(t);
        cp.margins.push_back(gamma - u2[i]);
        if (gamma - u2[i] < worst) {
            worst = gamma - u2[i];
            cp.worst_time = t;
        }
    }
    cp.extra["checkpoints"] = static_cast<double>(cp.times.size());
    cp.extra["period"] = period;
    if (cp.times.empty()) {
        cp.status = AuditStatus::not_applicable;
        cp.note = "no sample falls on a multiple of the period";
    } else {
        cp.max_relative_residual = gamma > 0.0 ? std::max(0.0, -worst / gamma) : std::max(0.0, -worst);
        cp.status = worst >= 0.0 ? AuditStatus::inequality_pass : AuditStatus::violated;
    }
    out.push_back(std::move(cp));

    AuditReport env;
    env.check_id = "stability-bound";
    env.times = L.times;
    const auto c = detail::fit_monotone(L.size(), [&](double cc, std::size_t i) {
        return u2[i] <= u_envelope(cc, A, nu, gamma);
    });
    double sup = 0.0;
    for (std::size_t i = 0; i < L.size(); ++i)
        if (u2[i] >= sup) {
            sup = u2[i];
            env.worst_time = L.times[i];
        }
    env.extra["A"] = A;
    env.extra["gamma"] = gamma;
    env.extra["sup_u_h1sq"] = sup;
    env.extra["sup_u_h1sq_over_gamma"] = gamma > 0.0 ? sup / gamma : std::numeric_limits<double>::infinity();
    if (c) {
        env.status = AuditStatus::fitted;
        env.fitted_constant = *c;
        for (std::size_t i = 0; i < L.size(); ++i)
            env.margins.push_back(u_envelope(*c, A, nu, gamma) - u2[i]);
    } else {
        env.status = AuditStatus::violated;
        env.note = "no finite constant makes the envelope hold";
    }
    out.push_back(std::move(env));
    return out;
}

/// ||V||_1 <= ||v||_1 + ||u||_1 per sample, and ||V||_1^2 <= A^2 + [c (A^2 + 1) A^2 / nu^2 + gamma] exp(c A^2).
inline std::vector<AuditReport> audit_final_bound(const Trajectory& tr, double gamma, double A,
                                                  const AuditTolerances& tol = {})
{
    const NormLedger& L = tr.ledger;
    const auto& V = L.at("V_h1");
    const auto& v = L.at("v_h1");
    const auto& u = L.at("u_h1");
    std::vector<AuditReport> out;

    AuditReport tri;
    tri.check_id = "triangle";
    tri.times = L.times;
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < L.size(); ++i) {
        const double scale = std::max({V[i], v[i] + u[i], 1e-300});
        const double margin = (v[i] + u[i] - V[i]) / scale;
        tri.margins.push_back(margin);
        if (margin < worst) {
            worst = margin;
            tri.worst_time = L.times[i];
        }
    }
    tri.max_relative_residual = std::max(0.0, -worst);
    tri.status = worst >= -tol.triangle ? AuditStatus::identity_pass : AuditStatus::violated;
    out.push_back(std::move(tri));

    AuditReport fb;
    fb.check_id = "final-bound";
    fb.times = L.times;
    const double nu = tr.params.nu;
    const auto c = detail::fit_monotone(L.size(), [&](double cc, std::size_t i) {
        return V[i] * V[i] <= A * A + u_envelope(cc, A, nu, gamma);
    });
    fb.extra["A"] = A;
    fb.extra["gamma"] = gamma;
    if (c) {
        fb.status = AuditStatus::fitted;
        fb.fitted_constant = *c;
        double least = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < L.size(); ++i) {
            const double m = A * A + u_envelope(*c, A, nu, gamma) - V[i] * V[i];
            fb.margins.push_back(m);
            if (m < least) {
                least = m;
                fb.worst_time = L.times[i];
            }
        }
    } else {
        fb.status = AuditStatus::violated;
        fb.note = "no finite constant makes the bound hold";
    }
    out.push_back(std::move(fb));
    return out;
}

/// X(t) <= A on the samples with t <= T.
inline AuditReport audit_x_bound(const Trajectory& tr, std::optional<double> A, double T)
{
    const NormLedger& L = tr.ledger;
    AuditReport r;
    r.check_id = "x-bound";
    if (!A) {
        r.status = AuditStatus::not_applicable;
        r.note = "no converged fixed point for A";
        return r;
    }
    const auto& X = L.at("X");
    double sup = 0.0;
    for (std::size_t i = 0; i < L.size(); ++i) {
        if (L.times[i] > T * (1.0 + 1e-12))
            break;
        r.times.push_back(L.times[i]);
        r.margins.push_back(*A - X[i]);
        if (X[i] >= sup) {
            sup = X[i];
            r.worst_time = L.times[i];
        }
    }
    r.extra["A"] = *A;
    r.extra["sup_X"] = sup;
    r.extra["sup_X_over_A"] = *A > 0.0 ? sup / *A : std::numeric_limits<double>::infinity();
    r.max_relative_residual = *A > 0.0 ? std::max(0.0, sup / *A - 1.0) : 0.0;
    r.status = sup <= *A ? AuditStatus::inequality_pass : AuditStatus::violated;
    return r;
}

// ---------------------------------------------------------------------------
// Driver
// ---------------------------------------------------------------------------

/// Estimate parameters with the data norms replaced by those measured at t = 0.
inline EstimateParams measured_estimate_params(const Trajectory& tr, EstimateParams est)
{
    const LedgerInitial& in = tr.ledger.initial;
    est.mu = tr.params.mu;
    est.nu = tr.params.nu;
    est.v0_l2 = in.v0_l2;
    est.v0_l6 = in.v0_l6;
    est.vt0_l2 = in.vt0_l2;
    est.phi0_p = in.phi0_p;
    est.X0 = in.X0;
    est.B0 = in.B0;
    return est;
}

/// A for the bound audits: the converged fixed point when there is one, else sup_t X(t).
struct BoundConstant {
    double A = 0.0;
    bool from_fixed_point = false;
    FixedPointResult fixed_point;
};

inline BoundConstant bound_constant(const Trajectory& tr, const EstimateParams& est)
{
    BoundConstant b;
    b.fixed_point = solve_A(measured_estimate_params(tr, est));
    if (b.fixed_point.converged) {
        b.A = b.fixed_point.A;
        b.from_fixed_point = true;
    } else {
        const auto& X = tr.ledger.at("X");
        b.A = *std::max_element(X.begin(), X.end());
    }
    return b;
}

inline std::vector<AuditReport> run_audits(const Trajectory& tr, const Config& cfg, const AuditTolerances& tol = {})
{
    const auto checks = cfg.selected_checks();
    const auto want = [&](const char* id) { return std::find(checks.begin(), checks.end(), id) != checks.end(); };
    const BoundConstant bc = bound_constant(tr, cfg.est);
    const double mu = tr.params.mu;
    const double nu = tr.params.nu;
    const double gamma = cfg.scenario.gamma;
    std::vector<AuditReport> out;
    auto append = [&](std::vector<AuditReport> rs) {
        for (auto& r : rs) {
            r.extra["A_from_fixed_point"] = bc.from_fixed_point ? 1.0 : 0.0;
            out.push_back(std::move(r));
        }
    };

    if (want("energy"))
        append(audit_energy(tr, tol, cfg.est.c("energy")));
    if (want("decay"))
        append(audit_decay(tr, tol, bc.A));
    if (want("gronwall-grad-phi"))
        append({audit_gronwall(tr, gronwall_grad_phi(mu, nu), tol)});
    if (want("gronwall-rot-psi"))
        append({audit_rot_energy(tr, tol)});
    if (want("gronwall-y"))
        append({audit_gronwall(tr, gronwall_y(mu), tol)});
    if (want("gronwall-u"))
        append({audit_gronwall(tr, gronwall_u(mu), tol)});
    if (want("gronwall-grad-u"))
        append({audit_gronwall(tr, gronwall_grad_u(mu), tol)});
    if (want("phi-heat"))
        append({audit_phi_heat(tr, tol)});
    if (want("stability"))
        append(audit_stability(tr, gamma, cfg.period_value(), bc.A));
    if (want("final-bound"))
        append(audit_final_bound(tr, gamma, bc.A, tol));
    if (want("x-bound"))
        append({audit_x_bound(tr, bc.from_fixed_point ? std::optional<double>(bc.A) : std::nullopt,
                              measured_estimate_params(tr, cfg.est).T_value())});
    if (want("difference-residual"))
        append({audit_difference_residual(tr, tol)});
    if (want("lr-identity"))
        append({audit_lr_identity(tr, tol)});
    return out;
}

inline bool any_violated(const std::vector<AuditReport>& reports)
{
    return std::any_of(reports.begin(), reports.end(), [](const AuditReport& r) { return r.violated(); });
}

/// One `key=value` record per check, then a summary table.
inline void write_audit_text(std::ostream& os, const std::vector<AuditReport>& reports)
{
    const auto num = [](double x) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.6g", x);
        return std::string(buf);
    };
    for (const auto& r : reports) {
        os << "[check " << r.check_id << "]\n";
        os << "status = " << to_string(r.status) << '\n';
        os << "max_relative_residual = " << num(r.max_relative_residual) << '\n';
        if (r.fitted_constant)
            os << "fitted_constant = " << num(*r.fitted_constant) << '\n';
        os << "worst_time = " << num(r.worst_time) << '\n';
        os << "samples = " << r.margins.size() << '\n';
        for (const auto& [k, v] : r.extra)
            os << k << " = " << num(v) << '\n';
        if (!r.note.empty())
            os << "note = " << r.note << '\n';
        os << '\n';
    }
    os << "check                      status           residual     fitted_c\n";
    for (const auto& r : reports) {
        char line[160];
        std::snprintf(line, sizeof line, "%-26s %-16s %-12s %s\n", r.check_id.c_str(), to_string(r.status).c_str(),
                      num(r.max_relative_residual).c_str(),
                      r.fitted_constant ? num(*r.fitted_constant).c_str() : "-");
        os << line;
    }
}

} // namespace speclab
