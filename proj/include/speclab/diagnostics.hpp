#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "dynamics.hpp"

namespace speclab {

struct LedgerOptions {
    PhysicalParams physics;
    StepOptions step;
    EstimateParams est;
    /// Start T of the slab Omega_T^t used by X0_v.
    double slab_start = 0.0;
    /// Period of the slabs [kT, (k+1)T] used by X0_u, K; non-positive means one slab.
    double period = 0.0;
};

/// Data norms fixed by the first sample.
struct LedgerInitial {
    bool set = false;
    double v0_l2 = 0.0;
    double v0_h2 = 0.0;
    double v0_l6 = 0.0;
    double vt0_l2 = 0.0;
    double phi0_p = 0.0;
    double A1 = 0.0;
    double X0 = 0.0;   ///< X(0)
    double B0 = 0.0;   ///< nu |grad phi(0)|_{1,1}^2 + |curl psi(0)|_{1,1}^2
    double grad_phi0_gamma = 0.0; ///< sqrt(nu) |grad phi(0)|_{2,1}
};

/// Time integrals, running extrema and slab bookkeeping.
struct LedgerAccumulators {
    double int_grad_phi_31 = 0.0; ///< int |grad phi|_{3,1}^2
    double int_rot_psi_31 = 0.0;  ///< int |curl psi|_{3,1}^2
    double sup_grad_phi_21 = 0.0; ///< sup |grad phi|_{2,1}^2
    double int_mixed = 0.0;       ///< int |v|_q^s
    double min_phi_margin = std::numeric_limits<double>::infinity();
    double int_v_h3 = 0.0;        ///< int_T^t ||v||_3^2
    double int_lap_phi_h2 = 0.0;  ///< int_T^t ||Delta phi||_2^2
    double int_v_h2_slab = 0.0;   ///< int_{kT}^t ||v||_2^2
    long slab = 0;
    double int_lap_phi_187 = 0.0; ///< int |Delta phi|_{18/7}^6
    double sup_grad_lap_phi = 0.0;
    double int_grad_phi_l2 = 0.0; ///< int |grad phi|_2^2
    std::map<std::string, double> previous; ///< integrands at the last sample
};

/// Every scalar diagnostic, one series entry per sample.
struct NormLedger {
    explicit NormLedger(LedgerOptions o = {}) : options(std::move(o)) {}

    LedgerOptions options;
    LedgerInitial initial;
    LedgerAccumulators acc;
    std::vector<double> times;
    std::map<std::string, std::vector<double>, std::less<>> series;

    std::size_t size() const { return times.size(); }

    bool has(std::string_view name) const { return series.find(name) != series.end(); }

    const std::vector<double>& at(std::string_view name) const
    {
        auto it = series.find(name);
        if (it == series.end())
            throw UsageError("ledger has no series named " + std::string(name));
        return it->second;
    }

    double last(std::string_view name) const { return at(name).back(); }

    /// Append one row; every series must receive a value.
    void push(double t, const std::map<std::string, double>& row)
    {
        if (!times.empty() && !(t > times.back()))
            throw UsageError("ledger: sample at t = " + std::to_string(t) + " is not after t = " +
                             std::to_string(times.back()));
        times.push_back(t);
        for (const auto& [name, value] : row)
            series[name].push_back(value);
    }
};

/// D1 from the ledger: c1 Psi^{2/3} phi1 (Psi^{1/3}/nu^{1/3} + nu^{-(kappa-1/2)/3}) + c1 (|v(0)|_6 + A1).
inline double compute_D1(const NormLedger& ledger, const EstimateParams& params)
{
    const double Psi = ledger.acc.int_grad_phi_31 > 0.0
                           ? params.nu * std::sqrt(ledger.acc.int_grad_phi_31)
                           : 0.0;
    const double tail = params.c1 * (ledger.initial.v0_l6 + ledger.initial.A1);
    if (Psi == 0.0)
        return tail;
    const double mixed = std::pow(ledger.acc.int_mixed, 1.0 / params.mixed_s());
    const double phi1 = eval_phi1_margin(params, ledger.acc.min_phi_margin, mixed);
    const double k = params.kappa();
    return params.c1 * std::pow(Psi, 2.0 / 3.0) * phi1 *
               (std::cbrt(Psi) / std::cbrt(params.nu) + 1.0 / std::pow(params.nu, (k - 0.5) / 3.0)) +
           tail;
}

inline double compute_D2(const NormLedger& ledger, const EstimateParams& params)
{
    const double D1 = compute_D1(ledger, params);
    const double a = D1 * D1 * ledger.initial.A1 * ledger.initial.A1;
    return ledger.initial.vt0_l2 * std::exp(params.d2_form == D2Form::halved ? 0.5 * a : a);
}

/// B = e^{-mu T / 2} ||v(0)||_2 + A / sqrt(nu).
inline double compute_B(const NormLedger& ledger, double T, double A)
{
    const auto& ph = ledger.options.physics;
    return std::exp(-0.5 * ph.mu * T) * ledger.initial.v0_h2 + (ph.nu > 0.0 ? A / std::sqrt(ph.nu) : 0.0);
}

namespace detail {

inline double hs2(const SpectralField& f, int s) { return sobolev_norm_sq_multiplier(f, s); }

inline MultiIndex unit_index(int axis)
{
    return axis == 0 ? MultiIndex{1, 0, 0} : (axis == 1 ? MultiIndex{0, 1, 0} : MultiIndex{0, 0, 1});
}

/// Sum of ||d_j F||_s^2 over j: the H^s norm of the full gradient tensor.
inline double grad_tensor_hs2(const SpectralField& F, int s)
{
    return hs2(differentiate(F, unit_index(0)), s) + hs2(differentiate(F, unit_index(1)), s) +
           hs2(differentiate(F, unit_index(2)), s);
}

/// sum_{i,j} d_i d_j (A_ij) for a product tensor given as a callback over (i, j).
template <typename Entry>
SpectralField double_divergence(const Grid& g, Entry&& entry)
{
    SpectralField out(g, Rank::scalar);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            out += differentiate(differentiate(entry(i, j), unit_index(i)), unit_index(j));
    return out;
}

inline SpectralField pointwise_product(const RealField& a, int ca, const RealField& b, int cb, bool dealias_on)
{
    RealField p(a.grid(), Rank::scalar);
    auto x = a.component(ca), y = b.component(cb);
    auto out = p.component(0);
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = x[i] * y[i];
    SpectralField P = to_spectral(p);
    return dealias_on ? dealias(P) : P;
}

inline double relative_gap(double a, double b)
{
    const double scale = std::max(std::abs(a), std::abs(b));
    return scale > 0.0 ? std::abs(a - b) / scale : 0.0;
}

} // namespace detail

/// Residual of phi_t - (mu+nu) Delta phi = -inv_lap d_i d_j (v_i v_j) + inv_lap d_i d_j (phi_{x_i} v_j).
inline double phi_heat_residual(const SimState& s, const PhysicalParams& params, const StepOptions& opts)
{
    const Grid& g = s.grid();
    const PotentialPair pt = decompose(s.v_t);
    const SpectralField diff = (params.mu + params.nu) * laplacian(s.potentials.phi);
    SpectralField lhs = pt.phi - diff;

    const RealField vr = to_real(s.v);
    const RealField gp = to_real(gradient(s.potentials.phi));
    SpectralField rhs(g, Rank::scalar);
    if (opts.convection) {
        const SpectralField vv = detail::double_divergence(
            g, [&](int i, int j) { return detail::pointwise_product(vr, i, vr, j, opts.dealias); });
        const SpectralField pv = detail::double_divergence(
            g, [&](int i, int j) { return detail::pointwise_product(gp, i, vr, j, opts.dealias); });
        rhs = inverse_laplacian(zero_mean(pv - vv));
    }
    const double a = std::sqrt(l2_norm_sq(lhs - rhs));
    // relative to the size of the individual terms, so a flow with no gradient forcing is not judged on roundoff
    const double scale = std::max({std::sqrt(l2_norm_sq(pt.phi)), std::sqrt(l2_norm_sq(diff)), std::sqrt(l2_norm_sq(rhs))});
    return scale > 0.0 ? a / scale : 0.0;
}

/// Fold one sample into the ledger; dt_since_last weights the trapezoid (ignored for the first sample).
inline void ledger_update(NormLedger& ledger, const SimState& s, double dt_since_last)
{
    if (!ledger.times.empty() && !(s.t > ledger.times.back()))
        throw UsageError("ledger_update: sample at t = " + std::to_string(s.t) + " arrives out of order");
    const LedgerOptions& o = ledger.options;
    const double mu = o.physics.mu;
    const double nu = o.physics.nu;
    const EstimateParams& est = o.est;
    const double cg = est.c_generic;
    const double inf = std::numeric_limits<double>::infinity();
    using detail::hs2;

    // ---- fields -------------------------------------------------------------
    const SpectralField u = s.u();
    const PotentialPair pt = decompose(s.v_t);
    const SpectralField grad_phi = gradient(s.potentials.phi);
    const SpectralField rot_psi = curl(s.potentials.psi);
    const SpectralField grad_phi_t = gradient(pt.phi);
    const SpectralField rot_psi_t = curl(pt.psi);
    const SpectralField div_v = divergence(s.v);

    std::map<std::string, double> row;
    auto put = [&](const char* name, double value) { row[name] = value; };

    // ---- Sobolev and Gamma quantities ----------------------------------------
    const double v_l2sq = hs2(s.v, 0);
    const double v_h1sq = hs2(s.v, 1);
    const double v_h2sq = hs2(s.v, 2);
    const double v_h3sq = hs2(s.v, 3);
    const double V_h1sq = hs2(s.V, 1);
    const double u_l2sq = hs2(u, 0);
    const double u_h1sq = hs2(u, 1);
    const double gp_l2sq = hs2(grad_phi, 0);
    const double gp_h1sq = hs2(grad_phi, 1);
    const double gp_h2sq = hs2(grad_phi, 2);
    const double gp_h3sq = hs2(grad_phi, 3);
    const double gpt_l2sq = hs2(grad_phi_t, 0);
    const double gpt_h1sq = hs2(grad_phi_t, 1);
    const double gpt_h2sq = hs2(grad_phi_t, 2);
    const double rp_h2sq = hs2(rot_psi, 2);
    const double rp_h3sq = hs2(rot_psi, 3);
    const double rpt_h1sq = hs2(rot_psi_t, 1);
    const double rpt_h2sq = hs2(rot_psi_t, 2);
    const double div_l2sq = hs2(div_v, 0);
    const double div_h2sq = hs2(div_v, 2);
    const double grad_v_l2sq = v_h1sq - v_l2sq;

    const double gp21 = gp_h2sq + gpt_h1sq;
    const double gp31 = gp_h3sq + gpt_h2sq;
    const double rp21 = rp_h2sq + rpt_h1sq;
    const double rp31 = rp_h3sq + rpt_h2sq;
    const double Y2 = nu * gp21 + rp21;

    // ---- Lebesgue quantities ---------------------------------------------------
    const RealField vr = to_real(s.v);
    const double v_l6 = lp_norm(vr, 6.0);
    const double v_q = lp_norm(vr, est.mixed_q());
    const double grad_v_l6 = lp_norm(jacobian_magnitude(s.v), 6.0);
    const double vt_l2 = std::sqrt(hs2(s.v_t, 0));
    const double vt_l6 = lp_norm(s.v_t, 6.0);
    const RealField rpr = to_real(rot_psi);
    const double rp_l6 = lp_norm(rpr, 6.0);
    const double rp_l3 = lp_norm(rpr, 3.0);
    const double gp_l6 = lp_norm(grad_phi, 6.0);
    const double hess_l3 = lp_norm(jacobian_magnitude(grad_phi), 3.0);
    const double phi_lp = lp_norm(s.potentials.phi, est.p);
    const SpectralField lap_phi = laplacian(s.potentials.phi);
    const double lap_l187 = lp_norm(lap_phi, 18.0 / 7.0);
    const double grad_lap_l2 = std::sqrt(hs2(gradient(lap_phi), 0));

    // ---- initial data ----------------------------------------------------------
    if (!ledger.initial.set) {
        LedgerInitial& in = ledger.initial;
        in.set = true;
        in.v0_l2 = std::sqrt(v_l2sq);
        in.v0_h2 = std::sqrt(v_h2sq);
        in.v0_l6 = v_l6;
        in.vt0_l2 = vt_l2;
        in.phi0_p = phi_lp;
        in.A1 = std::sqrt(est.c("energy")) * in.v0_l2;
        in.X0 = std::sqrt(Y2);
        in.B0 = nu * (gp_h1sq + gpt_l2sq) + hs2(rot_psi, 1) + hs2(rot_psi_t, 0);
        in.grad_phi0_gamma = std::sqrt(nu * gp21);
    }

    // ---- time integrals --------------------------------------------------------
    LedgerAccumulators& a = ledger.acc;
    const bool first = ledger.times.empty();
    auto trapz = [&](const char* key, double now) {
        double add = 0.0;
        if (!first) {
            auto it = a.previous.find(key);
            const double before = it == a.previous.end() ? now : it->second;
            add = 0.5 * dt_since_last * (before + now);
        }
        a.previous[key] = now;
        return add;
    };
    a.int_grad_phi_31 += trapz("gp31", gp31);
    a.int_rot_psi_31 += trapz("rp31", rp31);
    a.sup_grad_phi_21 = std::max(a.sup_grad_phi_21, gp21);
    a.int_mixed += trapz("mixed", std::pow(v_q, est.mixed_s()));
    a.int_lap_phi_187 += trapz("lap187", std::pow(lap_l187, 6.0));
    a.sup_grad_lap_phi = std::max(a.sup_grad_lap_phi, grad_lap_l2);
    a.int_grad_phi_l2 += trapz("gpl2", gp_l2sq);
    {
        const double add_v3 = trapz("vh3", v_h3sq);
        const double add_lap = trapz("laph2", div_h2sq);
        if (s.t > o.slab_start) {
            a.int_v_h3 += add_v3;
            a.int_lap_phi_h2 += add_lap;
        }
    }
    {
        const double add = trapz("vh2", v_h2sq);
        const long slab = o.period > 0.0 ? static_cast<long>(std::floor(s.t / o.period + 1e-9)) : 0;
        if (slab != a.slab) {
            a.slab = slab;
            a.int_v_h2_slab = 0.0;
        } else {
            a.int_v_h2_slab += add;
        }
    }

    const double Psi = nu * std::sqrt(a.int_grad_phi_31);
    const double chi0 = std::sqrt(nu) * std::sqrt(a.sup_grad_phi_21);
    const double X2 = Y2 + mu * (nu * a.int_grad_phi_31 + a.int_rot_psi_31) + nu * nu * a.int_grad_phi_31;
    a.min_phi_margin = std::min(a.min_phi_margin, ledger.initial.phi0_p - std::sqrt(s.t) * Psi / std::max(nu, 1e-300));

    const double X0_v = v_h2sq + mu * a.int_v_h3 + nu * a.int_lap_phi_h2;
    const double decay_slab = std::exp(-cg * a.int_v_h2_slab);
    const double G2 = cg * (v_h2sq * gp_h1sq + (gpt_h1sq - gpt_l2sq) + gp_h2sq + gp_l6 * gp_l6 * hess_l3 * hess_l3 +
                            (gp_h1sq - gp_l2sq) * hess_l3 * hess_l3);

    double D1 = std::numeric_limits<double>::quiet_NaN();
    double D2 = D1;
    EstimateParams dp = est;
    dp.mu = mu;
    dp.nu = nu;
    try {
        D1 = compute_D1(ledger, dp);
        D2 = compute_D2(ledger, dp);
    } catch (const RegimeError&) {
    }

    // ---- identity checks -------------------------------------------------------
    const double diss = mu * grad_v_l2sq + nu * div_l2sq;
    const double rate = inner(s.v_t, s.v);
    const double energy_residual = std::abs(rate + diss) / (diss + std::numeric_limits<double>::min());
    const double nv_norm = std::sqrt(hs2(s.Nv, 0));
    const double conv_energy = nv_norm > 0.0 && v_l2sq > 0.0
                                   ? std::abs(inner(s.Nv, s.v)) / (nv_norm * std::sqrt(v_l2sq))
                                   : 0.0;
    // half d/dt |curl psi|^2 + mu |grad curl psi|^2 = -<(curl psi) . grad v, curl psi>
    const double rot_lhs = inner(rot_psi_t, rot_psi) + mu * (hs2(rot_psi, 1) - hs2(rot_psi, 0));
    const double rot_rhs = inner(s.Nv, rot_psi);
    const double rot_scale = std::max({std::abs(rot_lhs), std::abs(rot_rhs), mu * (hs2(rot_psi, 1) - hs2(rot_psi, 0))});
    const double rot_residual = rot_scale > 0.0 ? std::abs(rot_lhs - rot_rhs) / rot_scale : 0.0;
    const LrTerms lr = lr_terms(s.v, 2.0, mu, nu, est.c0_embed);

    // ---- row -------------------------------------------------------------------
    put("v_l2", std::sqrt(v_l2sq));
    put("V_l2", std::sqrt(hs2(s.V, 0)));
    put("u_h1", std::sqrt(u_h1sq));
    put("v_h1", std::sqrt(v_h1sq));
    put("V_h1", std::sqrt(V_h1sq));
    put("div_v_l2", std::sqrt(div_l2sq));
    put("Psi", Psi);
    put("chi0", chi0);
    put("X", std::sqrt(X2));
    put("X2", X2);
    put("Y", std::sqrt(Y2));
    put("Y2", Y2);
    put("X0_v", X0_v);
    put("X0_u", std::sqrt(decay_slab * u_h1sq));
    put("G", std::sqrt(G2));
    put("K", std::sqrt(decay_slab * G2));
    put("D1", D1);
    put("D2", D2);
    put("energy_residual", energy_residual);
    put("energy_rate", rate);
    put("energy_dissipation", diss);
    put("convection_energy", conv_energy);
    put("curl_residual", difference_residual(s, o.physics, o.step).curl_ratio);
    put("phi_heat_residual", phi_heat_residual(s, o.physics, o.step));
    put("rot_energy_residual", rot_residual);
    put("lr_identity_residual", lr.identity_residual);
    put("lr_singular_measure", lr.singular_measure);
    put("interp_ratio", a.sup_grad_lap_phi > 0.0 && a.int_grad_phi_l2 > 0.0
                            ? std::pow(a.int_lap_phi_187, 1.0 / 6.0) /
                                  (std::pow(a.sup_grad_lap_phi, 2.0 / 3.0) * std::pow(a.int_grad_phi_l2, 1.0 / 6.0))
                            : 0.0);
    put("mixed_norm", std::pow(a.int_mixed, 1.0 / est.mixed_s()));
    put("phi_margin", a.min_phi_margin);
    put("cfl_vmax", std::max(lp_norm(vr, inf), lp_norm(s.V, inf)));

    // squared factors used by the Gronwall audits
    put("v_l2sq", v_l2sq);
    put("v_h1sq", v_h1sq);
    put("v_h2sq", v_h2sq);
    put("V_h1sq", V_h1sq);
    put("u_l2sq", u_l2sq);
    put("u_h1sq", u_h1sq);
    put("grad_u_l2sq", u_h1sq - u_l2sq);
    put("grad_u_h1sq", detail::grad_tensor_hs2(u, 1));
    put("grad_v_l2sq", grad_v_l2sq);
    put("div_v_l2sq", div_l2sq);
    put("grad_phi_l2sq", gp_l2sq);
    put("grad_phi_h1sq", gp_h1sq);
    put("grad_phi_h2sq", gp_h2sq);
    put("hess_phi_l2sq", gp_h1sq - gp_l2sq);
    put("lap_phi_l2sq", div_l2sq);
    put("grad_phit_l2sq", gpt_l2sq);
    put("hess_phit_l2sq", gpt_h1sq - gpt_l2sq);
    put("v_l6", v_l6);
    put("grad_v_l6", grad_v_l6);
    put("vt_l6", vt_l6);
    put("rotpsi_l6", rp_l6);
    put("rotpsi_l3", rp_l3);
    put("grad_phi_l6", gp_l6);
    put("hess_phi_l3", hess_l3);
    put("phi_lp", phi_lp);

    ledger.push(s.t, row);
}

} // namespace speclab
