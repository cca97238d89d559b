#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"

namespace speclab {

/// Which space exponent enters the mixed norm of phi_1.
enum class MixedExponent {
    p_minus_1, ///< 2p/(p-1)
    p_minus_2, ///< 2p/(p-2)
};

/// Square-root form of D2.
enum class D2Form {
    halved,   ///< |v_t(0)|_2 exp(D1^2 A1^2 / 2)
    unhalved, ///< |v_t(0)|_2 exp(D1^2 A1^2)
};

/// Norm of v(0) inside the nu = infinity lower bound.
enum class LowerBoundNorm { l6, l2 };

/// Constants, exponents and initial-data norms feeding the constant chain.
///
/// Fields left as NaN are derived: beta = 1.5 (1 - kappa), phi0_p =
/// (c3 + c4) / (2 nu^kappa), t_freeze = nu^(1 - kappa), T = t_freeze.
struct EstimateParams {
    double mu = 1.0;
    double nu = 1e6;
    double p = 4.0;
    double beta = std::numeric_limits<double>::quiet_NaN();
    double T = std::numeric_limits<double>::quiet_NaN();
    double t_freeze = std::numeric_limits<double>::quiet_NaN();

    double c1 = 1.0;
    double c2 = 1.0;
    double c3 = 1.0;
    double c4 = 1.0;
    double c_generic = 1.0;
    double c_p = 1.0;
    double c0_embed = 1.0;
    double gamma = 1e-2;
    double gamma_star = 1e-2;

    double v0_l2 = 0.1;
    double v0_l6 = 0.1;
    double vt0_l2 = 0.1;
    double phi0_p = std::numeric_limits<double>::quiet_NaN();
    double X0 = 0.01;
    double B0 = 0.01;

    MixedExponent mixed = MixedExponent::p_minus_1;
    D2Form d2_form = D2Form::halved;
    LowerBoundNorm lower_norm = LowerBoundNorm::l6;

    /// Per-inequality replacements for c_generic, keyed by tag ("energy", "chain", ...).
    std::map<std::string, double> c_override;

    double kappa() const { return 1.5 - 3.0 / p; }
    double beta_value() const { return std::isnan(beta) ? 1.5 * (1.0 - kappa()) : beta; }
    double t_value() const { return std::isnan(t_freeze) ? std::pow(nu, 1.0 - kappa()) : t_freeze; }
    double T_value() const { return std::isnan(T) ? t_value() : T; }
    double phi0_value() const { return std::isnan(phi0_p) ? (c3 + c4) / (2.0 * std::pow(nu, kappa())) : phi0_p; }

    double c(const std::string& tag) const
    {
        auto it = c_override.find(tag);
        return it == c_override.end() ? c_generic : it->second;
    }

    /// Space exponent of the mixed norm in phi_1.
    double mixed_q() const { return mixed == MixedExponent::p_minus_1 ? 2.0 * p / (p - 1.0) : 2.0 * p / (p - 2.0); }
    /// Time exponent of the mixed norm in phi_1.
    double mixed_s() const { return 2.0 / (1.0 - kappa()); }

    /// A1 = sqrt(c) |v(0)|_2 from the energy estimate.
    double A1() const { return std::sqrt(c("energy")) * v0_l2; }

    void validate() const
    {
        auto positive = [](double x, const char* key) {
            if (!(x > 0.0) || !std::isfinite(x))
                throw ConfigError(key, "must be positive and finite");
        };
        auto nonneg = [](double x, const char* key) {
            if (!(x >= 0.0) || !std::isfinite(x))
                throw ConfigError(key, "must be nonnegative and finite");
        };
        positive(mu, "mu");
        nonneg(nu, "nu");
        if (!(p > 3.0 && p < 6.0))
            throw ConfigError("p", "must lie strictly inside (3, 6)");
        if (!std::isnan(beta) && !(beta < 2.0 * (1.0 - kappa())))
            throw ConfigError("beta", "must be below 2(1 - kappa)");
        if (!std::isnan(T))
            positive(T, "T");
        if (!std::isnan(t_freeze))
            positive(t_freeze, "t_freeze");
        positive(c1, "c1");
        positive(c2, "c2");
        positive(c3, "c3");
        positive(c4, "c4");
        positive(c_generic, "c_generic");
        positive(c_p, "c_p");
        positive(c0_embed, "c0_embed");
        nonneg(gamma, "gamma");
        nonneg(gamma_star, "gamma_star");
        nonneg(v0_l2, "v0_l2");
        nonneg(v0_l6, "v0_l6");
        nonneg(vt0_l2, "vt0_l2");
        if (!std::isnan(phi0_p))
            nonneg(phi0_p, "phi0_p");
        nonneg(X0, "X0");
        nonneg(B0, "B0");
        for (const auto& [tag, value] : c_override)
            if (!(value > 0.0))
                throw ConfigError("c." + tag, "override must be positive");
    }
};

/// nu-free factor of the coefficient of |div v|^r in the L_r estimate.
inline double eval_cbar(double r, double mu, double c0)
{
    if (!(r > 2.0))
        throw DomainError("eval_cbar: r must exceed 2");
    if (!(mu > 0.0) || !(c0 > 0.0))
        throw DomainError("eval_cbar: mu and c0 must be positive");
    return (r - 2.0) * std::pow((r - 2.0) / ((r - 1.0) * mu), r - 1.0) * std::pow(r, r / 2.0 - 2.0) /
           std::pow(c0, r / 2.0 - 1.0);
}

/// phi_1 with the minimum over time already taken: margin = min_t(|phi(0)|_p - sqrt(t) Psi / nu).
inline double eval_phi1_margin(const EstimateParams& params, double margin, double v_mixed_norm)
{
    if (!(margin > 0.0))
        throw RegimeError("phi_1: |phi(0)|_p - sqrt(t) Psi / nu is not positive (" + std::to_string(margin) + ")");
    const double k = params.kappa();
    const double denom = std::pow(params.mu + params.nu, k) * margin;
    const double num = params.c("phi1") * std::pow(v_mixed_norm, 2.0 / (1.0 - k));
    return std::exp(num / std::pow(denom, 1.0 / (1.0 - k)));
}

inline double eval_phi1(const EstimateParams& params, double Psi, double t, double v_mixed_norm)
{
    const double margin = params.phi0_value() - std::sqrt(t) * Psi / params.nu;
    return eval_phi1_margin(params, margin, v_mixed_norm);
}

/// D1 as a function of the self-bound X, time frozen at t_value().
inline double eval_D1_of_X(const EstimateParams& params, double X)
{
    const double k = params.kappa();
    const double nu = params.nu;
    const double norm0 = params.lower_norm == LowerBoundNorm::l6 ? params.v0_l6 : params.v0_l2;
    const double tail = params.c1 * norm0 + params.A1();
    if (X == 0.0)
        return tail;
    const double denom = params.c3 - std::sqrt(params.t_value()) * X / std::pow(nu, 1.0 - k);
    if (!(denom > 0.0))
        throw RegimeError("D1(X): c3 - sqrt(t) X / nu^(1-kappa) is not positive at X = " + std::to_string(X));
    const double expo = std::pow(X, 2.0 / (1.0 - k)) / std::pow(denom, 1.0 / (1.0 - k));
    const double growth = X / std::cbrt(nu) + std::pow(X, 2.0 / 3.0) / std::pow(nu, (k - 0.5) / 3.0);
    return params.c1 * std::exp(expo) * growth + tail;
}

inline double eval_D2_of_D1(const EstimateParams& params, double D1)
{
    const double a = D1 * D1 * params.A1() * params.A1();
    return params.vt0_l2 * std::exp(params.d2_form == D2Form::halved ? 0.5 * a : a);
}

/// The composite function phi(D1, D2, Psi/nu, chi0/sqrt(nu), B(0)).
inline double eval_chain_phi(const EstimateParams& params, double D1, double D2, double psi_over_nu,
                             double chi_over_sqrt_nu, double B0)
{
    const double A1s = params.A1() * params.A1();
    const double a2 = psi_over_nu * psi_over_nu;
    const double b2 = chi_over_sqrt_nu * chi_over_sqrt_nu;
    const double b4 = b2 * b2;
    const double D1s = D1 * D1;
    const double D14 = D1s * D1s;
    const double D18 = D14 * D14;
    const double D2s = D2 * D2;
    const double D24 = D2s * D2s;
    const double inner = D1s + b2;
    const double quartic = D14 + D18 + b4;

    double bracket = 0.0;
    bracket += (A1s + a2) * std::pow(inner, 4);
    bracket += (1.0 + D14 + b4) * inner * (D2s + a2);
    bracket += A1s * (1.0 + D2s + D24 + b2) * quartic;
    bracket += std::pow(A1s, 4) * (A1s + b2) * std::pow(quartic, 4);
    bracket += (A1s + b2) * (1.0 + D18 * D18) * std::pow(B0, 4);
    bracket += (1.0 + D14) * (D2s + D24 + b2 + D14 + b4) * B0;
    return std::sqrt(params.c("chain") * bracket);
}

/// X -> phi(D1(X), D2(X), X/nu, X/sqrt(nu), B(0)) + X(0).
inline double eval_bound_chain(const EstimateParams& params, double X)
{
    if (!(X >= 0.0))
        throw DomainError("eval_bound_chain: X must be nonnegative");
    const double D1 = eval_D1_of_X(params, X);
    const double D2 = eval_D2_of_D1(params, D1);
    return eval_chain_phi(params, D1, D2, X / params.nu, X / std::sqrt(params.nu), params.B0) + params.X0;
}

/// Right-hand side of the nu = infinity lower bound for A.
inline double lower_bound_A(const EstimateParams& params)
{
    const double norm0 = params.lower_norm == LowerBoundNorm::l6 ? params.v0_l6 : params.v0_l2;
    const double D1 = params.c1 * norm0 + params.A1();
    const double D2 = eval_D2_of_D1(params, D1);
    return eval_chain_phi(params, D1, D2, 0.0, 0.0, params.B0) + params.X0;
}

struct FixedPointResult {
    double A = 0.0;
    int iterations = 0;
    double contraction_modulus = std::numeric_limits<double>::quiet_NaN();
    bool converged = false;
    bool relaxed = false;
    double lower_bound = 0.0;
    bool lower_bound_ok = false;
    double residual = std::numeric_limits<double>::quiet_NaN();
    /// Set when a regime condition failed; offending_iterate holds the A at which it did.
    std::optional<std::string> regime_violation;
    double offending_iterate = std::numeric_limits<double>::quiet_NaN();
    std::optional<std::string> failure;
};

struct SolveOptions {
    int max_iter = 500;
    double tol = 1e-10;
};

namespace detail {

/// Largest difference quotient of the map around A.
inline double contraction_estimate(const EstimateParams& params, double A)
{
    double best = 0.0;
    bool any = false;
    for (double rel : {1e-4, 1e-3, 1e-2}) {
        const double h = rel * std::max(A, 1e-6);
        const double lo = std::max(A - h, 0.0);
        const double hi = A + h;
        try {
            const double q = std::abs(eval_bound_chain(params, hi) - eval_bound_chain(params, lo)) / (hi - lo);
            if (std::isfinite(q)) {
                best = std::max(best, q);
                any = true;
            }
        } catch (const RegimeError&) {
        }
    }
    return any ? best : std::numeric_limits<double>::infinity();
}

} // namespace detail

/// Successive approximation of A = phi(D1(A), D2(A), A/nu, A/sqrt(nu), B(0)) + X(0).
inline FixedPointResult solve_A(const EstimateParams& params, SolveOptions opts = {})
{
    FixedPointResult res;
    res.lower_bound = lower_bound_A(params);
    double A = res.lower_bound;

    const double t = params.t_value();
    const double T = params.T_value();
    const double nu_beta = std::pow(params.nu, params.beta_value());
    if (!(t <= T && T < nu_beta && params.beta_value() < 2.0 * (1.0 - params.kappa()))) {
        res.regime_violation = "horizon: need t <= T < nu^beta with beta < 2(1 - kappa); t = " + std::to_string(t) +
                               ", T = " + std::to_string(T) + ", nu^beta = " + std::to_string(nu_beta);
        res.offending_iterate = A;
        res.A = A;
        return res;
    }

    double prev_step = 0.0;
    int sign_flips = 0;
    for (int it = 1; it <= opts.max_iter; ++it) {
        double mapped = 0.0;
        try {
            mapped = eval_bound_chain(params, A);
        } catch (const RegimeError& e) {
            res.regime_violation = e.what();
            res.offending_iterate = A;
            res.A = A;
            res.iterations = it;
            return res;
        }
        res.iterations = it;
        if (!std::isfinite(mapped)) {
            res.failure = "map overflowed at A = " + std::to_string(A);
            res.offending_iterate = A;
            res.A = A;
            return res;
        }
        const double step = mapped - A;
        if (std::abs(step) <= opts.tol * (1.0 + A)) {
            res.A = A;
            res.residual = std::abs(step);
            res.contraction_modulus = detail::contraction_estimate(params, A);
            res.converged = res.contraction_modulus < 1.0;
            res.lower_bound_ok = A >= res.lower_bound;
            if (!res.converged)
                res.failure = "fixed point found but the map does not contract there";
            return res;
        }
        if (prev_step != 0.0 && step * prev_step < 0.0 && std::abs(step) >= 0.9 * std::abs(prev_step))
            ++sign_flips;
        if (sign_flips >= 2)
            res.relaxed = true;
        prev_step = step;
        A = res.relaxed ? A + 0.5 * step : mapped;
    }
    res.A = A;
    try {
        res.residual = std::abs(eval_bound_chain(params, A) - A);
        res.contraction_modulus = detail::contraction_estimate(params, A);
    } catch (const RegimeError&) {
    }
    res.failure = "no convergence within " + std::to_string(opts.max_iter) + " iterations";
    return res;
}

struct AdmissibilityCondition {
    std::string id;
    std::string description;
    bool passed = false;
    double margin = 0.0;
    bool in_verdict = true;
};

struct AdmissibilityReport {
    std::vector<AdmissibilityCondition> conditions;
    bool verdict = true;

    const AdmissibilityCondition& at(const std::string& id) const
    {
        for (const auto& c : conditions)
            if (c.id == id)
                return c;
        throw UsageError("no admissibility condition named " + id);
    }
};

/// Every regime predicate with its margin; the verdict joins those marked in_verdict.
inline AdmissibilityReport check_admissibility(const EstimateParams& params, double A)
{
    AdmissibilityReport rep;
    auto add = [&](std::string id, std::string text, double margin, bool strict, bool in_verdict = true) {
        const bool ok = strict ? margin > 0.0 : margin >= 0.0;
        rep.conditions.push_back({std::move(id), std::move(text), ok, margin, in_verdict});
        if (in_verdict)
            rep.verdict = rep.verdict && ok;
    };
    const double k = params.kappa();
    const double nu = params.nu;
    const double mu = params.mu;
    const double phi0 = params.phi0_value();
    const double t = params.t_value();
    const double T = params.T_value();
    const double beta = params.beta_value();

    add("phi-margin", "(mu+nu)^kappa (|phi(0)|_p - sqrt(t) A / nu) >= c2",
        std::pow(mu + nu, k) * (phi0 - std::sqrt(t) * A / nu) - params.c2, false);
    add("phi-window-lower", "c3 / nu^kappa <= |phi(0)|_p", phi0 - params.c3 / std::pow(nu, k), false);
    add("phi-window-upper", "|phi(0)|_p <= c4 / nu^kappa", params.c4 / std::pow(nu, k) - phi0, false);

    const double cA = params.c("y-growth");
    add("y-decay", "c A^4 < mu T / 2", mu * T / 2.0 - cA * std::pow(A, 4), true);
    add("u-slab", "c A^2 <= mu T / 2", mu * T / 2.0 - params.c("u-slab") * A * A, false);
    add("a-priori", "c A^4 <= mu T", mu * T - cA * std::pow(A, 4), false, false);

    add("beta", "beta < 2 (1 - kappa)", 2.0 * (1.0 - k) - beta, true);
    add("horizon-t", "t <= T", T - t, false);
    add("horizon-T", "T < nu^beta", std::pow(nu, beta) - T, true);

    const double c54 = params.c("u-smallness");
    const double gs = params.gamma_star;
    add("u-smallness-quartic", "mu - c exp(2 c A^2) gamma*^4 >= mu / 2",
        mu - c54 * std::exp(2.0 * c54 * A * A) * std::pow(gs, 4) - mu / 2.0, false);
    add("u-smallness-quadratic", "mu - c exp(2 c A^2) gamma*^2 >= mu / 2",
        mu - c54 * std::exp(2.0 * c54 * A * A) * gs * gs - mu / 2.0, false, false);
    add("gamma", "gamma <= gamma*", gs - params.gamma, false);
    return rep;
}

} // namespace speclab
