#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <tuple>

#include "estimates.hpp"
#include "helmholtz.hpp"
#include "norms.hpp"

namespace speclab {

struct PhysicalParams {
    double mu = 1.0;
    double nu = 100.0;

    void validate() const
    {
        if (!(mu > 0.0) || !std::isfinite(mu))
            throw ConfigError("mu", "must be positive");
        if (!(nu >= 0.0) || !std::isfinite(nu))
            throw ConfigError("nu", "must be nonnegative");
    }
};

/// Switches used by verification runs; defaults give the full systems.
struct StepOptions {
    bool dealias = true;
    bool convection = true;
    /// Replace v by its divergence-free part after every step (nu -> infinity surrogate).
    bool project_v = false;
};

// ===========================================================================
// Right-hand sides
// ===========================================================================

/// (w . grad) v evaluated on the grid, optionally truncated by the 2/3 rule.
inline SpectralField convective_term(const SpectralField& w, const SpectralField& v, bool dealias_on = true)
{
    require_same_grid(w.grid(), v.grid());
    const Grid& g = v.grid();
    const RealField wr = to_real(w);
    const RealField d1 = to_real(differentiate(v, {1, 0, 0}));
    const RealField d2 = to_real(differentiate(v, {0, 1, 0}));
    const RealField d3 = to_real(differentiate(v, {0, 0, 1}));
    RealField prod(g, Rank::vector);
    auto w1 = wr.component(0), w2 = wr.component(1), w3 = wr.component(2);
    for (int c = 0; c < 3; ++c) {
        auto out = prod.component(c);
        auto a = d1.component(c), b = d2.component(c), e = d3.component(c);
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] = w1[i] * a[i] + w2[i] * b[i] + w3[i] * e[i];
    }
    SpectralField P = to_spectral(prod);
    return dealias_on ? dealias(P) : P;
}

/// Explicit part of the Navier-Stokes system: -P_L (V . grad V).
inline SpectralField nonlinear_nse(const SpectralField& V, const StepOptions& opts)
{
    if (!opts.convection)
        return SpectralField::zeros_like(V);
    SpectralField N = leray_project(zero_mean(convective_term(V, V, opts.dealias)));
    N *= -1.0;
    return N;
}

/// Explicit part of the regularized system: -(curl psi) . grad v.
inline SpectralField nonlinear_lame(const SpectralField& v, const StepOptions& opts)
{
    if (!opts.convection)
        return SpectralField::zeros_like(v);
    const PotentialPair pp = decompose(v);
    SpectralField N = zero_mean(convective_term(curl(pp.psi), v, opts.dealias));
    N *= -1.0;
    if (opts.project_v)
        return leray_project(N);
    return N;
}

inline SpectralField linear_nse(const SpectralField& V, double mu) { return mu * laplacian(V); }

inline SpectralField linear_lame(const SpectralField& v, double mu, double nu)
{
    return mu * laplacian(v) + nu * gradient(divergence(v));
}

/// Relative size of div V against the largest gradient scale of V.
inline double divergence_ratio(const SpectralField& V)
{
    const double d = std::sqrt(l2_norm_sq(divergence(V)));
    const double s = std::sqrt(sobolev_norm_sq(V, 1));
    return s > 0.0 ? d / s : 0.0;
}

inline SpectralField rhs_nse(const SpectralField& V, double mu, bool dealias_on = true)
{
    if (V.rank() != Rank::vector)
        throw UsageError("rhs_nse: expects a vector field");
    if (!has_zero_mean(V))
        throw ModelError("rhs_nse: V has nonzero mean");
    if (divergence_ratio(V) > 1e-8)
        throw ModelError("rhs_nse: V is not divergence free");
    StepOptions opts;
    opts.dealias = dealias_on;
    return nonlinear_nse(V, opts) + linear_nse(V, mu);
}

inline SpectralField rhs_lame(const SpectralField& v, double mu, double nu, bool dealias_on = true)
{
    StepOptions opts;
    opts.dealias = dealias_on;
    return nonlinear_lame(v, opts) + linear_lame(v, mu, nu);
}

/// Pressure of the Navier-Stokes state, -inv_lap(div(V . grad V)).
inline SpectralField pressure(const SpectralField& V, bool dealias_on = true)
{
    return -1.0 * inverse_laplacian(divergence(zero_mean(convective_term(V, V, dealias_on))));
}

// ===========================================================================
// Exact linear propagators
// ===========================================================================

/// exp(h mu Delta) applied per mode.
inline SpectralField exp_nse(const SpectralField& F, double h, double mu)
{
    const Grid& g = F.grid();
    const detail::Wavenumbers wn(g);
    SpectralField out(g, F.rank());
    detail::for_each_mode(g, [&](std::size_t at, int i, int j, int l) {
        const double k2 = wn.k[i] * wn.k[i] + wn.k[j] * wn.k[j] + wn.k[l] * wn.k[l];
        const double e = std::exp(-mu * k2 * h);
        for (int c = 0; c < F.components(); ++c)
            out.component(c)[at] = e * F.component(c)[at];
    });
    return out;
}

/// exp(h (mu Delta + nu grad div)): e^{-mu|k|^2 h} [(I - P) + e^{-nu|k|^2 h} P], P the projector on k.
inline SpectralField exp_lame(const SpectralField& F, double h, double mu, double nu)
{
    const Grid& g = F.grid();
    const detail::Wavenumbers wn(g);
    SpectralField out(g, Rank::vector);
    detail::for_each_mode(g, [&](std::size_t at, int i, int j, int l) {
        const double k2 = wn.k[i] * wn.k[i] + wn.k[j] * wn.k[j] + wn.k[l] * wn.k[l];
        const double e = std::exp(-mu * k2 * h);
        const double kd[3] = {wn.k_odd[i], wn.k_odd[j], wn.k_odd[l]};
        const double kd2 = kd[0] * kd[0] + kd[1] * kd[1] + kd[2] * kd[2];
        const cplx f[3] = {F.component(0)[at], F.component(1)[at], F.component(2)[at]};
        if (kd2 == 0.0) {
            for (int c = 0; c < 3; ++c)
                out.component(c)[at] = e * f[c];
            return;
        }
        const cplx along = (kd[0] * f[0] + kd[1] * f[1] + kd[2] * f[2]) / kd2;
        const double shrink = -std::expm1(-nu * kd2 * h);
        for (int c = 0; c < 3; ++c)
            out.component(c)[at] = e * (f[c] - shrink * kd[c] * along);
    });
    return out;
}

namespace detail {

/// phi_j(z) = sum_m z^m / (m + j)!, with phi_0 = exp.
inline double phi_function(int j, double z)
{
    if (std::abs(z) < 1.0) {
        double term = 1.0;
        for (int m = 2; m <= j; ++m)
            term /= m;
        double sum = term;
        for (int m = 1; m < 30; ++m) {
            term *= z / (m + j);
            sum += term;
        }
        return sum;
    }
    switch (j) {
    case 0: return std::exp(z);
    case 1: return std::expm1(z) / z;
    case 2: return (std::expm1(z) - z) / (z * z);
    case 3: return (std::expm1(z) - z - 0.5 * z * z) / (z * z * z);
    default: throw UsageError("phi_function: order above 3");
    }
}

/// f(h L) X for L = mu Delta + nu grad div, applied on the splitting along and across k.
template <typename Fn>
SpectralField lame_function(const SpectralField& F, double h, double mu, double nu, Fn&& f)
{
    const Grid& g = F.grid();
    const detail::Wavenumbers wn(g);
    SpectralField out(g, Rank::vector);
    detail::for_each_mode(g, [&](std::size_t at, int i, int j, int l) {
        const double k2 = wn.k[i] * wn.k[i] + wn.k[j] * wn.k[j] + wn.k[l] * wn.k[l];
        const double kd[3] = {wn.k_odd[i], wn.k_odd[j], wn.k_odd[l]};
        const double kd2 = kd[0] * kd[0] + kd[1] * kd[1] + kd[2] * kd[2];
        const cplx x[3] = {F.component(0)[at], F.component(1)[at], F.component(2)[at]};
        const double across = f(-mu * k2 * h);
        if (kd2 == 0.0) {
            for (int c = 0; c < 3; ++c)
                out.component(c)[at] = across * x[c];
            return;
        }
        const double along_f = f(-(mu * k2 + nu * kd2) * h);
        const cplx along = (kd[0] * x[0] + kd[1] * x[1] + kd[2] * x[2]) / kd2;
        for (int c = 0; c < 3; ++c)
            out.component(c)[at] = across * (x[c] - kd[c] * along) + along_f * kd[c] * along;
    });
    return out;
}

} // namespace detail

// ===========================================================================
// State and time stepping
// ===========================================================================

/// (V, v) at time t with tendencies from the right-hand sides.
struct SimState {
    double t = 0.0;
    std::int64_t step = 0;
    SpectralField V;
    SpectralField v;
    SpectralField V_t;
    SpectralField v_t;
    PotentialPair potentials; ///< of v
    SpectralField NV;         ///< explicit part of V_t
    SpectralField Nv;         ///< explicit part of v_t

    SpectralField u() const { return v - V; }
    SpectralField u_t() const { return v_t - V_t; }
    const Grid& grid() const { return v.grid(); }
};

inline SimState make_state(SpectralField V, SpectralField v, double t, std::int64_t step_index,
                           const PhysicalParams& params, const StepOptions& opts)
{
    if (!V.all_finite() || !v.all_finite())
        throw BlowUpError(step_index, t);
    SpectralField NV = nonlinear_nse(V, opts);
    SpectralField Nv = nonlinear_lame(v, opts);
    SpectralField V_t = NV + linear_nse(V, params.mu);
    SpectralField v_t = Nv + linear_lame(v, params.mu, params.nu);
    if (!V_t.all_finite() || !v_t.all_finite())
        throw BlowUpError(step_index, t);
    PotentialPair pp = decompose(v);
    return SimState{t,
                    step_index,
                    std::move(V),
                    std::move(v),
                    std::move(V_t),
                    std::move(v_t),
                    std::move(pp),
                    std::move(NV),
                    std::move(Nv)};
}

/// Courant number dt max|v| / dx; the heuristic asks for at most 0.5.
inline double cfl_number(const SimState& s, double dt)
{
    const double vmax = std::max(lp_norm(s.v, std::numeric_limits<double>::infinity()),
                                 lp_norm(s.V, std::numeric_limits<double>::infinity()));
    return dt * vmax / s.grid().spacing();
}

namespace detail {

/// One Lawson (integrating-factor) RK4 step; N1 is the explicit term at y.
template <typename Explicit, typename Propagate>
SpectralField lawson_rk4(const SpectralField& y, const SpectralField& N1, double h, Explicit&& N, Propagate&& E)
{
    const SpectralField Ey_half = E(y, 0.5 * h);
    SpectralField a = y;
    a.axpy(0.5 * h, N1);
    a = E(a, 0.5 * h);
    const SpectralField N2 = N(a);
    SpectralField b = Ey_half;
    b.axpy(0.5 * h, N2);
    const SpectralField N3 = N(b);
    SpectralField c = E(y, h);
    c.axpy(h, E(N3, 0.5 * h));
    const SpectralField N4 = N(c);

    SpectralField out = E(y, h);
    out.axpy(h / 6.0, E(N1, h));
    SpectralField mid = N2 + N3;
    out.axpy(h / 3.0, E(mid, 0.5 * h));
    out.axpy(h / 6.0, N4);
    return out;
}

/// One exponential time differencing RK4 step (Cox-Matthews) of the regularized system.
///
/// Unlike the integrating factor form it keeps stiff gradient modes on their
/// slow manifold, so nu |div v|^2 stays bounded as nu |k|^2 dt grows.
template <typename Explicit>
SpectralField etd_rk4_lame(const SpectralField& y, const SpectralField& N1, double h, double mu, double nu,
                           Explicit&& N)
{
    const auto fn = [&](const SpectralField& x, double step, auto&& f) { return lame_function(x, step, mu, nu, f); };
    const auto e = [](double z) { return std::exp(z); };
    const auto p1 = [](double z) { return phi_function(1, z); };
    const SpectralField Ey_half = fn(y, 0.5 * h, e);

    SpectralField a = Ey_half;
    a.axpy(0.5 * h, fn(N1, 0.5 * h, p1));
    const SpectralField N2 = N(a);
    SpectralField b = Ey_half;
    b.axpy(0.5 * h, fn(N2, 0.5 * h, p1));
    const SpectralField N3 = N(b);
    SpectralField c = fn(a, 0.5 * h, e);
    SpectralField w = 2.0 * N3;
    w.axpy(-1.0, N1);
    c.axpy(0.5 * h, fn(w, 0.5 * h, p1));
    const SpectralField N4 = N(c);

    const auto f1 = [](double z) { return phi_function(1, z) - 3.0 * phi_function(2, z) + 4.0 * phi_function(3, z); };
    const auto f2 = [](double z) { return phi_function(2, z) - 2.0 * phi_function(3, z); };
    const auto f3 = [](double z) { return -phi_function(2, z) + 4.0 * phi_function(3, z); };
    SpectralField out = fn(y, h, e);
    out.axpy(h, fn(N1, h, f1));
    out.axpy(2.0 * h, fn(N2 + N3, h, f2));
    out.axpy(h, fn(N4, h, f3));
    return out;
}

} // namespace detail

/// Advance both systems by dt: integrating-factor RK4 for V, exponential RK4 for v.
inline SimState step(const SimState& s, double dt, const PhysicalParams& params, const StepOptions& opts = {})
{
    if (!(dt > 0.0))
        throw UsageError("step: dt must be positive");
    const double mu = params.mu;
    const double nu = params.nu;
    const std::int64_t next = s.step + 1;
    const double t = s.t + dt;
    // an overflowing stage surfaces as a non-finite transform input
    try {
        SpectralField V = detail::lawson_rk4(
            s.V, s.NV, dt, [&](const SpectralField& x) { return nonlinear_nse(x, opts); },
            [&](const SpectralField& x, double h) { return exp_nse(x, h, mu); });
        const auto Nv = [&](const SpectralField& x) { return nonlinear_lame(x, opts); };
        // with project_v the gradient part is removed anyway and v follows the V scheme exactly
        SpectralField v = opts.project_v
                              ? detail::lawson_rk4(s.v, s.Nv, dt, Nv,
                                                   [&](const SpectralField& x, double h) { return exp_lame(x, h, mu, nu); })
                              : detail::etd_rk4_lame(s.v, s.Nv, dt, mu, nu, Nv);
        if (!V.all_finite() || !v.all_finite())
            throw BlowUpError(next, t);
        V = leray_project(zero_mean(V));
        v = zero_mean(v);
        if (opts.project_v)
            v = leray_project(v);
        return make_state(std::move(V), std::move(v), t, next, params, opts);
    } catch (const NumericError&) {
        throw BlowUpError(next, t);
    }
}

// ===========================================================================
// Difference system
// ===========================================================================

struct DifferenceResidual {
    SpectralField R;
    double curl_ratio = 0.0; ///< |curl R|_2 / |R|_2, zero when R = 0
};

/// R = u_t + curl psi . grad u + (u - grad phi) . grad(v - u) - mu Delta u - nu grad div u.
///
/// Along exact trajectories R is the pressure gradient. `ut_defect`, when
/// given, is added to u_t to probe the detector.
inline DifferenceResidual difference_residual(const SimState& s, const PhysicalParams& params, const StepOptions& opts = {},
                               const SpectralField* ut_defect = nullptr)
{
    if (s.V_t.values().empty() || s.v_t.values().empty())
        throw UsageError("difference_residual: state carries no tendencies");
    const SpectralField u = s.u();
    SpectralField R = s.u_t();
    if (ut_defect != nullptr)
        R += *ut_defect;
    if (opts.convection) {
        const SpectralField w = curl(s.potentials.psi);
        R += convective_term(w, u, opts.dealias);
        R += convective_term(u - gradient(s.potentials.phi), s.v - u, opts.dealias);
    }
    R -= linear_lame(u, params.mu, params.nu);
    R = zero_mean(R);
    const double r2 = l2_norm_sq(R);
    const double c2 = l2_norm_sq(curl(R));
    return {std::move(R), r2 > 0.0 ? std::sqrt(c2 / r2) : 0.0};
}

// ===========================================================================
// Initial data
// ===========================================================================

enum class ScenarioKind { taylor_green, random_band, paper_scaling };

inline std::string to_string(ScenarioKind k)
{
    switch (k) {
    case ScenarioKind::taylor_green: return "taylor-green";
    case ScenarioKind::random_band: return "random-band";
    case ScenarioKind::paper_scaling: return "paper-scaling";
    }
    return "?";
}

struct ScenarioOptions {
    ScenarioKind kind = ScenarioKind::taylor_green;
    double amplitude = 1.0;     ///< rms velocity of V0
    int k_min = 1;              ///< band of random solenoidal parts, |k| in [k_min, k_max]
    int k_max = 3;
    double grad_fraction = 0.1; ///< random-band: |grad phi0|_2 / |V0|_2
    int grad_k_max = 1;         ///< band of the random gradient potential, |k| in [1, grad_k_max]
    double gamma = 1e-2;        ///< paper-scaling: H1 norm of u0
};

struct InitialData {
    SpectralField V0;
    SpectralField v0;
};

inline SpectralField taylor_green(const Grid& g, double amplitude = 1.0)
{
    return to_spectral(RealField::sample_vector(g, [&](double x, double y, double) {
        return std::array<double, 3>{amplitude * std::sin(x) * std::cos(y), -amplitude * std::cos(x) * std::sin(y),
                                     0.0};
    }));
}

namespace detail {

/// Normal deviates from a fixed generator with a fixed mapping, so draws match across platforms.
class NormalStream {
public:
    explicit NormalStream(std::uint64_t seed) : gen_(seed) {}
    double next()
    {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0)
            u1 = uniform();
        const double u2 = uniform();
        const double rad = std::sqrt(-2.0 * std::log(u1));
        spare_ = rad * std::sin(two_pi * u2);
        has_spare_ = true;
        return rad * std::cos(two_pi * u2);
    }

private:
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Gaussian Fourier amplitudes on k_min <= |k| <= k_max inside the dealiasing box.
///
/// Amplitudes are drawn per integer wavevector in a fixed order over the cube
/// |k_i| <= k_max, so a seed gives the same field on every grid that resolves it.
inline SpectralField random_band(const Grid& g, Rank rank, double k_min, double k_max, NormalStream& rng)
{
    SpectralField F(g, rank);
    const int n = g.n();
    const int K = static_cast<int>(std::floor(k_max));
    const auto index = [n](int a, int b, int c) {
        const auto wrap = [n](int m) { return static_cast<std::size_t>(((m % n) + n) % n); };
        return (wrap(a) * n + wrap(b)) * n + wrap(c);
    };
    const auto resolved = [&](int m) { return m != -g.nyquist() && m != g.nyquist() && dealias_keeps(n, m); };
    for (int a = -K; a <= K; ++a)
        for (int b = -K; b <= K; ++b)
            for (int c = -K; c <= K; ++c) {
                // one draw per pair {k, -k}, taken at the lexicographically positive member
                if (std::make_tuple(a, b, c) <= std::make_tuple(0, 0, 0))
                    continue;
                const double k = std::sqrt(static_cast<double>(a * a + b * b + c * c));
                if (k < k_min || k > k_max)
                    continue;
                std::array<cplx, 3> z{};
                for (int comp = 0; comp < F.components(); ++comp) {
                    const double re = rng.next();
                    z[comp] = cplx(re, rng.next()) * std::sqrt(0.5);
                }
                if (!(resolved(a) && resolved(b) && resolved(c)))
                    continue;
                for (int comp = 0; comp < F.components(); ++comp) {
                    F.component(comp)[index(a, b, c)] = z[comp];
                    F.component(comp)[index(-a, -b, -c)] = std::conj(z[comp]);
                }
            }
    return F;
}

} // namespace detail

/// Zero-mean (V0, v0) for a scenario; V0 is divergence free.
inline InitialData make_initial_data(const Grid& g, const ScenarioOptions& sc, const PhysicalParams& params,
                                     const EstimateParams& est, std::uint64_t seed)
{
    if (sc.kind == ScenarioKind::taylor_green) {
        SpectralField tg = taylor_green(g, sc.amplitude);
        return {tg, tg};
    }
    if (sc.k_min < 1 || sc.k_max < sc.k_min)
        throw ScenarioError("band limits need 1 <= k_min <= k_max");
    detail::NormalStream rng(seed);
    const double rms_target = sc.amplitude * std::sqrt(g.volume());

    SpectralField V0 = leray_project(detail::random_band(g, Rank::vector, sc.k_min, sc.k_max, rng));
    const double v_norm = std::sqrt(l2_norm_sq(V0));
    if (v_norm == 0.0)
        throw ScenarioError("band [k_min, k_max] holds no resolved mode");
    V0 *= rms_target / v_norm;

    SpectralField phi = detail::random_band(g, Rank::scalar, 1.0, sc.grad_k_max, rng);
    if (l2_norm_sq(phi) == 0.0)
        throw ScenarioError("gradient band holds no resolved mode");

    if (sc.kind == ScenarioKind::random_band) {
        SpectralField grad = gradient(phi);
        const double gn = std::sqrt(l2_norm_sq(grad));
        SpectralField v0 = V0;
        if (sc.grad_fraction > 0.0)
            v0.axpy(sc.grad_fraction * rms_target / gn, grad);
        return {V0, zero_mean(v0)};
    }

    // scaled window: |phi(0)|_p pinned to the middle of the admissible window, ||u0||_1 = gamma.
    const double target = (est.c3 + est.c4) / (2.0 * std::pow(params.nu, est.kappa()));
    phi *= target / lp_norm(phi, est.p);
    const SpectralField grad = gradient(phi);
    const double grad_h1_sq = sobolev_norm_sq(grad, 1);
    const double gamma = sc.gamma;
    if (!(gamma > 0.0) && target > 0.0)
        throw ScenarioError("paper-scaling: gamma = 0 cannot hold a nonzero gradient part");
    if (gamma * gamma < grad_h1_sq)
        throw ScenarioError("paper-scaling: gradient part alone has H1 norm " + std::to_string(std::sqrt(grad_h1_sq)) +
                            " > gamma = " + std::to_string(gamma));
    SpectralField w = leray_project(detail::random_band(g, Rank::vector, sc.k_min, sc.k_max, rng));
    const double w_h1 = std::sqrt(sobolev_norm_sq(w, 1));
    w *= std::sqrt(gamma * gamma - grad_h1_sq) / w_h1;
    SpectralField v0 = V0 + w + grad;
    return {V0, zero_mean(v0)};
}

} // namespace speclab
