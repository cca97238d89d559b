#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>

#include "estimates.hpp"
#include "spectral.hpp"

namespace speclab {

// ===========================================================================
// Inner products and pointwise magnitudes
// ===========================================================================

/// <a, b>_{L2} from coefficients (Parseval).
inline double inner(const SpectralField& a, const SpectralField& b)
{
    require_same_grid(a.grid(), b.grid());
    if (a.rank() != b.rank())
        throw UsageError("inner: rank mismatch");
    double s = 0.0;
    const auto& x = a.values();
    const auto& y = b.values();
    for (std::size_t i = 0; i < x.size(); ++i)
        s += x[i].real() * y[i].real() + x[i].imag() * y[i].imag();
    return s * a.grid().volume();
}

/// <a, b>_{L2} by grid quadrature.
inline double inner(const RealField& a, const RealField& b)
{
    require_same_grid(a.grid(), b.grid());
    if (a.rank() != b.rank())
        throw UsageError("inner: rank mismatch");
    double s = 0.0;
    const auto& x = a.values();
    const auto& y = b.values();
    for (std::size_t i = 0; i < x.size(); ++i)
        s += x[i] * y[i];
    return s * a.grid().cell_volume();
}

inline double l2_norm_sq(const SpectralField& F) { return inner(F, F); }

/// Pointwise Euclidean magnitude of a field (identity on scalars up to sign).
inline RealField magnitude(const RealField& f)
{
    RealField out(f.grid(), Rank::scalar);
    auto dst = out.component(0);
    for (int c = 0; c < f.components(); ++c) {
        auto src = f.component(c);
        for (std::size_t i = 0; i < dst.size(); ++i)
            dst[i] += src[i] * src[i];
    }
    for (double& x : dst)
        x = std::sqrt(x);
    return out;
}

/// Pointwise magnitude of the full derivative tensor of F: sqrt(sum_{c,j} (d_j F_c)^2).
inline RealField jacobian_magnitude(const SpectralField& F)
{
    RealField out(F.grid(), Rank::scalar);
    auto dst = out.component(0);
    const RealField g0 = to_real(differentiate(F, {1, 0, 0}));
    const RealField g1 = to_real(differentiate(F, {0, 1, 0}));
    const RealField g2 = to_real(differentiate(F, {0, 0, 1}));
    for (const RealField* g : {&g0, &g1, &g2})
        for (int c = 0; c < g->components(); ++c) {
            auto src = g->component(c);
            for (std::size_t i = 0; i < dst.size(); ++i)
                dst[i] += src[i] * src[i];
        }
    for (double& x : dst)
        x = std::sqrt(x);
    return out;
}

// ===========================================================================
// Lebesgue and Sobolev norms
// ===========================================================================

/// (sum |f|^p cell_volume)^{1/p}; p = infinity gives max |f|.
inline double lp_norm(const RealField& f, double p)
{
    if (!(p >= 1.0))
        throw UsageError("lp_norm: p must be at least 1");
    const RealField m = f.components() == 1 ? f : magnitude(f);
    auto v = m.component(0);
    if (std::isinf(p)) {
        double best = 0.0;
        for (double x : v)
            best = std::max(best, std::abs(x));
        return best;
    }
    double s = 0.0;
    if (p == 2.0) {
        for (double x : v)
            s += x * x;
        return std::sqrt(s * f.grid().cell_volume());
    }
    for (double x : v)
        s += std::pow(std::abs(x), p);
    return std::pow(s * f.grid().cell_volume(), 1.0 / p);
}

inline double lp_norm(const SpectralField& F, double p) { return lp_norm(to_real(F), p); }

/// sum_{|alpha| <= s} |D^alpha f|_2^2, each term from the spectral derivative.
inline double sobolev_norm_sq(const SpectralField& f, int s)
{
    if (s < 0 || s > 3)
        throw UsageError("sobolev_norm: order must lie in [0, 3]");
    double total = 0.0;
    for (int order = 0; order <= s; ++order)
        for (const MultiIndex& a : multi_indices_of_order(order))
            total += l2_norm_sq(differentiate(f, a));
    return total;
}

inline double sobolev_norm(const SpectralField& f, int s) { return std::sqrt(sobolev_norm_sq(f, s)); }
inline double sobolev_norm(const RealField& f, int s) { return sobolev_norm(to_spectral(f), s); }

namespace detail {

/// Per-mode weights sum_{|alpha| <= s} |m_alpha(k)|^2 for s = 0..3, cached per grid size.
/// Odd powers see the zeroed Nyquist entry, even powers the true one, as in differentiate.
class SobolevWeights {
public:
    explicit SobolevWeights(const Grid& g)
    {
        const Wavenumbers wn(g);
        for (auto& w : table_)
            w.resize(g.points());
        for_each_mode(g, [&](std::size_t at, int i, int j, int l) {
            const int m[3] = {i, j, l};
            for (int s = 0; s <= 3; ++s) {
                double w = 0.0;
                for (int order = 0; order <= s; ++order)
                    for (const MultiIndex& a : multi_indices_of_order(order)) {
                        double f = 1.0;
                        for (int d = 0; d < 3; ++d) {
                            const double k = (a[d] % 2 == 1) ? wn.k_odd[m[d]] : wn.k[m[d]];
                            for (int e = 0; e < a[d]; ++e)
                                f *= k * k;
                        }
                        w += f;
                    }
                table_[s][at] = w;
            }
        });
    }
    const std::vector<double>& operator[](int s) const { return table_[s]; }

private:
    std::array<std::vector<double>, 4> table_;
};

inline const SobolevWeights& sobolev_weights(const Grid& g)
{
    static std::mutex mutex;
    static std::map<int, std::unique_ptr<SobolevWeights>> cache;
    std::lock_guard<std::mutex> lock(mutex);
    auto& slot = cache[g.n()];
    if (!slot)
        slot = std::make_unique<SobolevWeights>(g);
    return *slot;
}

} // namespace detail

/// Same quantity as sobolev_norm_sq, evaluated as a single multiplier sum.
inline double sobolev_norm_sq_multiplier(const SpectralField& f, int s)
{
    if (s < 0 || s > 3)
        throw UsageError("sobolev_norm: order must lie in [0, 3]");
    const auto& w = detail::sobolev_weights(f.grid())[s];
    double total = 0.0;
    for (int c = 0; c < f.components(); ++c) {
        auto coeff = f.component(c);
        for (std::size_t at = 0; at < coeff.size(); ++at)
            total += w[at] * std::norm(coeff[at]);
    }
    return total * f.grid().volume();
}

/// |f|_{k,l} = sqrt(||f||_k^2 + [l = 1] ||f_t||_{k-1}^2).
inline double gamma_norm(const SpectralField& f, const SpectralField* f_t, int k, int l)
{
    if (l != 0 && l != 1)
        throw UsageError("gamma_norm: l must be 0 or 1");
    if (l > k)
        throw UsageError("gamma_norm: l must not exceed k");
    double s = sobolev_norm_sq(f, k);
    if (l == 1) {
        if (f_t == nullptr)
            throw UsageError("gamma_norm: time derivative required for l = 1");
        s += sobolev_norm_sq(*f_t, k - 1);
    }
    return std::sqrt(s);
}

inline double gamma_norm_sq(const SpectralField& f, const SpectralField* f_t, int k, int l)
{
    const double g = gamma_norm(f, f_t, k, l);
    return g * g;
}

// ===========================================================================
// Terms of the L_r estimate
// ===========================================================================

struct LrTerms {
    double r = 2.0;
    double v_r = 0.0;                ///< |v|_r
    double v_3r = 0.0;               ///< |v|_{3r}
    double grad_mag_power = 0.0;     ///< |grad |v|^{r/2}|_2
    double direction_term = 0.0;     ///< | |v|^{r/2} grad(v/|v|) |_2 on |v| > eps
    double div_term = 0.0;           ///< |div v |v|^{r/2 - 1}|_2
    double cbar_div_term = 0.0;      ///< cbar(r, mu, c0) nu^r |div v|^r_{3r/(r+1)}
    double grad_v_sq = 0.0;          ///< |grad v|_2^2 over |v| > eps
    double split_sq = 0.0;           ///< |grad|v||_2^2 + ||v| grad(v/|v|)|_2^2 over |v| > eps
    double identity_residual = 0.0;  ///< |grad_v_sq - split_sq| / grad_v_sq
    double pointwise_residual = 0.0; ///< max pointwise mismatch over max |grad v|^2
    double singular_measure = 0.0;   ///< volume of {|v| <= eps}
    double eps_mag = 0.0;
};

/// Every term of the L_r estimate for v, and the pointwise split of |grad v|^2.
inline LrTerms lr_terms(const SpectralField& v, double r, double mu = 1.0, double nu = 0.0, double c0 = 1.0)
{
    if (v.rank() != Rank::vector)
        throw UsageError("lr_terms: expects a vector field");
    if (!(r >= 2.0 && r <= 6.0))
        throw UsageError("lr_terms: r must lie in [2, 6]");
    const Grid& g = v.grid();
    const RealField vr = to_real(v);
    std::array<RealField, 3> dv = {to_real(differentiate(v, {1, 0, 0})), to_real(differentiate(v, {0, 1, 0})),
                                   to_real(differentiate(v, {0, 0, 1}))};
    const RealField div = to_real(divergence(v));
    const RealField mag = magnitude(vr);

    LrTerms out;
    out.r = r;
    out.v_r = lp_norm(vr, r);
    out.v_3r = lp_norm(vr, 3.0 * r);
    out.eps_mag = 1e-8 * lp_norm(mag, std::numeric_limits<double>::infinity());

    const double dV = g.cell_volume();
    double grad_pow = 0.0, direction = 0.0, div_sq = 0.0, gv = 0.0, split = 0.0, worst = 0.0, max_g = 0.0;
    std::size_t singular = 0;
    auto m = mag.component(0);
    auto d = div.component(0);
    for (std::size_t at = 0; at < g.points(); ++at) {
        const double a = m[at];
        double g2 = 0.0;
        for (int j = 0; j < 3; ++j)
            for (int c = 0; c < 3; ++c)
                g2 += dv[j].component(c)[at] * dv[j].component(c)[at];
        max_g = std::max(max_g, g2);
        if (a <= out.eps_mag) {
            ++singular;
            continue;
        }
        // grad|v|_j = v . d_j v / |v|
        std::array<double, 3> gm{};
        for (int j = 0; j < 3; ++j) {
            double s = 0.0;
            for (int c = 0; c < 3; ++c)
                s += vr.component(c)[at] * dv[j].component(c)[at];
            gm[j] = s / a;
        }
        const double gm2 = gm[0] * gm[0] + gm[1] * gm[1] + gm[2] * gm[2];
        // d_j (v_c / |v|) = d_j v_c / |v| - v_c grad|v|_j / |v|^2
        double dir2 = 0.0;
        for (int j = 0; j < 3; ++j)
            for (int c = 0; c < 3; ++c) {
                const double e = dv[j].component(c)[at] / a - vr.component(c)[at] * gm[j] / (a * a);
                dir2 += e * e;
            }
        const double pw = std::pow(a, r / 2.0 - 1.0);
        grad_pow += (r / 2.0) * (r / 2.0) * pw * pw * gm2;
        direction += std::pow(a, r) * dir2;
        div_sq += d[at] * d[at] * pw * pw;
        gv += g2;
        split += gm2 + a * a * dir2;
        worst = std::max(worst, std::abs(g2 - gm2 - a * a * dir2));
    }
    out.grad_mag_power = std::sqrt(grad_pow * dV);
    out.direction_term = std::sqrt(direction * dV);
    out.div_term = std::sqrt(div_sq * dV);
    out.grad_v_sq = gv * dV;
    out.split_sq = split * dV;
    out.identity_residual = out.grad_v_sq > 0.0 ? std::abs(out.grad_v_sq - out.split_sq) / out.grad_v_sq : 0.0;
    out.pointwise_residual = max_g > 0.0 ? worst / max_g : 0.0;
    out.singular_measure = static_cast<double>(singular) * dV;
    if (r > 2.0) {
        const double q = 3.0 * r / (r + 1.0);
        out.cbar_div_term = eval_cbar(r, mu, c0) * std::pow(nu, r) * std::pow(lp_norm(div, q), r);
    }
    return out;
}

} // namespace speclab
