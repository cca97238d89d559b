#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "fft.hpp"
#include "field.hpp"

namespace speclab {

/// Multi-index alpha = (a1, a2, a3) of a partial derivative.
struct MultiIndex {
    int a1 = 0;
    int a2 = 0;
    int a3 = 0;
    int order() const noexcept { return a1 + a2 + a3; }
    int operator[](int j) const noexcept { return j == 0 ? a1 : (j == 1 ? a2 : a3); }
};

/// All multi-indices with order() == s, in lexicographic order.
inline std::vector<MultiIndex> multi_indices_of_order(int s)
{
    std::vector<MultiIndex> out;
    for (int a = s; a >= 0; --a)
        for (int b = s - a; b >= 0; --b)
            out.push_back({a, b, s - a - b});
    return out;
}

namespace detail {

/// Wavenumbers per array position, plus the variant used by odd derivatives
/// (Nyquist entry set to zero so first derivatives stay real and skew).
struct Wavenumbers {
    std::vector<double> k;
    std::vector<double> k_odd;

    explicit Wavenumbers(const Grid& g) : k(g.n()), k_odd(g.n())
    {
        for (int m = 0; m < g.n(); ++m) {
            const int w = g.wavenumber(m);
            k[m] = w;
            k_odd[m] = (w == -g.nyquist()) ? 0.0 : w;
        }
    }
};

/// Visit every lattice point with its flat index and array positions.
template <typename F>
void for_each_mode(const Grid& g, F&& f)
{
    const int n = g.n();
    std::size_t at = 0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int l = 0; l < n; ++l, ++at)
                f(at, i, j, l);
}

inline cplx ipow(int m)
{
    switch (((m % 4) + 4) % 4) {
    case 0: return {1.0, 0.0};
    case 1: return {0.0, 1.0};
    case 2: return {-1.0, 0.0};
    default: return {0.0, -1.0};
    }
}

} // namespace detail

/// Forward transform normalized so that coeff(0) is the mean.
inline SpectralField to_spectral(const RealField& f)
{
    if (!f.all_finite())
        throw NumericError("to_spectral: non-finite input value");
    const Grid& g = f.grid();
    SpectralField out(g, f.rank());
    const auto& plan = detail::fft_for(g.n());
    const double scale = 1.0 / static_cast<double>(g.points());
    for (int c = 0; c < f.components(); ++c) {
        auto src = f.component(c);
        auto dst = out.component(c);
        for (std::size_t i = 0; i < src.size(); ++i)
            dst[i] = cplx(src[i], 0.0);
        plan.forward(dst.data());
        for (cplx& z : dst)
            z *= scale;
    }
    return out;
}

/// Inverse transform; the imaginary residue of the synthesis is discarded.
inline RealField to_real(const SpectralField& F)
{
    if (!F.all_finite())
        throw NumericError("to_real: non-finite coefficient");
    const Grid& g = F.grid();
    RealField out(g, F.rank());
    const auto& plan = detail::fft_for(g.n());
    std::vector<cplx> work(g.points());
    for (int c = 0; c < F.components(); ++c) {
        auto src = F.component(c);
        std::copy(src.begin(), src.end(), work.begin());
        plan.backward(work.data());
        auto dst = out.component(c);
        for (std::size_t i = 0; i < work.size(); ++i)
            dst[i] = work[i].real();
    }
    return out;
}

/// Spectral derivative D^alpha applied to every component.
inline SpectralField differentiate(const SpectralField& F, MultiIndex alpha)
{
    if (alpha.a1 < 0 || alpha.a2 < 0 || alpha.a3 < 0 || alpha.order() > 4)
        throw UsageError("differentiate: multi-index order must lie in [0, 4]");
    const Grid& g = F.grid();
    const detail::Wavenumbers wn(g);
    const cplx unit = detail::ipow(alpha.order());
    std::array<std::vector<double>, 3> axis;
    for (int d = 0; d < 3; ++d) {
        const int a = alpha[d];
        axis[d].resize(g.n());
        for (int m = 0; m < g.n(); ++m) {
            const double k = (a % 2 == 1) ? wn.k_odd[m] : wn.k[m];
            double f = 1.0;
            for (int e = 0; e < a; ++e)
                f *= k;
            axis[d][m] = f;
        }
    }
    SpectralField out(g, F.rank());
    detail::for_each_mode(g, [&](std::size_t at, int i, int j, int l) {
        const cplx mult = unit * (axis[0][i] * axis[1][j] * axis[2][l]);
        for (int c = 0; c < F.components(); ++c)
            out.component(c)[at] = mult * F.component(c)[at];
    });
    return out;
}

enum class VectorOp { gradient, divergence, curl, laplacian };

inline SpectralField vector_calculus(const SpectralField& F, VectorOp kind)
{
    const Grid& g = F.grid();
    const detail::Wavenumbers wn(g);
    const cplx I(0.0, 1.0);
    switch (kind) {
    case VectorOp::gradient: {
        if (F.rank() != Rank::scalar)
            throw UsageError("gradient expects a scalar field");
        SpectralField out(g, Rank::vector);
        auto f = F.component(0);
        detail::for_each_mode(g, [&](std::size_t at, int i, int j, int l) {
            out.component(0)[at] = I * wn.k_odd[i] * f[at];
            out.component(1)[at] = I * wn.k_odd[j] * f[at];
            out.component(2)[at] = I * wn.k_odd[l] * f[at];
        });
        return out;
    }
    case VectorOp::divergence: {
        if (F.rank() != Rank::vector)
            throw UsageError("divergence expects a vector field");
        SpectralField out(g, Rank::scalar);
        auto a = F.component(0), b = F.component(1), c = F.component(2);
        detail::for_each_mode(g, [&](std::size_t at, int i, int j, int l) {
            out.component(0)[at] = I * (wn.k_odd[i] * a[at] + wn.k_odd[j] * b[at] + wn.k_odd[l] * c[at]);
        });
        return out;
    }
    case VectorOp::curl: {
        if (F.rank() != Rank::vector)
            throw UsageError("curl expects a vector field");
        SpectralField out(g, Rank::vector);
        auto a = F.component(0), b = F.component(1), c = F.component(2);
        detail::for_each_mode(g, [&](std::size_t at, int i, int j, int l) {
            const double k1 = wn.k_odd[i], k2 = wn.k_odd[j], k3 = wn.k_odd[l];
            out.component(0)[at] = I * (k2 * c[at] - k3 * b[at]);
            out.component(1)[at] = I * (k3 * a[at] - k1 * c[at]);
            out.component(2)[at] = I * (k1 * b[at] - k2 * a[at]);
        });
        return out;
    }
    case VectorOp::laplacian: {
        SpectralField out(g, F.rank());
        detail::for_each_mode(g, [&](std::size_t at, int i, int j, int l) {
            const double k2 = wn.k[i] * wn.k[i] + wn.k[j] * wn.k[j] + wn.k[l] * wn.k[l];
            for (int c = 0; c < F.components(); ++c)
                out.component(c)[at] = -k2 * F.component(c)[at];
        });
        return out;
    }
    }
    throw UsageError("unknown vector operator");
}

inline SpectralField gradient(const SpectralField& F) { return vector_calculus(F, VectorOp::gradient); }
inline SpectralField divergence(const SpectralField& F) { return vector_calculus(F, VectorOp::divergence); }
inline SpectralField curl(const SpectralField& F) { return vector_calculus(F, VectorOp::curl); }
inline SpectralField laplacian(const SpectralField& F) { return vector_calculus(F, VectorOp::laplacian); }

/// Largest coefficient magnitude over all components.
inline double max_abs(const SpectralField& F)
{
    double m = 0.0;
    for (const cplx& z : F.values())
        m = std::max(m, std::abs(z));
    return m;
}

inline double max_abs(const RealField& f)
{
    double m = 0.0;
    for (double x : f.values())
        m = std::max(m, std::abs(x));
    return m;
}

/// True when every component has |coeff(0)| <= tol * max(1, max |coeff|).
inline bool has_zero_mean(const SpectralField& F, double tol = 1e-12)
{
    const double scale = std::max(1.0, max_abs(F));
    for (int c = 0; c < F.components(); ++c)
        if (std::abs(F.mean(c)) > tol * scale)
            return false;
    return true;
}

/// Zero-mean solution of Delta u = F.
inline SpectralField inverse_laplacian(const SpectralField& F)
{
    if (!has_zero_mean(F))
        throw SolvabilityError("inverse_laplacian: right-hand side has nonzero mean");
    const Grid& g = F.grid();
    const detail::Wavenumbers wn(g);
    SpectralField out(g, F.rank());
    detail::for_each_mode(g, [&](std::size_t at, int i, int j, int l) {
        if (at == 0)
            return;
        const double k2 = wn.k[i] * wn.k[i] + wn.k[j] * wn.k[j] + wn.k[l] * wn.k[l];
        for (int c = 0; c < F.components(); ++c)
            out.component(c)[at] = -F.component(c)[at] / k2;
    });
    return out;
}

/// Whether wavenumber k survives the two-thirds truncation at grid size n.
///
/// Modes with 3|k| >= n are removed. For n not divisible by 3 this is the
/// usual |k| > n/3 cutoff; for n divisible by 3 it also drops |k| = n/3, the
/// first wavenumber whose triple products alias back onto kept modes.
inline bool dealias_keeps(int n, int k) { return 3 * std::abs(k) < n; }

inline SpectralField dealias(const SpectralField& F)
{
    const Grid& g = F.grid();
    const int n = g.n();
    SpectralField out = F;
    detail::for_each_mode(g, [&](std::size_t at, int i, int j, int l) {
        if (dealias_keeps(n, g.wavenumber(i)) && dealias_keeps(n, g.wavenumber(j)) &&
            dealias_keeps(n, g.wavenumber(l)))
            return;
        for (int c = 0; c < F.components(); ++c)
            out.component(c)[at] = 0.0;
    });
    return out;
}

inline SpectralField zero_mean(const SpectralField& F)
{
    SpectralField out = F;
    for (int c = 0; c < out.components(); ++c)
        out.component(c)[0] = 0.0;
    return out;
}

} // namespace speclab
