#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"

namespace speclab {

using cplx = std::complex<double>;

inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Uniform n^3 grid on the 2*pi periodic torus.
class Grid {
public:
    static constexpr int min_n = 8;
    static constexpr int max_n = 128;

    static Grid create(int n)
    {
        if (n % 2 != 0)
            throw ConfigError("grid_n", "must be even, got " + std::to_string(n));
        if (n < min_n || n > max_n)
            throw ConfigError("grid_n", "must lie in [8, 128], got " + std::to_string(n));
        return Grid(n);
    }

    int n() const noexcept { return n_; }
    std::size_t points() const noexcept { return static_cast<std::size_t>(n_) * n_ * n_; }
    double period() const noexcept { return two_pi; }
    double spacing() const noexcept { return two_pi / n_; }
    double volume() const noexcept { return two_pi * two_pi * two_pi; }
    double cell_volume() const noexcept { return volume() / static_cast<double>(points()); }

    /// Wavenumber stored at array position m in [0, n): 0..n/2-1, then -n/2..-1.
    int wavenumber(int m) const noexcept { return m < n_ / 2 ? m : m - n_; }
    int nyquist() const noexcept { return n_ / 2; }

    std::size_t index(int i, int j, int l) const noexcept
    {
        return (static_cast<std::size_t>(i) * n_ + j) * n_ + l;
    }

    double coordinate(int m) const noexcept { return spacing() * m; }

    bool operator==(const Grid& o) const noexcept { return n_ == o.n_; }

private:
    explicit Grid(int n) : n_(n) {}
    int n_;
};

enum class Rank { scalar = 1, vector = 3 };

inline int multiplicity(Rank r) { return static_cast<int>(r); }

inline void require_same_grid(const Grid& a, const Grid& b)
{
    if (!(a == b))
        throw UsageError("grid mismatch: n=" + std::to_string(a.n()) + " vs n=" + std::to_string(b.n()));
}

/// Component-blocked storage shared by the real and spectral field types.
template <typename T>
class FieldData {
public:
    FieldData(Grid g, Rank r) : grid_(g), rank_(r), values_(g.points() * multiplicity(r)) {}
    FieldData(Grid g, Rank r, std::vector<T> values) : grid_(g), rank_(r), values_(std::move(values))
    {
        if (values_.size() != g.points() * multiplicity(r))
            throw UsageError("value count " + std::to_string(values_.size()) + " does not match grid and rank");
    }

    const Grid& grid() const noexcept { return grid_; }
    Rank rank() const noexcept { return rank_; }
    int components() const noexcept { return multiplicity(rank_); }
    bool is_vector() const noexcept { return rank_ == Rank::vector; }

    std::span<const T> component(int c) const
    {
        return {values_.data() + c * grid_.points(), grid_.points()};
    }
    std::span<T> component(int c) { return {values_.data() + c * grid_.points(), grid_.points()}; }

    const std::vector<T>& values() const noexcept { return values_; }
    std::vector<T>& values() noexcept { return values_; }

protected:
    Grid grid_;
    Rank rank_;
    std::vector<T> values_;
};

/// Real samples at grid points, row-major over (x1, x2, x3), one block per component.
class RealField : public FieldData<double> {
public:
    using FieldData::FieldData;

    /// Sample a scalar function f(x1, x2, x3).
    template <typename F>
    static RealField sample_scalar(const Grid& g, F&& f)
    {
        RealField out(g, Rank::scalar);
        auto dst = out.component(0);
        const int n = g.n();
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int l = 0; l < n; ++l)
                    dst[g.index(i, j, l)] = f(g.coordinate(i), g.coordinate(j), g.coordinate(l));
        return out;
    }

    /// Sample a vector function returning std::array<double, 3>.
    template <typename F>
    static RealField sample_vector(const Grid& g, F&& f)
    {
        RealField out(g, Rank::vector);
        const int n = g.n();
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int l = 0; l < n; ++l) {
                    const std::array<double, 3> w = f(g.coordinate(i), g.coordinate(j), g.coordinate(l));
                    const std::size_t at = g.index(i, j, l);
                    for (int c = 0; c < 3; ++c)
                        out.component(c)[at] = w[c];
                }
        return out;
    }

    bool all_finite() const
    {
        for (double x : values_)
            if (!std::isfinite(x))
                return false;
        return true;
    }
};

/// Fourier coefficients on the full n^3 lattice; coeff(0) is the spatial mean.
class SpectralField : public FieldData<cplx> {
public:
    using FieldData::FieldData;

    cplx mean(int c = 0) const { return component(c)[0]; }

    bool all_finite() const
    {
        for (const cplx& z : values_)
            if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
                return false;
        return true;
    }

    SpectralField& operator+=(const SpectralField& o)
    {
        check(o);
        for (std::size_t i = 0; i < values_.size(); ++i)
            values_[i] += o.values_[i];
        return *this;
    }
    SpectralField& operator-=(const SpectralField& o)
    {
        check(o);
        for (std::size_t i = 0; i < values_.size(); ++i)
            values_[i] -= o.values_[i];
        return *this;
    }
    SpectralField& operator*=(double s)
    {
        for (cplx& z : values_)
            z *= s;
        return *this;
    }
    /// this += s * o
    SpectralField& axpy(double s, const SpectralField& o)
    {
        check(o);
        for (std::size_t i = 0; i < values_.size(); ++i)
            values_[i] += s * o.values_[i];
        return *this;
    }

    static SpectralField zeros_like(const SpectralField& f) { return SpectralField(f.grid(), f.rank()); }

private:
    void check(const SpectralField& o) const
    {
        require_same_grid(grid_, o.grid_);
        if (rank_ != o.rank_)
            throw UsageError("rank mismatch in field arithmetic");
    }
};

inline SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
inline SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
inline SpectralField operator*(double s, SpectralField a) { return a *= s; }

/// Extract one component of a vector field as a scalar field.
inline SpectralField component_of(const SpectralField& f, int c)
{
    auto src = f.component(c);
    return SpectralField(f.grid(), Rank::scalar, std::vector<cplx>(src.begin(), src.end()));
}

inline RealField component_of(const RealField& f, int c)
{
    auto src = f.component(c);
    return RealField(f.grid(), Rank::scalar, std::vector<double>(src.begin(), src.end()));
}

/// Assemble a vector field from three scalar fields.
template <typename FieldT>
FieldT stack(const FieldT& a, const FieldT& b, const FieldT& c)
{
    require_same_grid(a.grid(), b.grid());
    require_same_grid(a.grid(), c.grid());
    FieldT out(a.grid(), Rank::vector);
    const FieldT* parts[3] = {&a, &b, &c};
    for (int k = 0; k < 3; ++k) {
        if (parts[k]->rank() != Rank::scalar)
            throw UsageError("stack expects scalar fields");
        auto src = parts[k]->component(0);
        std::copy(src.begin(), src.end(), out.component(k).begin());
    }
    return out;
}

} // namespace speclab
