#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

#include "speclab/dynamics.hpp"

namespace testing_support {

using namespace speclab;

inline constexpr double pi = std::numbers::pi;
inline constexpr double pi3 = pi * pi * pi;

/// Random field with unit rms, every mode inside the dealiasing box and away from Nyquist.
inline SpectralField band_limited(const Grid& g, Rank rank, std::uint64_t seed, double k_max = 4.0)
{
    detail::NormalStream rng(seed);
    SpectralField f = detail::random_band(g, rank, 1.0, k_max, rng);
    f *= std::sqrt(g.volume() / l2_norm_sq(f));
    return f;
}

inline double rel_diff(const SpectralField& a, const SpectralField& b)
{
    const double scale = std::max(std::sqrt(l2_norm_sq(a)), std::sqrt(l2_norm_sq(b)));
    return scale > 0.0 ? std::sqrt(l2_norm_sq(a - b)) / scale : 0.0;
}

inline double max_diff(const RealField& a, const RealField& b)
{
    double m = 0.0;
    for (std::size_t i = 0; i < a.values().size(); ++i)
        m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
    return m;
}

inline double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

} // namespace testing_support
