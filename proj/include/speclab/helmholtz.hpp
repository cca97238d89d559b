#pragma once

#include "spectral.hpp"

namespace speclab {

/// Potentials of v = grad(phi) + curl(psi), both zero mean, div psi = 0.
struct PotentialPair {
    SpectralField phi;
    SpectralField psi;
};

inline void require_zero_mean_vector(const SpectralField& v, const char* who)
{
    if (v.rank() != Rank::vector)
        throw UsageError(std::string(who) + ": expects a vector field");
    if (!has_zero_mean(v))
        throw DecompositionError(std::string(who) + ": input has nonzero mean");
}

/// phi = inv_lap(div v), psi = -inv_lap(curl v).
inline PotentialPair decompose(const SpectralField& v)
{
    require_zero_mean_vector(v, "decompose");
    const SpectralField v0 = zero_mean(v);
    SpectralField psi = inverse_laplacian(curl(v0));
    psi *= -1.0;
    return {inverse_laplacian(divergence(v0)), std::move(psi)};
}

inline SpectralField recompose(const PotentialPair& p)
{
    return zero_mean(gradient(p.phi) + curl(p.psi));
}

/// Divergence-free part v - grad(phi).
inline SpectralField leray_project(const SpectralField& v)
{
    require_zero_mean_vector(v, "leray_project");
    const SpectralField phi = inverse_laplacian(divergence(zero_mean(v)));
    return zero_mean(v - gradient(phi));
}

/// Gradient part grad(phi) of v.
inline SpectralField gradient_part(const SpectralField& v)
{
    require_zero_mean_vector(v, "gradient_part");
    return gradient(inverse_laplacian(divergence(zero_mean(v))));
}

} // namespace speclab
