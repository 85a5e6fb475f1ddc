#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

#include "kinlv/moments.hpp"
#include "kinlv/params.hpp"

namespace kinlv::eq {

struct NonPositiveExponent : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Time-indexed Gamma quasi-equilibrium pair (p = 1/2): shape a_i, rate b_i,
// normalization b^a / Gamma(a). Table-1 shapes are O(10^3), so every density
// evaluation goes through log space.
struct GammaQuasiEquilibrium {
    double a1 = 0, b1 = 0;
    double a2 = 0, b2 = 0;
    double t = 0;

    double log_density1(double x) const {
        return a1 * std::log(b1) - std::lgamma(a1) + (a1 - 1.0) * std::log(x) - b1 * x;
    }
    double log_density2(double y) const {
        return a2 * std::log(b2) - std::lgamma(a2) + (a2 - 1.0) * std::log(y) - b2 * y;
    }
    double density1(double x) const { return std::exp(log_density1(x)); }
    double density2(double y) const { return std::exp(log_density2(y)); }

    // d/dx of the density, in closed form; used by flux-residual checks.
    double density1_deriv(double x) const {
        return density1(x) * ((a1 - 1.0) / x - b1);
    }
    double density2_deriv(double y) const {
        return density2(y) * ((a2 - 1.0) / y - b2);
    }

    double mean1() const { return a1 / b1; }
    double mean2() const { return a2 / b2; }
    double variance1() const { return a1 / (b1 * b1); }
    double variance2() const { return a2 / (b2 * b2); }
};

// Flux-vanishing profiles of the p = 1 system: inverse-Gamma tails
// x^{-lambda-1} exp(-omega/x). They carry no moment API on purpose; the
// profile has no finite moments of any order.
struct InverseGammaEquilibrium {
    double lambda1 = 0, omega1 = 0;
    double lambda2 = 0, omega2 = 0;
    bool normalizable1 = false, normalizable2 = false;
    double t = 0;

    double log_density1(double x) const {
        double logc = normalizable1 ? lambda1 * std::log(omega1) - std::lgamma(lambda1) : 0.0;
        return logc - (lambda1 + 1.0) * std::log(x) - omega1 / x;
    }
    double log_density2(double y) const {
        double logc = normalizable2 ? lambda2 * std::log(omega2) - std::lgamma(lambda2) : 0.0;
        return logc - (lambda2 + 1.0) * std::log(y) - omega2 / y;
    }
    double density1(double x) const { return std::exp(log_density1(x)); }
    double density2(double y) const { return std::exp(log_density2(y)); }
};

// Gamma exponents at a given mean state (p = 1/2). The logistic prey entry
// replaces m2 by m1+m2 in the diffusion and adds the (alpha/K) m1 drift.
inline GammaQuasiEquilibrium gamma_params(const MeanState& s, const ModelParams& p,
                                          Variant variant) {
    GammaQuasiEquilibrium g;
    g.t = s.t;
    if (variant == Variant::Malthusian) {
        g.a1 = 2.0 * p.alpha * (p.chi + 1.0) * s.m1 / (p.sigma1 * s.m2);
        g.b1 = 2.0 * (p.beta * s.m2 + p.alpha * p.chi) / (p.sigma1 * s.m2);
    } else {
        const double msum = s.m1 + s.m2;
        g.a1 = 2.0 * p.alpha * (p.chi + 1.0) * s.m1 / (p.sigma1 * msum);
        g.b1 = 2.0 * (p.beta * s.m2 + (p.alpha / *p.K) * s.m1 + p.alpha * p.chi) /
               (p.sigma1 * msum);
    }
    g.a2 = 2.0 * p.nu * (p.theta + 1.0) * s.m2 / (p.sigma2 * s.m1);
    g.b2 = 2.0 * (p.gamma * (p.mu - s.m1) + p.nu * p.theta) / (p.sigma2 * s.m1);
    if (!(g.a1 > 0) || !(g.b1 > 0) || !(g.a2 > 0) || !(g.b2 > 0))
        throw NonPositiveExponent("Gamma exponents must be positive; chi/theta are outside "
                                  "the admissible range at this state");
    return g;
}

// p = 1 profiles (Malthusian only).
inline InverseGammaEquilibrium inverse_gamma_params(const MeanState& s, const ModelParams& p) {
    InverseGammaEquilibrium g;
    g.t = s.t;
    g.lambda1 = 2.0 * ((p.beta + 0.5 * p.sigma1) * s.m2 + p.alpha * p.chi) / (p.sigma1 * s.m2);
    g.omega1 = 2.0 * p.alpha * (p.chi + 1.0) * s.m1 / (p.sigma1 * s.m2);
    g.lambda2 = 2.0 * (p.gamma * (p.mu - (1.0 - 0.5 * p.sigma2 / p.gamma) * s.m1) + p.nu * p.theta) /
                (p.sigma2 * s.m1);
    g.omega2 = 2.0 * p.nu * (p.theta + 1.0) * s.m2 / (p.sigma2 * s.m1);
    g.normalizable1 = g.lambda1 > 0;
    g.normalizable2 = g.lambda2 > 0;
    return g;
}

struct EquilibriumMoments {
    double m1_eq = 0, m2_eq = 0;
    double v1_eq = 0, v2_eq = 0;
};

// Closed forms of the quasi-equilibrium means a/b and variances a/b^2.
inline EquilibriumMoments equilibrium_moments(const MeanState& s, const ModelParams& p,
                                              Variant variant) {
    EquilibriumMoments em;
    const double drift2 = p.gamma * (p.mu - s.m1) + p.nu * p.theta;
    em.m2_eq = p.nu * (p.theta + 1.0) * s.m2 / drift2;
    em.v2_eq = p.sigma2 * p.nu * (p.theta + 1.0) * s.m1 * s.m2 / (2.0 * drift2 * drift2);
    if (variant == Variant::Malthusian) {
        const double drift1 = p.beta * s.m2 + p.alpha * p.chi;
        em.m1_eq = p.alpha * (p.chi + 1.0) * s.m1 / drift1;
        em.v1_eq = p.sigma1 * p.alpha * (p.chi + 1.0) * s.m1 * s.m2 / (2.0 * drift1 * drift1);
    } else {
        const double drift1 = p.beta * s.m2 + (p.alpha / *p.K) * s.m1 + p.alpha * p.chi;
        em.m1_eq = p.alpha * (p.chi + 1.0) * s.m1 / drift1;
        em.v1_eq = p.sigma1 * p.alpha * (p.chi + 1.0) * s.m1 * (s.m1 + s.m2) /
                   (2.0 * drift1 * drift1);
    }
    return em;
}

struct RescaledIdentities {
    double lambda1 = 0, lambda2 = 0;    // rescaling coefficients
    double m1_tilde = 0, m2_tilde = 0;  // lambda_i * m_i^eq, equal to m_i(t)
    double v1_tilde = 0, v2_tilde = 0;  // variances of the rescaled populations
};

// Rescaling that maps the quasi-equilibrium means back onto the exact orbit:
// lambda_i * m_i^eq(t) = m_i(t) identically (Malthusian variant).
inline RescaledIdentities rescaled_identities(const MeanState& s, const ModelParams& p) {
    RescaledIdentities r;
    r.lambda1 = (p.beta * s.m2 - p.alpha) / (p.alpha * (p.chi + 1.0)) + 1.0;
    r.lambda2 = (p.delta() - p.gamma * s.m1) / (p.nu * (p.theta + 1.0)) + 1.0;
    const auto em = equilibrium_moments(s, p, Variant::Malthusian);
    r.m1_tilde = r.lambda1 * em.m1_eq;
    r.m2_tilde = r.lambda2 * em.m2_eq;
    r.v1_tilde = p.sigma1 * s.m1 * s.m2 / (2.0 * p.alpha * (p.chi + 1.0));
    r.v2_tilde = p.sigma2 * s.m1 * s.m2 / (2.0 * p.nu * (p.theta + 1.0));
    return r;
}

// Uniform-in-time Gamma equilibrium: the quasi-equilibrium evaluated at the
// coexistence fixed point (m* or m^infinity).
inline GammaQuasiEquilibrium global_equilibrium(const ModelParams& p, Variant variant) {
    const FixedPoints fp = fixed_points(p);
    MeanState s;
    if (variant == Variant::Malthusian) {
        s = {0.0, fp.m1_star, fp.m2_star};
    } else {
        s = {0.0, fp.m1_inf, fp.m2_inf};
    }
    return gamma_params(s, p, variant);
}

}  // namespace kinlv::eq
