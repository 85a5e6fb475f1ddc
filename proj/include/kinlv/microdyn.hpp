#pragma once

#include <cmath>
#include <stdexcept>

#include "kinlv/params.hpp"
#include "kinlv/rng.hpp"

namespace kinlv::micro {

// Raised when a transition produces a negative size. Unreachable when the
// noise conforms to its lower bound and the rates are admissible; reaching
// it means a caller fed a nonconforming draw.
struct PositivityViolation : std::logic_error {
    using std::logic_error::logic_error;
};

enum class SpeciesTag { Prey, Predator };

// Holling type II responses: predation pressure and predator growth.
inline double holling_phi(double y, const ModelParams& p) {
    return p.beta * y / (1.0 + y);
}

inline double holling_psi(double x, const ModelParams& p) {
    return p.gamma * (x - p.mu) / (1.0 + x);
}

inline double cutoff_threshold(const ModelParams& p) { return (1.0 - p.p) * p.s0; }

// Zero-mean noise with prescribed second moment and a one-sided support
// constraint (eta >= -lower_bound). The default law is the symmetric
// two-point one; when sqrt(variance) would cross the bound, an asymmetric
// two-point law with the same mean and variance takes over (the bound is a
// hard requirement, the law is not prescribed). If no conforming law exists
// the variance is clipped to zero and flagged.
struct NoiseSpec {
    double variance = 0;
    double lower_bound = 0;  // magnitude of the most negative admissible draw
    bool clipped = false;

    struct Draw {
        double value = 0;
        bool asymmetric = false;
    };

    Draw sample(CounterRng& rng) const {
        if (clipped || variance <= 0) return {0.0, false};
        const double r = std::sqrt(variance);
        if (r <= lower_bound) {
            return {rng.uniform() < 0.5 ? -r : r, false};
        }
        // Two-point law on {-L, R} with mean 0 and variance L*R = variance.
        const double L = lower_bound;
        const double R = variance / L;
        const double p_neg = R / (L + R);
        return {rng.uniform() < p_neg ? -L : R, true};
    }

    // eta1(y): variance sigma1 * y/(1+y), bound from the prey rule at the
    // cutoff threshold (x-bar = 1).
    static NoiseSpec prey_cross(double y, const ModelParams& p) {
        NoiseSpec n;
        n.variance = p.sigma1 * y / (1.0 + y);
        const double T = cutoff_threshold(p);
        n.lower_bound = (1.0 - p.beta) * std::pow(T, 1.0 - p.p);
        n.clipped = n.variance > 0 && !(n.lower_bound > 0);
        return n;
    }

    // eta2(x): variance sigma2 * x/(1+x). The worst predator contraction is
    // 1 - gamma*mu, so a conforming law needs gamma*mu < 1.
    static NoiseSpec predator_cross(double x, const ModelParams& p) {
        NoiseSpec n;
        n.variance = p.sigma2 * x / (1.0 + x);
        const double T = cutoff_threshold(p);
        const double contraction = 1.0 - p.gamma * p.mu;
        n.lower_bound = contraction > 0 ? contraction * std::pow(T, 1.0 - p.p) : 0.0;
        n.clipped = n.variance > 0 && !(n.lower_bound > 0);
        return n;
    }

    // eta1(x*) of the intraspecific rule (p = 1/2, threshold s0/2).
    static NoiseSpec prey_intra(double x_star, const ModelParams& p) {
        NoiseSpec n;
        n.variance = p.sigma1 * x_star / (1.0 + x_star);
        n.lower_bound = (1.0 - p.alpha / p.K.value()) * std::sqrt(0.5 * p.s0);
        n.clipped = n.variance > 0 && !(n.lower_bound > 0);
        return n;
    }
};

struct InteractionOutcome {
    double new_size = 0;
    double applied_noise = 0;   // noise term actually added, including x^p factor
    bool cutoff_active = false; // size below the threshold, random effect suppressed
};

// x' = x - Phi(y) x + x^p 1(x >= (1-p) s0) eta1
inline InteractionOutcome prey_cross_step(double x, double y, double eta1,
                                          const ModelParams& p) {
    InteractionOutcome out;
    out.cutoff_active = x < cutoff_threshold(p);
    const double noise = out.cutoff_active ? 0.0 : std::pow(x, p.p) * eta1;
    out.applied_noise = noise;
    out.new_size = x - holling_phi(y, p) * x + noise;
    if (out.new_size < 0)
        throw PositivityViolation("prey update produced a negative size");
    return out;
}

// y' = y + Psi(x) y + y^p 1(y >= (1-p) s0) eta2
inline InteractionOutcome predator_cross_step(double y, double x, double eta2,
                                              const ModelParams& p) {
    InteractionOutcome out;
    out.cutoff_active = y < cutoff_threshold(p);
    const double noise = out.cutoff_active ? 0.0 : std::pow(y, p.p) * eta2;
    out.applied_noise = noise;
    out.new_size = y + holling_psi(x, p) * y + noise;
    if (out.new_size < 0)
        throw PositivityViolation("predator update produced a negative size");
    return out;
}

// x''' = x - (alpha/K) (x*/(1+x*)) x + sqrt(x) 1(x >= s0/2) eta1(x*)
inline InteractionOutcome intraspecific_step(double x, double x_star, double eta,
                                             const ModelParams& p) {
    InteractionOutcome out;
    out.cutoff_active = x < 0.5 * p.s0;
    const double noise = out.cutoff_active ? 0.0 : std::sqrt(x) * eta;
    const double phi_tilde = (p.alpha / p.K.value()) * x_star / (1.0 + x_star);
    out.applied_noise = noise;
    out.new_size = x - phi_tilde * x + noise;
    if (out.new_size < 0)
        throw PositivityViolation("intraspecific update produced a negative size");
    return out;
}

// Redistribution exchange with the environment: s'' = s + rate (z - shape s).
inline double redistribution_step(double s, double z, const ModelParams& p,
                                  SpeciesTag species) {
    const double rate = species == SpeciesTag::Prey ? p.alpha : p.nu;
    const double shape = species == SpeciesTag::Prey ? p.chi : p.theta;
    return s + rate * (z - shape * s);
}

// Environment resource law. Only the mean is prescribed by the model
// ((chi+1) m1 for prey resources, (theta+1) m2 for predator ones); the Dirac
// law is the default closure and the Gamma law is an optional extension with
// the same mean.
struct EnvironmentLaw {
    enum class Kind { Dirac, Gamma };
    Kind kind = Kind::Dirac;
    double gamma_shape = 4.0;  // shape of the optional Gamma law

    double sample(double mean, CounterRng& rng) const {
        if (kind == Kind::Dirac) return mean;
        return rng.gamma(gamma_shape) * (mean / gamma_shape);
    }
};

}  // namespace kinlv::micro
