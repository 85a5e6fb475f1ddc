#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

#include "kinlv/fokker_planck.hpp"
#include "kinlv/microdyn.hpp"
#include "kinlv/moments.hpp"
#include "kinlv/params.hpp"
#include "kinlv/rng.hpp"

namespace kinlv::mc {

struct StepTooLarge : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Two equal-weight sample populations evolving on the macroscopic timescale.
// epsilon is the quasi-invariant scaling parameter: interactions fire at
// rate kappa/epsilon with epsilon-scaled parameters, so the empirical means
// follow the Lotka-Volterra flow in t directly.
struct ParticleEnsemble {
    std::vector<double> preys;
    std::vector<double> predators;
    double t = 0;
    double epsilon = 0.01;
    std::uint64_t seed = 0;
    std::uint64_t step_index = 0;

    // Noise-law bookkeeping (see micro::NoiseSpec).
    std::uint64_t asymmetric_noise_events = 0;
    std::uint64_t clipped_noise_events = 0;

    std::size_t size() const { return preys.size(); }

    // Both species sampled from Gamma laws fitted to the requested means and
    // variances (shape m^2/v, rate m/v).
    static ParticleEnsemble gamma_fit(std::size_t n, double m1, double v1, double m2,
                                      double v2, double epsilon, std::uint64_t seed) {
        ParticleEnsemble e;
        e.epsilon = epsilon;
        e.seed = seed;
        e.preys.resize(n);
        e.predators.resize(n);
        const double a1 = m1 * m1 / v1, b1 = m1 / v1;
        const double a2 = m2 * m2 / v2, b2 = m2 / v2;
        for (std::size_t i = 0; i < n; ++i) {
            CounterRng r1(seed, 0xA11CE, 0, i);
            CounterRng r2(seed, 0xA11CE, 1, i);
            e.preys[i] = r1.gamma(a1) / b1;
            e.predators[i] = r2.gamma(a2) / b2;
        }
        return e;
    }
};

struct KernelMajorant {
    double prey_kappa_max = 1;      // over prey sizes, 1 + max x
    double predator_kappa_max = 1;  // over predator sizes, 1 + max y

    static KernelMajorant compute(const ParticleEnsemble& e) {
        KernelMajorant k;
        k.prey_kappa_max = 1.0 + *std::max_element(e.preys.begin(), e.preys.end());
        k.predator_kappa_max =
            1.0 + *std::max_element(e.predators.begin(), e.predators.end());
        return k;
    }
};

inline MomentState estimate_moments(const ParticleEnsemble& e) {
    const std::size_t n = e.size();
    if (n < 2) throw std::invalid_argument("estimate_moments needs at least 2 samples");
    MomentState s;
    s.t = e.t;
    double s1 = 0, s2 = 0;
    for (double x : e.preys) s1 += x;
    for (double y : e.predators) s2 += y;
    s.m1 = s1 / n;
    s.m2 = s2 / n;
    double q1 = 0, q2 = 0;
    for (double x : e.preys) q1 += (x - s.m1) * (x - s.m1);
    for (double y : e.predators) q2 += (y - s.m2) * (y - s.m2);
    s.v1 = q1 / (n - 1);
    s.v2 = q2 / (n - 1);
    return s;
}

namespace detail {

inline ModelParams scaled(const ModelParams& p, double eps) {
    ModelParams s = p;
    s.alpha *= eps;
    s.beta *= eps;
    s.gamma *= eps;
    s.nu *= eps;
    s.sigma1 *= eps;
    s.sigma2 *= eps;
    s.s0 = eps;
    return s;
}

struct ThreadTallies {
    std::uint64_t asymmetric = 0;
    std::uint64_t clipped = 0;
};

}  // namespace detail

// One Nanbu step of length dt on the macroscopic clock. Every particle
// samples one potential partner from the pre-step snapshot and fires with
// probability dt * kappa(partner) / epsilon; afterwards it exchanges with
// the environment with probability dt / epsilon. Updates write into fresh
// buffers, so the result does not depend on the thread partition.
inline void mc_step(ParticleEnsemble& e, const ModelParams& macro, Variant variant,
                    double dt, const micro::EnvironmentLaw& env = {}, int threads = 1) {
    const std::size_t n = e.size();
    const double eps = e.epsilon;
    const ModelParams p = detail::scaled(macro, eps);
    const KernelMajorant km = KernelMajorant::compute(e);

    const double rate_cap = dt * std::max(km.prey_kappa_max, km.predator_kappa_max) / eps;
    if (rate_cap > 1.0)
        throw StepTooLarge("dt * kappa_max / epsilon = " + std::to_string(rate_cap) +
                           " exceeds 1");
    if (dt / eps > 1.0)
        throw StepTooLarge("dt / epsilon exceeds 1 (redistribution probability)");

    double sm1 = 0, sm2 = 0;
    for (double x : e.preys) sm1 += x;
    for (double y : e.predators) sm2 += y;
    const double m1 = sm1 / n, m2 = sm2 / n;
    const double env_mean1 = (p.chi + 1.0) * m1;
    const double env_mean2 = (p.theta + 1.0) * m2;

    const std::vector<double>& x_old = e.preys;
    const std::vector<double>& y_old = e.predators;
    std::vector<double> x_new(n), y_new(n);

    const bool logistic = variant == Variant::Logistic;
    const std::uint64_t step = e.step_index;
    const std::uint64_t seed = e.seed;

    auto worker = [&](std::size_t lo, std::size_t hi, detail::ThreadTallies& tally) {
        for (std::size_t i = lo; i < hi; ++i) {
            // Prey i.
            {
                CounterRng rng(seed, step, 0, i);
                double x = x_old[i];
                const std::size_t j = rng.uniform_below(n);
                const double y = y_old[j];
                if (rng.uniform() < dt * (1.0 + y) / eps) {
                    auto spec = micro::NoiseSpec::prey_cross(y, p);
                    const auto draw = spec.sample(rng);
                    tally.asymmetric += draw.asymmetric;
                    tally.clipped += spec.clipped;
                    x = micro::prey_cross_step(x, y, draw.value, p).new_size;
                }
                if (logistic) {
                    const std::size_t j2 = rng.uniform_below(n);
                    const double xs = x_old[j2];
                    if (rng.uniform() < dt * (1.0 + xs) / eps) {
                        auto spec = micro::NoiseSpec::prey_intra(xs, p);
                        const auto draw = spec.sample(rng);
                        tally.asymmetric += draw.asymmetric;
                        tally.clipped += spec.clipped;
                        x = micro::intraspecific_step(x, xs, draw.value, p).new_size;
                    }
                }
                if (rng.uniform() < dt / eps) {
                    const double z = env.sample(env_mean1, rng);
                    x = micro::redistribution_step(x, z, p, micro::SpeciesTag::Prey);
                }
                x_new[i] = x;
            }
            // Predator i.
            {
                CounterRng rng(seed, step, 1, i);
                double y = y_old[i];
                const std::size_t j = rng.uniform_below(n);
                const double x = x_old[j];
                if (rng.uniform() < dt * (1.0 + x) / eps) {
                    auto spec = micro::NoiseSpec::predator_cross(x, p);
                    const auto draw = spec.sample(rng);
                    tally.asymmetric += draw.asymmetric;
                    tally.clipped += spec.clipped;
                    y = micro::predator_cross_step(y, x, draw.value, p).new_size;
                }
                if (rng.uniform() < dt / eps) {
                    const double z = env.sample(env_mean2, rng);
                    y = micro::redistribution_step(y, z, p, micro::SpeciesTag::Predator);
                }
                y_new[i] = y;
            }
        }
    };

    if (threads <= 1) {
        detail::ThreadTallies tally;
        worker(0, n, tally);
        e.asymmetric_noise_events += tally.asymmetric;
        e.clipped_noise_events += tally.clipped;
    } else {
        std::vector<std::thread> pool;
        std::vector<detail::ThreadTallies> tallies(threads);
        const std::size_t chunk = (n + threads - 1) / threads;
        for (int tix = 0; tix < threads; ++tix) {
            const std::size_t lo = tix * chunk;
            const std::size_t hi = std::min(n, lo + chunk);
            if (lo >= hi) break;
            pool.emplace_back(worker, lo, hi, std::ref(tallies[tix]));
        }
        for (auto& th : pool) th.join();
        for (const auto& tl : tallies) {
            e.asymmetric_noise_events += tl.asymmetric;
            e.clipped_noise_events += tl.clipped;
        }
    }

    e.preys = std::move(x_new);
    e.predators = std::move(y_new);
    e.t += dt;
    ++e.step_index;
}

// Monte Carlo quadrature of the non-closed Boltzmann variance systems, under
// the Dirac closure for the second moment of the environment densities. The
// parameters are used exactly as passed; callers working in the scaled
// regime pass the scaled set.
inline std::array<double, 2> boltzmann_variance_rhs_estimate(
    const ParticleEnsemble& e, const ModelParams& p, moments::VarianceVariant variant) {
    const MomentState s = estimate_moments(e);
    const std::size_t n = e.size();
    double i1 = 0;  // int y^2/(1+y) f2
    for (double y : e.predators) i1 += y * y / (1.0 + y);
    i1 /= n;
    double i2 = 0;  // int (x-mu)^2/(1+x) f1
    for (double x : e.preys) i2 += (x - p.mu) * (x - p.mu) / (1.0 + x);
    i2 /= n;
    const double zg2 = ((p.chi + 1.0) * s.m1) * ((p.chi + 1.0) * s.m1);
    const double zh2 = ((p.theta + 1.0) * s.m2) * ((p.theta + 1.0) * s.m2);

    const double e1 = s.v1 + s.m1 * s.m1;  // second moments
    const double e2 = s.v2 + s.m2 * s.m2;

    const double redis1 =
        p.alpha * p.alpha * (p.chi * p.chi * e1 - 2.0 * p.chi * (p.chi + 1.0) * s.m1 * s.m1 + zg2);
    const double redis2 = p.nu * p.nu * (p.theta * p.theta * e2 -
                                         2.0 * p.theta * (p.theta + 1.0) * s.m2 * s.m2 + zh2);

    if (variant == moments::VarianceVariant::P1) {
        const double dv1 = -((2.0 * p.beta - p.sigma1) * s.m2 + 2.0 * p.alpha * p.chi) * s.v1 +
                           p.sigma1 * s.m1 * s.m1 * s.m2 + redis1 + p.beta * p.beta * e1 * i1;
        const double dv2 =
            -(2.0 * p.gamma * (p.mu - s.m1) - p.sigma2 * s.m1 + 2.0 * p.nu * p.theta) * s.v2 +
            p.sigma2 * s.m1 * s.m2 * s.m2 + redis2 + p.gamma * p.gamma * e2 * i2;
        return {dv1, dv2};
    }

    // p = 1/2: the random effect only acts above the cutoff threshold, so
    // the sigma source integrates x f1 over the active region.
    const double thr = 0.5 * p.s0;
    double cut1 = 0, cut2 = 0;
    for (double x : e.preys)
        if (x < thr) cut1 += x;
    for (double y : e.predators)
        if (y < thr) cut2 += y;
    cut1 /= n;
    cut2 /= n;
    const double dv1 = -2.0 * (p.beta * s.m2 + p.alpha * p.chi) * s.v1 +
                       p.sigma1 * s.m2 * (s.m1 - cut1) + redis1 + p.beta * p.beta * e1 * i1;
    const double dv2 = -2.0 * (p.gamma * (p.mu - s.m1) + p.nu * p.theta) * s.v2 +
                       p.sigma2 * s.m1 * (s.m2 - cut2) + redis2 +
                       p.gamma * p.gamma * e2 * i2;
    return {dv1, dv2};
}

// Histogram of sizes as a cell-averaged density; samples outside the grid
// are clamped into the boundary cells so the result always integrates to 1.
inline fp::DensityField empirical_density(std::span<const double> sizes, const fp::Grid& g) {
    fp::DensityField f(g);
    const double dx = g.dx();
    for (double s : sizes) {
        int j = static_cast<int>((s - g.x_lo) / dx);
        j = std::clamp(j, 0, g.n - 1);
        f.values[static_cast<std::size_t>(j)] += 1.0;
    }
    const double w = 1.0 / (static_cast<double>(sizes.size()) * dx);
    for (double& v : f.values) v *= w;
    return f;
}

struct SeriesPoint {
    double t = 0;
    double m1 = 0, m2 = 0, v1 = 0, v2 = 0;
    double se1 = 0, se2 = 0;  // standard errors of the two means
};

inline SeriesPoint series_point(const ParticleEnsemble& e) {
    const MomentState s = estimate_moments(e);
    const double n = static_cast<double>(e.size());
    return {s.t, s.m1, s.m2, s.v1, s.v2, std::sqrt(s.v1 / n), std::sqrt(s.v2 / n)};
}

// Drives the ensemble to t_end, sampling moments every `sample_every` steps.
inline std::vector<SeriesPoint> run_mc(ParticleEnsemble& e, const ModelParams& macro,
                                       Variant variant, double dt, double t_end,
                                       std::size_t sample_every,
                                       const micro::EnvironmentLaw& env = {},
                                       int threads = 1) {
    std::vector<SeriesPoint> out;
    const std::size_t nsteps = static_cast<std::size_t>(std::llround(t_end / dt));
    out.reserve(nsteps / sample_every + 2);
    out.push_back(series_point(e));
    for (std::size_t k = 0; k < nsteps; ++k) {
        mc_step(e, macro, variant, dt, env, threads);
        if ((k + 1) % sample_every == 0 || k + 1 == nsteps) out.push_back(series_point(e));
    }
    return out;
}

}  // namespace kinlv::mc
