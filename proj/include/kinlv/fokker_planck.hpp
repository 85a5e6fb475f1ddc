#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "kinlv/moments.hpp"
#include "kinlv/params.hpp"

namespace kinlv::fp {

struct SolverDiverged : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Grid {
    double x_lo = 0;
    double x_hi = 0;
    int n = 0;

    double dx() const { return (x_hi - x_lo) / n; }
    double center(int j) const { return x_lo + (j + 0.5) * dx(); }
    double face(int j) const { return x_lo + j * dx(); }  // j = 0..n
};

struct DensityField {
    Grid grid;
    std::vector<double> values;  // cell averages

    explicit DensityField(Grid g) : grid(g), values(static_cast<std::size_t>(g.n), 0.0) {}

    double mass() const {
        double s = 0;
        for (double v : values) s += v;
        return s * grid.dx();
    }
    double min_value() const { return *std::min_element(values.begin(), values.end()); }

    void normalize() {
        const double m = mass();
        if (m > 0)
            for (double& v : values) v /= m;
    }
};

// Drift-diffusion coefficients of one species at one instant, for the flux
// F = D d/dx(x^{2p} f) + (A x - B) f.
struct FPCoefficients {
    double D = 0;
    double A = 0;
    double B = 0;
    double p = 0.5;
};

inline FPCoefficients prey_coefficients(double m1, double m2, const ModelParams& p,
                                        Variant variant) {
    FPCoefficients c;
    c.p = p.p;
    if (variant == Variant::Malthusian) {
        c.D = 0.5 * p.sigma1 * m2;
        c.A = p.beta * m2 + p.alpha * p.chi;
    } else {
        c.D = 0.5 * p.sigma1 * (m1 + m2);
        c.A = p.beta * m2 + (p.alpha / *p.K) * m1 + p.alpha * p.chi;
        c.p = 0.5;  // the intraspecific rule is only formulated for p = 1/2
    }
    c.B = p.alpha * (p.chi + 1.0) * m1;
    return c;
}

inline FPCoefficients predator_coefficients(double m1, double m2, const ModelParams& p,
                                            Variant /*variant*/) {
    FPCoefficients c;
    c.p = p.p;
    c.D = 0.5 * p.sigma2 * m1;
    c.A = p.gamma * (p.mu - m1) + p.nu * p.theta;
    c.B = p.nu * (p.theta + 1.0) * m2;
    return c;
}

namespace detail {

// Bernoulli function w / (e^w - 1), branch-stable for any w.
inline double bernoulli(double w) {
    const double aw = std::abs(w);
    if (aw < 1e-10) return 1.0 - 0.5 * w + w * w / 12.0;
    if (w > 35.0) return w * std::exp(-w);
    if (w < -35.0) return -w;
    return w / std::expm1(w);
}

// Effective face quantities of the rewritten flux
//   F = Dtilde f_x + U f,   Dtilde = D x^{2p},  U = 2p D x^{2p-1} + A x - B,
// in Scharfetter-Gummel form F = (Dtilde/dx) [B(-w) f_{j+1} - B(w) f_j]
// with w = U dx / Dtilde. Chang-Cooper weights for this flux reduce to
// exactly this expression and reproduce the zero-flux steady state ratio
// f_{j+1}/f_j = e^{-w}.
struct FaceCoeffs {
    std::vector<double> lo;  // multiplies f_j   (coefficient B(w) Dtilde/dx)
    std::vector<double> hi;  // multiplies f_j+1 (coefficient B(-w) Dtilde/dx)
    std::vector<double> w;   // face Peclet numbers
};

inline FaceCoeffs face_coeffs(const FPCoefficients& c, const Grid& g) {
    FaceCoeffs fc;
    const int n = g.n;
    fc.lo.assign(n + 1, 0.0);
    fc.hi.assign(n + 1, 0.0);
    fc.w.assign(n + 1, 0.0);
    const double dx = g.dx();
    for (int j = 1; j < n; ++j) {  // boundary faces stay at zero flux
        const double x = g.face(j);
        const double x2p = std::pow(x, 2.0 * c.p);
        const double dtil = c.D * x2p;
        const double drift = 2.0 * c.p * c.D * std::pow(x, 2.0 * c.p - 1.0) + c.A * x - c.B;
        if (dtil <= 0) {
            // Degenerate diffusion: pure advection, donor-cell upwind (the
            // drift velocity of the divergence form is -drift).
            fc.w[j] = drift > 0 ? 1e4 : (drift < 0 ? -1e4 : 0.0);
            fc.lo[j] = std::max(-drift, 0.0);
            fc.hi[j] = std::max(drift, 0.0);
            continue;
        }
        const double w = drift * dx / dtil;
        fc.w[j] = w;
        fc.lo[j] = dtil / dx * bernoulli(w);
        fc.hi[j] = dtil / dx * bernoulli(-w);
    }
    return fc;
}

// Thomas algorithm; diag/rhs are overwritten.
inline void solve_tridiagonal(std::vector<double>& lower, std::vector<double>& diag,
                              std::vector<double>& upper, std::vector<double>& rhs) {
    const std::size_t n = diag.size();
    for (std::size_t i = 1; i < n; ++i) {
        if (diag[i - 1] == 0) throw SolverDiverged("tridiagonal pivot vanished");
        const double m = lower[i] / diag[i - 1];
        diag[i] -= m * upper[i - 1];
        rhs[i] -= m * rhs[i - 1];
    }
    if (diag[n - 1] == 0) throw SolverDiverged("tridiagonal pivot vanished");
    rhs[n - 1] /= diag[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) rhs[i] = (rhs[i] - upper[i] * rhs[i + 1]) / diag[i];
}

}  // namespace detail

// One backward-Euler Chang-Cooper update with frozen coefficients. No-flux
// at both boundaries; the flux telescopes, so mass is conserved to solver
// roundoff and the M-matrix structure keeps cells nonnegative.
inline void chang_cooper_step(DensityField& f, const FPCoefficients& c, double dt) {
    const int n = f.grid.n;
    const double dx = f.grid.dx();
    const auto fc = detail::face_coeffs(c, f.grid);
    std::vector<double> lower(n, 0.0), diag(n, 0.0), upper(n, 0.0), rhs(f.values);
    const double r = dt / dx;
    for (int j = 0; j < n; ++j) {
        // (L f)_j = (F_{j+1/2} - F_{j-1/2}) / dx
        diag[j] = 1.0 + r * (fc.lo[j + 1] + fc.hi[j]);
        if (j > 0) lower[j] = -r * fc.lo[j];
        if (j < n - 1) upper[j] = -r * fc.hi[j + 1];
    }
    detail::solve_tridiagonal(lower, diag, upper, rhs);
    for (int j = 0; j < n; ++j) {
        if (rhs[j] < -1e-14)
            throw SolverDiverged("negative cell value beyond tolerance");
    }
    f.values = std::move(rhs);
}

// Exact steady state of the discrete Chang-Cooper operator: the zero-flux
// recursion log f_{j+1} = log f_j - w_{j+1/2}, accumulated in log space
// because the profile spans thousands of orders of magnitude, then
// normalized to unit mass.
inline DensityField discrete_steady_state(const FPCoefficients& c, const Grid& g) {
    DensityField f(g);
    const auto fc = detail::face_coeffs(c, g);
    std::vector<double> logf(g.n, 0.0);
    for (int j = 1; j < g.n; ++j) logf[j] = logf[j - 1] - fc.w[j];
    const double lmax = *std::max_element(logf.begin(), logf.end());
    for (int j = 0; j < g.n; ++j) f.values[j] = std::exp(logf[j] - lmax);
    f.normalize();
    return f;
}

// Midpoint-quadrature mean and variance of a field.
inline std::pair<double, double> fp_moments(const DensityField& f) {
    const double dx = f.grid.dx();
    double mass = 0, m = 0;
    for (int j = 0; j < f.grid.n; ++j) {
        mass += f.values[j] * dx;
        m += f.grid.center(j) * f.values[j] * dx;
    }
    if (mass > 0) m /= mass;
    double v = 0;
    for (int j = 0; j < f.grid.n; ++j) {
        const double d = f.grid.center(j) - m;
        v += d * d * f.values[j] * dx;
    }
    if (mass > 0) v /= mass;
    return {m, v};
}

// Flux of the divergence-form equation evaluated with an analytic density
// and its analytic derivative on the interior faces; returns the largest
// magnitude. A quasi-equilibrium must cancel this identically, so the result
// is roundoff-level when the exponents are right.
inline double analytic_flux_residual(const std::function<double(double)>& density,
                                     const std::function<double(double)>& density_deriv,
                                     const FPCoefficients& c, const Grid& g) {
    double worst = 0;
    for (int j = 1; j < g.n; ++j) {
        const double x = g.face(j);
        const double fx = density(x);
        const double dfx = density_deriv(x);
        const double x2p = std::pow(x, 2.0 * c.p);
        const double flux = c.D * (x2p * dfx + 2.0 * c.p * std::pow(x, 2.0 * c.p - 1.0) * fx) +
                            (c.A * x - c.B) * fx;
        worst = std::max(worst, std::abs(flux));
    }
    return worst;
}

// Exact solution of the pure redistribution transport: the initial profile
// translated and rescaled along characteristics,
//   f(x,t) = e^{a c t} f_in(e^{a c t} x - m(0) (e^{a(c+1)t} - 1)),
// with (a, c) = (alpha, chi) for prey and (nu, theta) for predators.
inline DensityField redistribution_exact(const std::function<double(double)>& f_in,
                                         double m0, double t, const ModelParams& p,
                                         bool prey, const Grid& g) {
    const double a = prey ? p.alpha : p.nu;
    const double ch = prey ? p.chi : p.theta;
    const double e1 = std::exp(a * ch * t);
    const double shift = m0 * (std::exp(a * (ch + 1.0) * t) - 1.0);
    DensityField f(g);
    for (int j = 0; j < g.n; ++j) {
        const double arg = e1 * g.center(j) - shift;
        f.values[j] = e1 * f_in(arg);
    }
    return f;
}

enum class CouplingMode { OdeFed, SelfConsistent };

// Mean source for the coefficient evaluation. OdeFed interrogates a dense
// pre-integrated trajectory (sampled at half steps, so midpoint coefficient
// times are exact samples); SelfConsistent reads the grid moments of the
// current fields.
class MeanPath {
  public:
    MeanPath(const MeanState& initial, const ModelParams& p, Variant variant, double t_end,
             double dt_half)
        : dt_(dt_half), path_(moments::integrate_means(initial, p, variant, t_end, dt_half)) {}

    MeanState at(double t) const {
        const double u = t / dt_;
        std::size_t k = static_cast<std::size_t>(std::llround(u));
        if (k >= path_.size()) k = path_.size() - 1;
        if (std::abs(u - static_cast<double>(k)) < 1e-6) return path_[k];
        // Fall back to linear interpolation off-sample.
        const std::size_t a = std::min(static_cast<std::size_t>(u), path_.size() - 2);
        const double s = u - static_cast<double>(a);
        return {t, (1 - s) * path_[a].m1 + s * path_[a + 1].m1,
                (1 - s) * path_[a].m2 + s * path_[a + 1].m2};
    }

  private:
    double dt_;
    std::vector<MeanState> path_;
};

struct CoupledRun {
    DensityField f1;
    DensityField f2;
    std::vector<MomentState> moments;  // grid moments sampled every `stride` steps
};

// Advances the two-species system to t_end. The two solves inside a step
// share the scalar means fixed at the step's coefficient time, so they are
// independent of each other within the step.
inline CoupledRun run_coupled(DensityField f1, DensityField f2, const ModelParams& p,
                              Variant variant, CouplingMode mode, double t_end, double dt,
                              const MeanPath* path, int stride = 100) {
    CoupledRun run{std::move(f1), std::move(f2), {}};
    const std::size_t nsteps = static_cast<std::size_t>(std::llround(t_end / dt));
    auto record = [&](double t) {
        const auto [m1, v1] = fp_moments(run.f1);
        const auto [m2, v2] = fp_moments(run.f2);
        run.moments.push_back({t, m1, m2, v1, v2});
    };
    record(0.0);
    for (std::size_t k = 0; k < nsteps; ++k) {
        const double t = k * dt;
        MeanState ms;
        if (mode == CouplingMode::OdeFed) {
            ms = path->at(t + 0.5 * dt);  // midpoint coefficients
        } else {
            const auto [m1, v1] = fp_moments(run.f1);
            const auto [m2, v2] = fp_moments(run.f2);
            ms = {t, m1, m2};
        }
        chang_cooper_step(run.f1, prey_coefficients(ms.m1, ms.m2, p, variant), dt);
        chang_cooper_step(run.f2, predator_coefficients(ms.m1, ms.m2, p, variant), dt);
        if ((k + 1) % static_cast<std::size_t>(stride) == 0 || k + 1 == nsteps)
            record((k + 1) * dt);
    }
    return run;
}

}  // namespace kinlv::fp
