// Acceptance suite: runs the artifact's quantitative exit criteria and
// prints one PASS/FAIL line per criterion. Exits nonzero if any fail.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "kinlv/kinlv.hpp"

using namespace kinlv;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

// Exact rational arithmetic for the fixed-point checks.
struct Rational {
    long long num = 0, den = 1;
    static long long gcd(long long a, long long b) { return b == 0 ? a : gcd(b, a % b); }
    Rational reduce() const {
        long long g = gcd(num < 0 ? -num : num, den < 0 ? -den : den);
        if (g == 0) return {0, 1};
        long long s = den < 0 ? -1 : 1;
        return {s * num / g, s * den / g};
    }
    Rational operator+(Rational o) const { return Rational{num * o.den + o.num * den, den * o.den}.reduce(); }
    Rational operator-(Rational o) const { return Rational{num * o.den - o.num * den, den * o.den}.reduce(); }
    Rational operator*(Rational o) const { return Rational{num * o.num, den * o.den}.reduce(); }
    Rational operator/(Rational o) const { return Rational{num * o.den, den * o.num}.reduce(); }
    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", x);
    return buf;
}

ModelParams logistic_table1() {
    ModelParams p = ModelParams::table1();
    p.K = 10.0;
    return p;
}

// ---------------------------------------------------------------- criterion 1
Outcome criterion1_fixed_points() {
    const Rational alpha{1, 1}, beta{1, 2}, gamma{3, 20}, mu{10, 1}, nu{1, 1};
    const Rational sigma{1, 1000}, K{10, 1};
    const Rational delta = gamma * mu - nu;
    const Rational m1s = delta / gamma;              // 10/3
    const Rational m2s = alpha / beta;               // 2
    const Rational v1s = delta * sigma / (Rational{2, 1} * beta * gamma);
    const Rational v2s = alpha * delta * sigma / (Rational{2, 1} * beta * gamma * nu);
    const Rational m2i = alpha * (gamma * K - delta) / (beta * gamma * K);  // 4/3
    const Rational v1i = sigma * m1s * (m1s + m2i) /
                         (Rational{2, 1} * (beta * m2i + alpha / K * m1s));
    const Rational v2i =
        sigma * m1s * m2i / (Rational{2, 1} * (gamma * (mu - m1s)));

    const FixedPoints fp = fixed_points(logistic_table1());
    bool exact = fp.m1_star == m1s.value() && fp.m2_star == m2s.value() &&
                 fp.m1_inf == m1s.value() && fp.m2_inf == m2i.value();
    const double dv = std::max(
        std::max(std::abs(fp.v1_star - v1s.value()), std::abs(fp.v2_star - v2s.value())),
        std::max(std::abs(fp.v1_inf - v1i.value()), std::abs(fp.v2_inf - v2i.value())));
    std::ostringstream os;
    os << "m* = (" << fmt(fp.m1_star) << ", " << fmt(fp.m2_star) << ") exact=" << exact
       << ", max |v - closed form| = " << fmt(dv);
    return {exact && dv <= 1e-12, os.str()};
}

// ---------------------------------------------------------------- criterion 2
Outcome criterion2_conservation() {
    const ModelParams p = ModelParams::table1();
    // H drift of the RK4 orbit at dt = 1e-4
    const double h0 = moments::conserved_H(4.0, 3.0, p);
    const auto path = moments::integrate_means({0, 4.0, 3.0}, p, Variant::Malthusian,
                                               10.0, 1e-4);
    double worst_h = 0;
    for (std::size_t k = 10000; k < path.size(); k += 10000) {
        const double drift = std::abs(moments::conserved_H(path[k], p) - h0) / path[k].t;
        worst_h = std::max(worst_h, drift);
    }
    // FP mass conservation per step
    const fp::Grid g{0.0, 12.0, 800};
    fp::DensityField f(g);
    {
        const double a = 160.0, b = 40.0;  // Gamma(mean 4, var 0.1)
        const double logc = a * std::log(b) - std::lgamma(a);
        for (int j = 0; j < g.n; ++j) {
            const double x = g.center(j);
            f.values[j] = x > 0 ? std::exp(logc + (a - 1.0) * std::log(x) - b * x) : 0.0;
        }
        f.normalize();
    }
    const auto c = fp::prey_coefficients(4.0, 3.0, p, Variant::Malthusian);
    double worst_mass = 0, mass_prev = f.mass();
    for (int k = 0; k < 1000; ++k) {
        fp::chang_cooper_step(f, c, 1e-3);
        const double m = f.mass();
        worst_mass = std::max(worst_mass, std::abs(m - mass_prev));
        mass_prev = m;
    }
    // MC particle counts
    auto e = mc::ParticleEnsemble::gamma_fit(20000, 4.0, 0.1, 3.0, 0.1, 0.05, 17);
    bool counts_ok = true;
    for (int k = 0; k < 400; ++k) {
        mc::mc_step(e, p, Variant::Malthusian, 2e-3);
        counts_ok = counts_ok && e.preys.size() == 20000 && e.predators.size() == 20000;
    }
    std::ostringstream os;
    os << "H drift/time = " << fmt(worst_h) << " (<=1e-8), mass drift/step = "
       << fmt(worst_mass) << " (<=1e-12), counts constant = " << counts_ok;
    return {worst_h <= 1e-8 && worst_mass <= 1e-12 && counts_ok, os.str()};
}

// ---------------------------------------------------------------- criterion 3
Outcome criterion3_flux_vanishing() {
    const ModelParams p = ModelParams::table1();
    const auto ob = moments::orbit_bounds({0, 4.0, 3.0}, p);
    const auto path = moments::integrate_means({0, 4.0, 3.0}, p, Variant::Malthusian,
                                               ob.period, 1e-3);
    CounterRng rng(20240808);
    const fp::Grid grid{0.0, 12.0, 800};
    double worst = 0;
    for (int trial = 0; trial < 20; ++trial) {
        const auto& s = path[rng.uniform_below(path.size())];
        const auto gq = eq::gamma_params(s, p, Variant::Malthusian);
        const auto c1 = fp::prey_coefficients(s.m1, s.m2, p, Variant::Malthusian);
        const auto c2 = fp::predator_coefficients(s.m1, s.m2, p, Variant::Malthusian);
        worst = std::max(worst, fp::analytic_flux_residual(
                                    [&](double x) { return gq.density1(x); },
                                    [&](double x) { return gq.density1_deriv(x); }, c1, grid));
        worst = std::max(worst, fp::analytic_flux_residual(
                                    [&](double y) { return gq.density2(y); },
                                    [&](double y) { return gq.density2_deriv(y); }, c2, grid));
    }
    return {worst <= 1e-8, "max flux residual over 20 orbit points = " + fmt(worst)};
}

// ---------------------------------------------------------------- criterion 4
Outcome criterion4_orbit_reproduction() {
    const ModelParams p = ModelParams::table1();
    const std::vector<std::pair<double, double>> initials = {
        {3.0, 2.0}, {3.5, 2.5}, {4.0, 3.0}, {4.5, 3.5}};
    const FixedPoints fps = fixed_points(p);
    double worst_closure = 0, worst_eq_closure = 0, min_margin = 1e300;
    double prev_c0 = -1;
    bool nested = true, encircles = true;
    for (auto [m10, m20] : initials) {
        const auto ob = moments::orbit_bounds({0, m10, m20}, p);
        nested = nested && ob.bounds.c0_hi > prev_c0;
        prev_c0 = ob.bounds.c0_hi;
        const double dt = 1e-3;
        const double whole = std::floor(ob.period / dt) * dt;
        const auto path =
            moments::integrate_means({0, m10, m20}, p, Variant::Malthusian, whole, dt);
        // finish the fractional tail of the period
        auto rhs = [&](double, const moments::detail::Vec<2>& y) {
            return moments::lv_rhs({0, y[0], y[1]}, p);
        };
        auto pos = [](const moments::detail::Vec<2>& y) { return y[0] > 0 && y[1] > 0; };
        const double tail = ob.period - whole;
        auto y = moments::detail::guarded_step<2>({path.back().m1, path.back().m2},
                                                  path.back().t, tail, rhs, pos);
        worst_closure = std::max(worst_closure,
                                 std::max(std::abs(y[0] - m10), std::abs(y[1] - m20)));
        // quasi-equilibrium means: closure, winding about m*, H margin
        const double h0 = moments::conserved_H(m10, m20, p);
        double winding = 0, prev_angle = 0;
        bool first = true;
        for (const auto& s : path) {
            const auto em = eq::equilibrium_moments(s, p, Variant::Malthusian);
            min_margin = std::min(
                min_margin, std::abs(moments::conserved_H(em.m1_eq, em.m2_eq, p) - h0));
            const double ang = std::atan2(em.m2_eq - fps.m2_star, em.m1_eq - fps.m1_star);
            if (!first) {
                double d = ang - prev_angle;
                if (d > 3.14159265358979) d -= 2 * 3.141592653589793;
                if (d < -3.14159265358979) d += 2 * 3.141592653589793;
                winding += d;
            }
            prev_angle = ang;
            first = false;
        }
        encircles = encircles && std::abs(std::abs(winding) - 2 * 3.141592653589793) < 0.05;
        const auto em0 = eq::equilibrium_moments(path.front(), p, Variant::Malthusian);
        const auto emT = eq::equilibrium_moments({0, y[0], y[1]}, p, Variant::Malthusian);
        worst_eq_closure = std::max(worst_eq_closure,
                                    std::max(std::abs(emT.m1_eq - em0.m1_eq),
                                             std::abs(emT.m2_eq - em0.m2_eq)));
    }
    std::ostringstream os;
    os << "closure = " << fmt(worst_closure) << ", eq closure = " << fmt(worst_eq_closure)
       << ", H margin = " << fmt(min_margin) << ", nested = " << nested
       << ", encircles = " << encircles;
    return {worst_closure <= 1e-6 && worst_eq_closure <= 1e-6 && min_margin > 1e-6 &&
                nested && encircles,
            os.str()};
}

// ---------------------------------------------------------------- criterion 5
Outcome criterion5_gap_sandwich() {
    const ModelParams p = ModelParams::table1();
    const auto ob = moments::orbit_bounds({0, 4.0, 3.0}, p);
    const auto mom = moments::integrate_moments({0, 4.0, 3.0, 0.1, 0.1}, p,
                                                moments::VarianceVariant::PHalf, 100.0, 1e-3);
    std::vector<MeanState> means;
    means.reserve(mom.size());
    for (const auto& s : mom) means.push_back({s.t, s.m1, s.m2});
    try {
        const auto gap = diag::mean_gap(means, p, ob.bounds);  // throws on violation
        const auto dist = diag::variance_gap(mom, p, Variant::Malthusian);
        double lo_mean = 1e300, lo_var = 1e300;
        for (std::size_t k = 0; k < dist.t.size(); ++k) {
            if (dist.t[k] < 20.0) continue;
            lo_mean = std::min(lo_mean, gap.series.mean_linf[k]);
            lo_var = std::min(lo_var, dist.var_linf[k]);
        }
        std::ostringstream os;
        os << "sandwich [" << fmt(gap.lower) << ", " << fmt(gap.upper)
           << "] held pointwise; min gaps on [20,100]: mean = " << fmt(lo_mean)
           << ", var = " << fmt(lo_var);
        return {lo_mean > 0 && lo_var > 0, os.str()};
    } catch (const diag::BoundViolation& e) {
        return {false, e.what()};
    }
}

// ---------------------------------------------------------------- criterion 6
Outcome criterion6_logistic_relaxation() {
    const ModelParams p = logistic_table1();
    const auto mom = moments::integrate_moments({0, 4.0, 3.0, 0.1, 0.1}, p,
                                                moments::VarianceVariant::Logistic, 100.0,
                                                1e-3);
    std::vector<MeanState> means;
    means.reserve(mom.size());
    for (const auto& s : mom) means.push_back({s.t, s.m1, s.m2});
    const auto dist = diag::variance_gap(mom, p, Variant::Logistic);
    const double dm = dist.mean_linf.back();
    const double dv = dist.var_linf.back();
    try {
        const auto b = moments::trajectory_bounds(means, p, Variant::Logistic);
        diag::logistic_gap_bound(means, p, b);  // throws if domination fails
    } catch (const diag::BoundViolation& e) {
        return {false, e.what()};
    }
    std::ostringstream os;
    os << "d_mean(100) = " << fmt(dm) << " (<=1e-3), d_var(100) = " << fmt(dv)
       << " (<=1e-4), bound dominates pointwise";
    return {dm <= 1e-3 && dv <= 1e-4, os.str()};
}

// ---------------------------------------------------------------- criterion 7
Outcome criterion7_multiscale() {
    const ModelParams p = ModelParams::table1();
    // (a) N = 1e5, eps = 0.01: means within 3 standard errors at t = 1..20
    const std::size_t N = 100000;
    const double eps = 0.01, dt = 2e-4;
    auto e = mc::ParticleEnsemble::gamma_fit(N, 4.0, 0.1, 3.0, 0.1, eps, 6021023);
    const auto ode = moments::integrate_means({0, 4.0, 3.0}, p, Variant::Malthusian,
                                              20.0, dt);
    const std::size_t per_unit = static_cast<std::size_t>(std::llround(1.0 / dt));
    double worst_pull = 0;  // |deviation| / (3 se)
    for (int unit = 1; unit <= 20; ++unit) {
        for (std::size_t k = 0; k < per_unit; ++k) mc::mc_step(e, p, Variant::Malthusian, dt);
        const auto s = mc::series_point(e);
        const auto& ref = ode[static_cast<std::size_t>(unit) * per_unit];
        worst_pull = std::max(worst_pull, std::abs(s.m1 - ref.m1) / (3.0 * s.se1));
        worst_pull = std::max(worst_pull, std::abs(s.m2 - ref.m2) / (3.0 * s.se2));
    }
    // (b) gap at t = 10 decreases monotonically in eps
    auto gap_at = [&](double eps_run) {
        const double dtr = 0.05 * eps_run;
        auto er = mc::ParticleEnsemble::gamma_fit(N, 4.0, 0.1, 3.0, 0.1, eps_run, 777001);
        const std::size_t steps = static_cast<std::size_t>(std::llround(10.0 / dtr));
        for (std::size_t k = 0; k < steps; ++k) mc::mc_step(er, p, Variant::Malthusian, dtr);
        const auto s = mc::estimate_moments(er);
        const auto ref = moments::integrate_means({0, 4.0, 3.0}, p, Variant::Malthusian,
                                                  10.0, 1e-3)
                             .back();
        return std::max(std::abs(s.m1 - ref.m1), std::abs(s.m2 - ref.m2));
    };
    const double g10 = gap_at(0.1), g05 = gap_at(0.05), g01 = gap_at(0.01);
    std::ostringstream os;
    os << "max |dev|/3se = " << fmt(worst_pull) << " (<1), eps sweep gaps: " << fmt(g10)
       << " > " << fmt(g05) << " > " << fmt(g01);
    return {worst_pull < 1.0 && g10 > g05 && g05 > g01, os.str()};
}

// ---------------------------------------------------------------- criterion 8
Outcome criterion8_fp_steady_state() {
    const ModelParams p = ModelParams::table1();
    const auto gq = eq::gamma_params({0, 10.0 / 3.0, 2.0}, p, Variant::Malthusian);
    const auto c = fp::prey_coefficients(10.0 / 3.0, 2.0, p, Variant::Malthusian);
    auto steady_error = [&](int cells) {
        const fp::Grid g{0.0, 12.0, cells};
        fp::DensityField f(g);
        const double a = 3.0 * 3.0 / 0.05, b = 3.0 / 0.05;  // off-equilibrium start
        const double logc = a * std::log(b) - std::lgamma(a);
        for (int j = 0; j < g.n; ++j) {
            const double x = g.center(j);
            f.values[j] = x > 0 ? std::exp(logc + (a - 1.0) * std::log(x) - b * x) : 0.0;
        }
        f.normalize();
        for (int k = 0; k < 600; ++k) fp::chang_cooper_step(f, c, 0.05);  // t = 30
        double l1 = 0;
        for (int j = 0; j < g.n; ++j)
            l1 += std::abs(f.values[j] - gq.density1(g.center(j))) * g.dx();
        return l1;
    };
    const double e200 = steady_error(200), e400 = steady_error(400),
                 e800 = steady_error(800);
    const double order1 = std::log2(e200 / e400), order2 = std::log2(e400 / e800);
    std::ostringstream os;
    os << "L1(800) = " << fmt(e800) << " (<=5e-3), measured orders " << fmt(order1)
       << ", " << fmt(order2) << " (>=1)";
    return {e800 <= 5e-3 && order1 >= 1.0 && order2 >= 1.0, os.str()};
}

// ---------------------------------------------------------------- criterion 9
Outcome criterion9_variance_crosscheck() {
    const ModelParams p = ModelParams::table1();
    // (a) explicit integral solution vs RK4 of the closed p = 1/2 system
    const double dt = 1e-4;
    const auto mpath = moments::integrate_means({0, 4.0, 3.0}, p, Variant::Malthusian,
                                                100.0, dt);
    const auto vexp = moments::variance_explicit(mpath, {0.1, 0.1}, p);
    const auto mom = moments::integrate_moments({0, 4.0, 3.0, 0.1, 0.1}, p,
                                                moments::VarianceVariant::PHalf, 100.0, dt);
    double sup = 0;
    for (std::size_t k = 0; k < mom.size(); ++k) {
        sup = std::max(sup, std::abs(vexp[k][0] - mom[k].v1));
        sup = std::max(sup, std::abs(vexp[k][1] - mom[k].v2));
    }
    // (b) Monte Carlo estimate of the Boltzmann variance rhs vs the closed
    // FP rhs under the quasi-invariant scaling
    const double eps = 1e-3;
    const ModelParams scaled = mc::detail::scaled(p, eps);
    auto e = mc::ParticleEnsemble::gamma_fit(500000, 4.0, 0.1, 3.0, 0.1, eps, 424242);
    const auto s = mc::estimate_moments(e);
    const auto est = mc::boltzmann_variance_rhs_estimate(e, scaled,
                                                         moments::VarianceVariant::PHalf);
    const auto ref = moments::variance_rhs(s, p, moments::VarianceVariant::PHalf);
    const double rel1 = std::abs(est[0] / eps - ref[0]) / std::abs(ref[0]);
    const double rel2 = std::abs(est[1] / eps - ref[1]) / std::abs(ref[1]);
    std::ostringstream os;
    os << "sup|explicit - RK4| = " << fmt(sup) << " (<=1e-6), MC-vs-FP rhs rel err = ("
       << fmt(rel1) << ", " << fmt(rel2) << ") (<=0.1)";
    return {sup <= 1e-6 && rel1 <= 0.1 && rel2 <= 0.1, os.str()};
}

}  // namespace

int main() {
    struct Entry {
        int id;
        const char* name;
        std::function<Outcome()> fn;
    };
    const std::vector<Entry> criteria = {
        {1, "fixed points", criterion1_fixed_points},
        {2, "conservation", criterion2_conservation},
        {3, "quasi-equilibrium flux vanishing", criterion3_flux_vanishing},
        {4, "closed orbit reproduction", criterion4_orbit_reproduction},
        {5, "mean gap sandwich", criterion5_gap_sandwich},
        {6, "logistic relaxation", criterion6_logistic_relaxation},
        {7, "multiscale consistency", criterion7_multiscale},
        {8, "FP steady state vs Gamma", criterion8_fp_steady_state},
        {9, "variance closure cross-check", criterion9_variance_crosscheck},
    };
    bool all = true;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = c.fn();
        } catch (const std::exception& e) {
            out = {false, std::string("exception: ") + e.what()};
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("[%s] criterion %d: %s — %s (%.1fs)\n", out.pass ? "PASS" : "FAIL",
                    c.id, c.name, out.detail.c_str(), secs);
        std::fflush(stdout);
        all = all && out.pass;
    }
    return all ? 0 : 1;
}
