#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "kinlv/diagnostics.hpp"

using namespace kinlv;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

ModelParams logistic_table1() {
    ModelParams p = ModelParams::table1();
    p.K = 10.0;
    return p;
}

}  // namespace

TEST_CASE("mean gap at the center is identically zero") {
    const ModelParams p = ModelParams::table1();
    std::vector<MeanState> pinned;
    for (int k = 0; k <= 100; ++k) pinned.push_back({k * 0.1, 10.0 / 3.0, 2.0});
    AdmissibleBounds degenerate;  // c0_hi = 0 marks the degenerate orbit
    degenerate.c1_lo = degenerate.c1_hi = 10.0 / 3.0;
    degenerate.c2_lo = degenerate.c2_hi = 2.0;
    const auto gap = diag::mean_gap(pinned, p, degenerate);
    CHECK(gap.lower == 0.0);
    for (double d : gap.series.mean_linf) CHECK_THAT(d, WithinAbs(0.0, 1e-12));
}

TEST_CASE("mean gap along the (4,3) orbit respects the sandwich") {
    const ModelParams p = ModelParams::table1();
    const auto ob = moments::orbit_bounds({0, 4.0, 3.0}, p);
    const auto path = moments::integrate_means({0, 4.0, 3.0}, p, Variant::Malthusian,
                                               100.0, 1e-3);
    // mean_gap throws BoundViolation if any sample leaves the sandwich
    const auto gap = diag::mean_gap(path, p, ob.bounds);
    CHECK(gap.lower > 0.0);
    CHECK(gap.upper > gap.lower);
    double lo = 1e300;
    for (std::size_t k = 0; k < gap.series.t.size(); ++k)
        if (gap.series.t[k] >= 20.0) lo = std::min(lo, gap.series.mean_linf[k]);
    CHECK(lo > 0.0);
    // the sum reading always dominates the max reading
    for (std::size_t k = 0; k < gap.series.t.size(); k += 1000)
        CHECK(gap.series.mean_sum[k] >= gap.series.mean_linf[k]);
}

TEST_CASE("trajectory and quasi-equilibrium means live on different H levels") {
    const ModelParams p = ModelParams::table1();
    const auto path =
        moments::integrate_means({0, 4.0, 3.0}, p, Variant::Malthusian, 20.0, 1e-3);
    const double h0 = moments::conserved_H(4.0, 3.0, p);
    for (std::size_t k = 0; k < path.size(); k += 200) {
        const auto em = eq::equilibrium_moments(path[k], p, Variant::Malthusian);
        const double heq = moments::conserved_H(em.m1_eq, em.m2_eq, p);
        CHECK(std::abs(heq - h0) > 1e-6);
    }
}

TEST_CASE("variance gap oscillates away from zero (Malthusian)") {
    const ModelParams p = ModelParams::table1();
    const auto mom = moments::integrate_moments({0, 4.0, 3.0, 0.1, 0.1}, p,
                                                moments::VarianceVariant::PHalf, 100.0, 1e-3);
    const auto dist = diag::variance_gap(mom, p, Variant::Malthusian);
    double lo = 1e300;
    for (std::size_t k = 0; k < dist.t.size(); ++k)
        if (dist.t[k] >= 20.0) lo = std::min(lo, dist.var_linf[k]);
    CHECK(lo > 0.0);
    REQUIRE(dist.var_tilde_linf.size() == dist.t.size());
}

TEST_CASE("variance gap vanishes on the stationary solution") {
    const ModelParams p = ModelParams::table1();
    const FixedPoints fp = fixed_points(p);
    std::vector<MomentState> pinned;
    for (int k = 0; k <= 50; ++k)
        pinned.push_back({k * 0.1, fp.m1_star, fp.m2_star, fp.v1_star, fp.v2_star});
    const auto dist = diag::variance_gap(pinned, p, Variant::Malthusian);
    for (double d : dist.var_linf) CHECK_THAT(d, WithinAbs(0.0, 1e-14));
}

TEST_CASE("logistic relaxation: gaps fall below threshold and the bound dominates") {
    const ModelParams p = logistic_table1();
    const auto mom = moments::integrate_moments({0, 4.0, 3.0, 0.1, 0.1}, p,
                                                moments::VarianceVariant::Logistic, 100.0,
                                                1e-3);
    std::vector<MeanState> means;
    for (const auto& s : mom) means.push_back({s.t, s.m1, s.m2});
    const auto dist = diag::variance_gap(mom, p, Variant::Logistic);
    CHECK(dist.mean_linf.back() <= 1e-3);
    CHECK(dist.var_linf.back() <= 1e-4);

    const auto b = moments::trajectory_bounds(means, p, Variant::Logistic);
    // throws if the bound fails to dominate anywhere
    const auto bound = diag::logistic_gap_bound(means, p, b);
    CHECK(bound.back() <= 1e-9 + 1e-3);  // bound itself decays to zero
    CHECK(bound.front() > bound.back());
}

TEST_CASE("logistic bound vanishes at the fixed point") {
    const ModelParams p = logistic_table1();
    std::vector<MeanState> pinned;
    for (int k = 0; k <= 10; ++k) pinned.push_back({k * 0.1, 10.0 / 3.0, 4.0 / 3.0});
    AdmissibleBounds b;
    b.c1_lo = b.c1_hi = 10.0 / 3.0;
    b.c2_lo = b.c2_hi = 4.0 / 3.0;
    const auto bound = diag::logistic_gap_bound(pinned, p, b);
    for (double v : bound) CHECK_THAT(v, WithinAbs(0.0, 1e-13));
}

TEST_CASE("density distances") {
    const fp::Grid g{2.9, 3.9, 40000};
    const double a = 10000.0 / 3.0, b = 1000.0;
    auto gamma_on = [&](double rate) {
        fp::DensityField f(g);
        const double logc = a * std::log(rate) - std::lgamma(a);
        for (int j = 0; j < g.n; ++j) {
            const double x = g.center(j);
            f.values[j] = std::exp(logc + (a - 1.0) * std::log(x) - rate * x);
        }
        return f;
    };
    const auto f = gamma_on(b);
    SECTION("identical inputs give zero") {
        CHECK(diag::density_distance(f, f, diag::Norm::L1) == 0.0);
        CHECK(diag::density_distance(f, f, diag::Norm::Sup) == 0.0);
    }
    SECTION("grid L1 against adaptive quadrature") {
        const auto h = gamma_on(1.01 * b);
        const double grid_l1 = diag::density_distance(f, h, diag::Norm::L1);
        // independent oracle: adaptive Simpson on |f - h|
        const double logc1 = a * std::log(b) - std::lgamma(a);
        const double logc2 = a * std::log(1.01 * b) - std::lgamma(a);
        auto diff = [&](double x) {
            const double fa = std::exp(logc1 + (a - 1.0) * std::log(x) - b * x);
            const double fb = std::exp(logc2 + (a - 1.0) * std::log(x) - 1.01 * b * x);
            return std::abs(fa - fb);
        };
        // composite Simpson on a very fine grid (kinks make adaptivity moot)
        const int n = 200001;
        const double lo = 2.9, hi = 3.9, hstep = (hi - lo) / (n - 1);
        double simpson = diff(lo) + diff(hi);
        for (int i = 1; i < n - 1; ++i)
            simpson += diff(lo + i * hstep) * (i % 2 ? 4.0 : 2.0);
        simpson *= hstep / 3.0;
        CHECK_THAT(grid_l1, WithinAbs(simpson, 1e-6));
    }
    SECTION("mismatched grids are rejected") {
        const fp::Grid g2{0.0, 12.0, 800};
        fp::DensityField other(g2);
        CHECK_THROWS_AS(diag::density_distance(f, other, diag::Norm::L1),
                        std::invalid_argument);
    }
}
