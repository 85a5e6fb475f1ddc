#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "kinlv/boltzmann_mc.hpp"
#include "kinlv/csv.hpp"
#include "kinlv/diagnostics.hpp"
#include "kinlv/equilibria.hpp"
#include "kinlv/fokker_planck.hpp"
#include "kinlv/moments.hpp"
#include "kinlv/params.hpp"

namespace kinlv::runner {

inline constexpr const char* kVersion = "kinlv 1.0.0";

// Run settings layered on top of the model constants in the same key=value
// file. Unknown keys are rejected.
struct RunSettings {
    Variant variant = Variant::Malthusian;
    double dt = 1e-3;
    double t_end = 100.0;
    std::size_t n_particles = 100000;
    double epsilon = 0.01;
    int n_cells = 800;
    double x_max = 12.0;
    fp::CouplingMode coupling_mode = fp::CouplingMode::OdeFed;
    double m1_0 = 4.0, m2_0 = 3.0;
    double v1_0 = 0.1, v2_0 = 0.1;
    std::size_t sample_every = 100;
    micro::EnvironmentLaw env;
};

struct ExperimentConfig {
    ModelParams params;
    RunSettings run;

    static ExperimentConfig from_stream(std::istream& in) {
        auto kv = parse_key_values(in);
        ExperimentConfig cfg;
        cfg.params = params_from_map(kv);
        RunSettings& r = cfg.run;
        auto take = [&kv](const char* key, auto parse_fn) {
            if (auto it = kv.find(key); it != kv.end()) {
                parse_fn(it->second);
                kv.erase(it);
            }
        };
        take("variant", [&](const std::string& v) {
            if (v == "malthusian")
                r.variant = Variant::Malthusian;
            else if (v == "logistic")
                r.variant = Variant::Logistic;
            else
                throw ConfigError("variant must be 'malthusian' or 'logistic'");
        });
        take("coupling_mode", [&](const std::string& v) {
            if (v == "ode_fed")
                r.coupling_mode = fp::CouplingMode::OdeFed;
            else if (v == "self_consistent")
                r.coupling_mode = fp::CouplingMode::SelfConsistent;
            else
                throw ConfigError("coupling_mode must be 'ode_fed' or 'self_consistent'");
        });
        take("env_law", [&](const std::string& v) {
            if (v == "dirac")
                r.env.kind = micro::EnvironmentLaw::Kind::Dirac;
            else if (v == "gamma")
                r.env.kind = micro::EnvironmentLaw::Kind::Gamma;
            else
                throw ConfigError("env_law must be 'dirac' or 'gamma'");
        });
        take("env_gamma_shape",
             [&](const std::string& v) { r.env.gamma_shape = parse_double("env_gamma_shape", v); });
        take("dt", [&](const std::string& v) { r.dt = parse_double("dt", v); });
        take("t_end", [&](const std::string& v) { r.t_end = parse_double("t_end", v); });
        take("epsilon", [&](const std::string& v) { r.epsilon = parse_double("epsilon", v); });
        take("x_max", [&](const std::string& v) { r.x_max = parse_double("x_max", v); });
        take("m1_0", [&](const std::string& v) { r.m1_0 = parse_double("m1_0", v); });
        take("m2_0", [&](const std::string& v) { r.m2_0 = parse_double("m2_0", v); });
        take("v1_0", [&](const std::string& v) { r.v1_0 = parse_double("v1_0", v); });
        take("v2_0", [&](const std::string& v) { r.v2_0 = parse_double("v2_0", v); });
        take("n_particles", [&](const std::string& v) {
            r.n_particles = static_cast<std::size_t>(parse_double("n_particles", v));
        });
        take("n_cells", [&](const std::string& v) {
            r.n_cells = static_cast<int>(parse_double("n_cells", v));
        });
        take("sample_every", [&](const std::string& v) {
            r.sample_every = static_cast<std::size_t>(parse_double("sample_every", v));
        });
        if (!kv.empty()) throw ConfigError("unknown key '" + kv.begin()->first + "'");
        if (!(r.dt > 0)) throw ConfigError("dt must be > 0");
        if (!(r.t_end > 0)) throw ConfigError("t_end must be > 0");
        return cfg;
    }

    static ExperimentConfig load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config file '" + path + "'");
        return from_stream(in);
    }
};

namespace detail {

// Full validation for the runner: constant checks first, then the deferred
// chi/theta checks against bounds derived from the configured initial
// condition.
inline void validate_or_throw(const ExperimentConfig& cfg) {
    auto rep = validate(cfg.params, cfg.run.variant);
    if (!rep.admissible()) throw ConfigError("invalid parameters:\n" + rep.summary());
    AdmissibleBounds b;
    if (cfg.run.variant == Variant::Malthusian) {
        const auto d0 = moments::lv_rhs({0, cfg.run.m1_0, cfg.run.m2_0}, cfg.params);
        if (d0[0] == 0 && d0[1] == 0) return;  // center: nothing deferred to check
        b = moments::orbit_bounds({0, cfg.run.m1_0, cfg.run.m2_0}, cfg.params).bounds;
    } else {
        const auto path = moments::integrate_means({0, cfg.run.m1_0, cfg.run.m2_0},
                                                   cfg.params, Variant::Logistic,
                                                   cfg.run.t_end, cfg.run.dt);
        b = moments::trajectory_bounds(path, cfg.params, Variant::Logistic);
    }
    rep = validate(cfg.params, cfg.run.variant, &b);
    if (!rep.admissible())
        throw ConfigError("invalid parameters along the orbit:\n" + rep.summary());
}

inline std::string fmt_initial(double m1, double m2, double v1, double v2) {
    using kinlv::detail::fmt;
    return "(" + fmt(m1) + "," + fmt(m2) + "," + fmt(v1) + "," + fmt(v2) + ")";
}

inline void write_manifest(const std::filesystem::path& dir, const ExperimentConfig& cfg,
                           const std::string& subcommand, std::uint64_t seed,
                           double wall_seconds) {
    io::Manifest m;
    m.set("artifact_version", std::string(kVersion));
    m.set("subcommand", subcommand);
    m.set("params_hash", cfg.params.hash());
    m.set("seed", seed);
    m.set("variant", cfg.run.variant == Variant::Malthusian ? std::string("malthusian")
                                                            : std::string("logistic"));
    m.set("dt", cfg.run.dt);
    m.set("t_end", cfg.run.t_end);
    m.set("n_particles", static_cast<std::uint64_t>(cfg.run.n_particles));
    m.set("epsilon", cfg.run.epsilon);
    m.set("n_cells", static_cast<std::uint64_t>(cfg.run.n_cells));
    m.set("x_max", cfg.run.x_max);
    m.set("coupling_mode", cfg.run.coupling_mode == fp::CouplingMode::OdeFed
                               ? std::string("ode_fed")
                               : std::string("self_consistent"));
    m.set("initial",
          detail::fmt_initial(cfg.run.m1_0, cfg.run.m2_0, cfg.run.v1_0, cfg.run.v2_0));
    m.set("wall_clock_sec", wall_seconds);
    m.write((dir / "manifest.txt").string());
}

inline std::string fmt_initial(double m1, double m2, double v1, double v2);

// Gamma density with the requested mean and variance sampled on the grid
// cell centers and normalized; the standard initial condition of the grid
// solver.
inline fp::DensityField gamma_field(const fp::Grid& g, double mean, double variance) {
    fp::DensityField f(g);
    const double a = mean * mean / variance;
    const double b = mean / variance;
    const double logc = a * std::log(b) - std::lgamma(a);
    for (int j = 0; j < g.n; ++j) {
        const double x = g.center(j);
        f.values[j] = x > 0 ? std::exp(logc + (a - 1.0) * std::log(x) - b * x) : 0.0;
    }
    f.normalize();
    return f;
}

}  // namespace detail

class Stopwatch {
  public:
    double seconds() const {
        return std::chrono::duration<double>(Clock::now() - start_).count();
    }

  private:
    using Clock = std::chrono::steady_clock;
    Clock::time_point start_ = Clock::now();
};

// --- subcommand drivers ----------------------------------------------------

// moments: mean/variance trajectories plus the distance diagnostics.
inline void run_moments(const ExperimentConfig& cfg, const std::filesystem::path& out,
                        std::uint64_t seed) {
    Stopwatch watch;
    detail::validate_or_throw(cfg);
    std::filesystem::create_directories(out);
    const RunSettings& r = cfg.run;
    const auto variance_variant = r.variant == Variant::Malthusian
                                      ? moments::VarianceVariant::PHalf
                                      : moments::VarianceVariant::Logistic;
    const auto mom = moments::integrate_moments({0, r.m1_0, r.m2_0, r.v1_0, r.v2_0},
                                                cfg.params, variance_variant, r.t_end, r.dt);
    {
        io::CsvWriter csv((out / "trajectory.csv").string());
        csv.header({"t", "m1", "m2", "v1", "v2"});
        for (std::size_t k = 0; k < mom.size(); k += r.sample_every)
            csv.row({mom[k].t, mom[k].m1, mom[k].m2, mom[k].v1, mom[k].v2});
    }
    {
        std::vector<MeanState> means;
        means.reserve(mom.size());
        for (const auto& s : mom) means.push_back({s.t, s.m1, s.m2});
        const auto dist = diag::variance_gap(mom, cfg.params, r.variant);
        double lower = 0, upper = 0;
        std::vector<double> bound;
        if (r.variant == Variant::Malthusian) {
            const auto d0 = moments::lv_rhs(means.front(), cfg.params);
            if (!(d0[0] == 0 && d0[1] == 0)) {
                const auto ob = moments::orbit_bounds(means.front(), cfg.params);
                const auto gap = diag::mean_gap(means, cfg.params, ob.bounds);
                lower = gap.lower;
                upper = gap.upper;
            }
        } else {
            const auto b = moments::trajectory_bounds(means, cfg.params, Variant::Logistic);
            bound = diag::logistic_gap_bound(means, cfg.params, b);
        }
        io::CsvWriter csv((out / "distances.csv").string());
        csv.header({"t", "d_mean_linf", "d_mean_sum", "d_var_linf", "d_var_tilde_linf",
                    "bound_lower", "bound_upper"});
        for (std::size_t k = 0; k < dist.t.size(); k += r.sample_every) {
            const double tilde =
                dist.var_tilde_linf.empty() ? 0.0 : dist.var_tilde_linf[k];
            const double blo = r.variant == Variant::Malthusian ? lower : 0.0;
            const double bhi = r.variant == Variant::Malthusian ? upper : bound[k];
            csv.row({dist.t[k], dist.mean_linf[k], dist.mean_sum[k], dist.var_linf[k],
                     tilde, blo, bhi});
        }
    }
    detail::write_manifest(out, cfg, "moments", seed, watch.seconds());
}

// mc: particle run, moment series, final snapshots and histograms.
inline void run_mc_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out,
                              std::uint64_t seed, int threads = 1) {
    Stopwatch watch;
    detail::validate_or_throw(cfg);
    std::filesystem::create_directories(out);
    const RunSettings& r = cfg.run;
    auto ensemble = mc::ParticleEnsemble::gamma_fit(r.n_particles, r.m1_0, r.v1_0, r.m2_0,
                                                    r.v2_0, r.epsilon, seed);
    const auto series = mc::run_mc(ensemble, cfg.params, r.variant, r.dt, r.t_end,
                                   r.sample_every, r.env, threads);
    {
        io::CsvWriter csv((out / "mc_moments.csv").string());
        csv.header({"t", "m1", "m2", "v1", "v2", "se1", "se2"});
        for (const auto& s : series) csv.row({s.t, s.m1, s.m2, s.v1, s.v2, s.se1, s.se2});
    }
    {
        io::CsvWriter csv((out / "preys.csv").string());
        csv.header({"size"});
        for (double x : ensemble.preys) csv.row({x});
    }
    {
        io::CsvWriter csv((out / "predators.csv").string());
        csv.header({"size"});
        for (double y : ensemble.predators) csv.row({y});
    }
    const fp::Grid grid{0.0, r.x_max, r.n_cells};
    for (int species = 0; species < 2; ++species) {
        const auto& sizes = species == 0 ? ensemble.preys : ensemble.predators;
        const auto hist = mc::empirical_density(sizes, grid);
        io::CsvWriter csv((out / (species == 0 ? "f1_hist.csv" : "f2_hist.csv")).string());
        csv.header({"x", "f"});
        for (int j = 0; j < grid.n; ++j) csv.row({grid.center(j), hist.values[j]});
    }
    detail::write_manifest(out, cfg, "mc", seed, watch.seconds());
}

// fp: grid run with snapshots and moment series.
inline void run_fp_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out,
                              std::uint64_t seed) {
    Stopwatch watch;
    detail::validate_or_throw(cfg);
    std::filesystem::create_directories(out);
    const RunSettings& r = cfg.run;
    const fp::Grid grid{0.0, r.x_max, r.n_cells};
    auto f1 = detail::gamma_field(grid, r.m1_0, r.v1_0);
    auto f2 = detail::gamma_field(grid, r.m2_0, r.v2_0);
    const fp::MeanPath path({0, r.m1_0, r.m2_0}, cfg.params, r.variant, r.t_end + r.dt,
                            0.5 * r.dt);
    const auto run =
        fp::run_coupled(std::move(f1), std::move(f2), cfg.params, r.variant,
                        r.coupling_mode, r.t_end, r.dt, &path,
                        static_cast<int>(r.sample_every));
    {
        io::CsvWriter csv((out / "fp_moments.csv").string());
        csv.header({"t", "m1", "m2", "v1", "v2"});
        for (const auto& s : run.moments) csv.row({s.t, s.m1, s.m2, s.v1, s.v2});
    }
    for (int species = 0; species < 2; ++species) {
        const auto& f = species == 0 ? run.f1 : run.f2;
        io::CsvWriter csv((out / (species == 0 ? "f1.csv" : "f2.csv")).string());
        csv.header({"x", "f"});
        for (int j = 0; j < grid.n; ++j) csv.row({grid.center(j), f.values[j]});
    }
    detail::write_manifest(out, cfg, "fp", seed, watch.seconds());
}

// equilibria: fixed points and quasi-equilibrium density tables.
inline void run_equilibria(const ExperimentConfig& cfg, const std::filesystem::path& out,
                           std::uint64_t seed) {
    Stopwatch watch;
    detail::validate_or_throw(cfg);
    std::filesystem::create_directories(out);
    const RunSettings& r = cfg.run;
    const FixedPoints pts = fixed_points(cfg.params);
    {
        io::CsvWriter csv((out / "fixed_points.csv").string());
        csv.header({"m1_star", "m2_star", "v1_star", "v2_star", "m1_inf", "m2_inf",
                    "v1_inf", "v2_inf"});
        csv.row({pts.m1_star, pts.m2_star, pts.v1_star, pts.v2_star, pts.m1_inf,
                 pts.m2_inf, pts.v1_inf, pts.v2_inf});
    }
    {
        const auto g =
            eq::gamma_params({0, r.m1_0, r.m2_0}, cfg.params, r.variant);
        const fp::Grid grid{0.0, r.x_max, r.n_cells};
        io::CsvWriter csv((out / "equilibrium_densities.csv").string());
        csv.header({"x", "f1_eq", "f2_eq"});
        for (int j = 0; j < grid.n; ++j) {
            const double x = grid.center(j);
            csv.row({x, g.density1(x), g.density2(x)});
        }
    }
    {
        const auto g = eq::global_equilibrium(cfg.params, r.variant);
        const fp::Grid grid{0.0, r.x_max, r.n_cells};
        io::CsvWriter csv((out / "global_equilibrium.csv").string());
        csv.header({"x", "f1", "f2"});
        for (int j = 0; j < grid.n; ++j) {
            const double x = grid.center(j);
            csv.row({x, g.density1(x), g.density2(x)});
        }
    }
    detail::write_manifest(out, cfg, "equilibria", seed, watch.seconds());
}

// figures: presets emitting the CSV inputs of the published plots.
inline void run_figures(const ExperimentConfig& cfg_in, const std::filesystem::path& out,
                        const std::string& preset, std::uint64_t seed) {
    Stopwatch watch;
    ExperimentConfig cfg = cfg_in;
    std::filesystem::create_directories(out);
    const std::vector<std::pair<double, double>> initials = {
        {3.0, 2.0}, {3.5, 2.5}, {4.0, 3.0}, {4.5, 3.5}};
    const double dt = cfg.run.dt;

    if (preset == "fig1") {
        detail::validate_or_throw(cfg);
        io::CsvWriter means((out / "fig1_means.csv").string());
        means.header({"orbit", "t", "m1", "m2"});
        io::CsvWriter eqmeans((out / "fig1_equilibrium_means.csv").string());
        eqmeans.header({"orbit", "t", "m1_eq", "m2_eq"});
        int orbit = 0;
        for (auto [m10, m20] : initials) {
            const auto ob = moments::orbit_bounds({0, m10, m20}, cfg.params);
            const auto path = moments::integrate_means({0, m10, m20}, cfg.params,
                                                       Variant::Malthusian, ob.period, dt);
            for (std::size_t k = 0; k < path.size(); k += 10) {
                means.row({static_cast<double>(orbit), path[k].t, path[k].m1, path[k].m2});
                const auto em =
                    eq::equilibrium_moments(path[k], cfg.params, Variant::Malthusian);
                eqmeans.row({static_cast<double>(orbit), path[k].t, em.m1_eq, em.m2_eq});
            }
            ++orbit;
        }
    } else if (preset == "fig2") {
        detail::validate_or_throw(cfg);
        io::CsvWriter var((out / "fig2_variances.csv").string());
        var.header({"orbit", "t", "v1", "v2"});
        io::CsvWriter eqvar((out / "fig2_equilibrium_variances.csv").string());
        eqvar.header({"orbit", "t", "v1_eq", "v2_eq"});
        int orbit = 0;
        for (auto [m10, m20] : initials) {
            const auto mom =
                moments::integrate_moments({0, m10, m20, cfg.run.v1_0, cfg.run.v2_0},
                                           cfg.params, moments::VarianceVariant::PHalf,
                                           cfg.run.t_end, dt);
            for (std::size_t k = 0; k < mom.size(); k += cfg.run.sample_every) {
                var.row({static_cast<double>(orbit), mom[k].t, mom[k].v1, mom[k].v2});
                const auto em = eq::equilibrium_moments({mom[k].t, mom[k].m1, mom[k].m2},
                                                        cfg.params, Variant::Malthusian);
                eqvar.row({static_cast<double>(orbit), mom[k].t, em.v1_eq, em.v2_eq});
            }
            ++orbit;
        }
    } else if (preset == "fig3" || preset == "fig4") {
        detail::validate_or_throw(cfg);
        const auto mom =
            moments::integrate_moments({0, cfg.run.m1_0, cfg.run.m2_0, cfg.run.v1_0,
                                        cfg.run.v2_0},
                                       cfg.params, moments::VarianceVariant::PHalf,
                                       cfg.run.t_end, dt);
        std::vector<MeanState> means;
        means.reserve(mom.size());
        for (const auto& s : mom) means.push_back({s.t, s.m1, s.m2});
        if (preset == "fig3") {
            const auto ob = moments::orbit_bounds(means.front(), cfg.params);
            const auto gap = diag::mean_gap(means, cfg.params, ob.bounds);
            const auto dist = diag::variance_gap(mom, cfg.params, Variant::Malthusian);
            io::CsvWriter csv((out / "fig3_distances.csv").string());
            csv.header({"t", "d_mean_linf", "d_mean_sum", "d_var_linf", "bound_lower",
                        "bound_upper"});
            for (std::size_t k = 0; k < dist.t.size(); k += cfg.run.sample_every)
                csv.row({dist.t[k], dist.mean_linf[k], dist.mean_sum[k], dist.var_linf[k],
                         gap.lower, gap.upper});
        } else {
            io::CsvWriter csv((out / "fig4_rescaled_variances.csv").string());
            csv.header({"t", "v1", "v2", "v1_tilde_eq", "v2_tilde_eq", "d_var_tilde_linf"});
            for (std::size_t k = 0; k < mom.size(); k += cfg.run.sample_every) {
                const auto r = eq::rescaled_identities({mom[k].t, mom[k].m1, mom[k].m2},
                                                       cfg.params);
                const double d = std::max(std::abs(mom[k].v1 - r.v1_tilde),
                                          std::abs(mom[k].v2 - r.v2_tilde));
                csv.row({mom[k].t, mom[k].v1, mom[k].v2, r.v1_tilde, r.v2_tilde, d});
            }
        }
    } else if (preset == "fig5") {
        if (!cfg.params.K) cfg.params.K = 10.0;
        cfg.run.variant = Variant::Logistic;
        detail::validate_or_throw(cfg);
        const auto mom =
            moments::integrate_moments({0, cfg.run.m1_0, cfg.run.m2_0, cfg.run.v1_0,
                                        cfg.run.v2_0},
                                       cfg.params, moments::VarianceVariant::Logistic,
                                       cfg.run.t_end, dt);
        std::vector<MeanState> means;
        means.reserve(mom.size());
        for (const auto& s : mom) means.push_back({s.t, s.m1, s.m2});
        const auto b = moments::trajectory_bounds(means, cfg.params, Variant::Logistic);
        const auto bound = diag::logistic_gap_bound(means, cfg.params, b);
        const auto dist = diag::variance_gap(mom, cfg.params, Variant::Logistic);
        io::CsvWriter orbits((out / "fig5_orbits.csv").string());
        orbits.header({"t", "m1", "m2", "v1", "v2"});
        io::CsvWriter csv((out / "fig5_distances.csv").string());
        csv.header({"t", "d_mean_linf", "d_mean_sum", "d_var_linf", "bound"});
        for (std::size_t k = 0; k < dist.t.size(); k += cfg.run.sample_every) {
            orbits.row({mom[k].t, mom[k].m1, mom[k].m2, mom[k].v1, mom[k].v2});
            csv.row({dist.t[k], dist.mean_linf[k], dist.mean_sum[k], dist.var_linf[k],
                     bound[k]});
        }
    } else {
        throw ConfigError("unknown preset '" + preset +
                          "' (expected fig1, fig2, fig3, fig4 or fig5)");
    }
    detail::write_manifest(out, cfg, "figures " + preset, seed, watch.seconds());
}

}  // namespace kinlv::runner
