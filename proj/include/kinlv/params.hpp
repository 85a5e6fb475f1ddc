#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace kinlv {

// Reference group sizes. Fixed to one; the interaction rules are written
// against these units and nothing in the artifact needs them exposed.
inline constexpr double kXBar = 1.0;
inline constexpr double kYBar = 1.0;

enum class Variant { Malthusian, Logistic };

// All model constants shared by the particle, Fokker-Planck and moment
// layers. delta is never stored: it only exists through gamma*mu - nu.
struct ModelParams {
    double alpha = 1.0;          // prey growth rate (> 0)
    double beta = 0.5;           // max predation fraction per interaction, in (0,1)
    double gamma = 0.15;         // max predator growth rate, in (0,1)
    double mu = 10.0;            // minimal prey group inducing predator growth (>= 1)
    double nu = 1.0;             // predator birth/redistribution rate (> 0)
    double sigma1 = 1e-3;        // prey diffusion constant (> 0)
    double sigma2 = 1e-3;        // predator diffusion constant (> 0)
    double chi = 0.0;            // prey redistribution shape (> -1)
    double theta = 0.0;          // predator redistribution shape (> -1)
    double p = 0.5;              // noise exponent, 1/2 or 1
    double s0 = 0.5;             // positivity cutoff, in (0,1)
    std::optional<double> K;     // prey carrying capacity (logistic variant only)

    double delta() const { return gamma * mu - nu; }

    static ModelParams table1() { return ModelParams{}; }

    // Canonical serialization; feeds the run-manifest hash, so field order
    // and formatting are fixed.
    std::string canonical() const;
    std::uint64_t hash() const;
};

// Orbit-derived constants used by the chi/theta admissibility conditions and
// by the gap estimates: c1/c2 bracket the two means, c0 brackets the
// sup-norm distance to the center, and zeta1/zeta2 are the drift lower
// bounds built from them.
struct AdmissibleBounds {
    double c1_lo = 0, c1_hi = 0;
    double c2_lo = 0, c2_hi = 0;
    double c0_lo = 0, c0_hi = 0;
    double zeta1 = 0, zeta2 = 0;
};

struct ValidationIssue {
    std::string name;
    std::string message;
};

struct ValidationReport {
    std::vector<ValidationIssue> violations;
    std::vector<std::string> deferred;  // checks that need orbit bounds

    bool admissible() const { return violations.empty(); }

    std::string summary() const {
        if (violations.empty() && deferred.empty()) return "ok";
        std::ostringstream os;
        for (const auto& v : violations) os << v.name << ": " << v.message << "\n";
        for (const auto& d : deferred) os << d << ": deferred (orbit bounds unavailable)\n";
        return os.str();
    }
};

namespace detail {

inline std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

}  // namespace detail

inline std::string ModelParams::canonical() const {
    std::ostringstream os;
    os << "alpha=" << detail::fmt(alpha) << ";beta=" << detail::fmt(beta)
       << ";gamma=" << detail::fmt(gamma) << ";mu=" << detail::fmt(mu)
       << ";nu=" << detail::fmt(nu) << ";sigma1=" << detail::fmt(sigma1)
       << ";sigma2=" << detail::fmt(sigma2) << ";chi=" << detail::fmt(chi)
       << ";theta=" << detail::fmt(theta) << ";p=" << detail::fmt(p)
       << ";s0=" << detail::fmt(s0);
    if (K) os << ";K=" << detail::fmt(*K);
    return os.str();
}

inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::uint64_t ModelParams::hash() const { return fnv1a(canonical()); }

// Validates the constant-level constraints. Checks that depend on the
// trajectory (the chi/theta inequalities) are reported as deferred unless
// orbit bounds are supplied. Never throws: callers decide what a violation
// costs them.
inline ValidationReport validate(const ModelParams& p, Variant variant,
                                 const AdmissibleBounds* bounds = nullptr) {
    ValidationReport rep;
    auto fail = [&rep](const std::string& name, const std::string& msg) {
        rep.violations.push_back({name, msg});
    };

    if (!(p.alpha > 0)) fail("alpha_positive", "alpha = " + detail::fmt(p.alpha) + " must be > 0");
    if (!(p.beta > 0 && p.beta < 1)) fail("beta_range", "beta = " + detail::fmt(p.beta) + " must lie in (0,1)");
    if (!(p.gamma > 0 && p.gamma < 1)) fail("gamma_range", "gamma = " + detail::fmt(p.gamma) + " must lie in (0,1)");
    if (!(p.mu >= 1)) fail("mu_range", "mu = " + detail::fmt(p.mu) + " must be >= 1");
    if (!(p.nu > 0)) fail("nu_positive", "nu = " + detail::fmt(p.nu) + " must be > 0");
    if (!(p.sigma1 > 0)) fail("sigma1_positive", "sigma1 must be > 0");
    if (!(p.sigma2 > 0)) fail("sigma2_positive", "sigma2 must be > 0");
    if (!(p.chi > -1)) fail("chi_range", "chi = " + detail::fmt(p.chi) + " must be > -1");
    if (!(p.theta > -1)) fail("theta_range", "theta = " + detail::fmt(p.theta) + " must be > -1");
    if (!(p.alpha * p.chi < 1)) fail("alpha_chi", "alpha*chi = " + detail::fmt(p.alpha * p.chi) + " must be < 1");
    if (!(p.nu * p.theta < 1)) fail("nu_theta", "nu*theta = " + detail::fmt(p.nu * p.theta) + " must be < 1");
    if (!(p.p == 0.5 || p.p == 1.0)) fail("p_value", "p = " + detail::fmt(p.p) + " must be 1/2 or 1");
    if (!(p.s0 > 0 && p.s0 < 1)) fail("s0_range", "s0 = " + detail::fmt(p.s0) + " must lie in (0,1)");

    const double gm = p.gamma * p.mu;
    if (!(gm > p.nu)) {
        fail("delta_positive", "gamma*mu = " + detail::fmt(gm) + " must exceed nu = " +
                                   detail::fmt(p.nu) + " (delta = gamma*mu - nu > 0)");
    }
    // Per-interaction predator loss fraction must stay below one, otherwise a
    // single unscaled interaction round can annihilate the mean predator
    // population: gamma*mu - nu < 1.
    if (!(gm < 1.0 + p.nu)) {
        fail("delta_below_one", "gamma*mu = " + detail::fmt(gm) + " >= 1 + nu = " +
                                    detail::fmt(1.0 + p.nu) + " (delta must be < 1)");
    }

    if (variant == Variant::Logistic) {
        if (!p.K) {
            fail("K_missing", "logistic variant requires a carrying capacity K");
        } else {
            if (!(*p.K > 0)) fail("K_positive", "K = " + detail::fmt(*p.K) + " must be > 0");
            if (!(p.alpha / *p.K < 1)) fail("alpha_over_K", "alpha/K = " + detail::fmt(p.alpha / *p.K) + " must be < 1");
            if (!(p.gamma * *p.K - p.delta() > 0))
                fail("coexistence", "gamma*K - delta = " + detail::fmt(p.gamma * *p.K - p.delta()) +
                                        " must be > 0 for a coexistence equilibrium");
        }
    }

    // chi/theta admissibility relative to the orbit of the means.
    if (bounds == nullptr) {
        rep.deferred.push_back("chi_admissible");
        rep.deferred.push_back("theta_admissible");
    } else {
        double chi_floor = -(p.beta / p.alpha) * bounds->c2_lo;
        if (variant == Variant::Logistic && p.K) chi_floor -= bounds->c1_lo / *p.K;
        if (!(p.chi > std::max(-1.0, chi_floor)))
            fail("chi_admissible", "chi = " + detail::fmt(p.chi) + " must exceed " +
                                       detail::fmt(std::max(-1.0, chi_floor)));
        const double theta_floor = -(p.gamma / p.nu) * (p.mu - bounds->c1_hi);
        if (!(p.theta > std::max(-1.0, theta_floor)))
            fail("theta_admissible", "theta = " + detail::fmt(p.theta) + " must exceed " +
                                         detail::fmt(std::max(-1.0, theta_floor)));
    }
    return rep;
}

// --- key=value configuration parsing -------------------------------------

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Parses "key = value" lines; '#' starts a comment, blank lines are skipped.
inline std::map<std::string, std::string> parse_key_values(std::istream& in) {
    std::map<std::string, std::string> kv;
    std::string line;
    int lineno = 0;
    auto trim = [](std::string s) {
        const char* ws = " \t\r\n";
        auto b = s.find_first_not_of(ws);
        auto e = s.find_last_not_of(ws);
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key=value");
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        if (key.empty() || val.empty())
            throw ConfigError("line " + std::to_string(lineno) + ": empty key or value");
        if (kv.count(key)) throw ConfigError("duplicate key '" + key + "'");
        kv[key] = val;
    }
    return kv;
}

inline double parse_double(const std::string& key, const std::string& val) {
    try {
        std::size_t pos = 0;
        double x = std::stod(val, &pos);
        if (pos != val.size()) throw std::invalid_argument(val);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': cannot parse '" + val + "' as a number");
    }
}

// Builds ModelParams from parsed key=value pairs, consuming the recognized
// keys from `kv` (so a caller can layer run settings on the same file).
// Missing keys keep their Table 1 defaults; `delta` is rejected because it
// is derived.
inline ModelParams params_from_map(std::map<std::string, std::string>& kv) {
    ModelParams p;
    auto take = [&kv](const char* key, double& slot) {
        auto it = kv.find(key);
        if (it != kv.end()) {
            slot = parse_double(key, it->second);
            kv.erase(it);
        }
    };
    if (kv.count("delta"))
        throw ConfigError("'delta' is derived as gamma*mu - nu and cannot be set");
    take("alpha", p.alpha);
    take("beta", p.beta);
    take("gamma", p.gamma);
    take("mu", p.mu);
    take("nu", p.nu);
    take("sigma1", p.sigma1);
    take("sigma2", p.sigma2);
    take("chi", p.chi);
    take("theta", p.theta);
    take("p", p.p);
    take("s0", p.s0);
    if (auto it = kv.find("K"); it != kv.end()) {
        p.K = parse_double("K", it->second);
        kv.erase(it);
    }
    return p;
}

// Strict parse of a parameter-only file: every key must be a ModelParams
// field.
inline ModelParams parse_params_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    auto kv = parse_key_values(in);
    ModelParams p = params_from_map(kv);
    if (!kv.empty()) throw ConfigError("unknown key '" + kv.begin()->first + "'");
    return p;
}

}  // namespace kinlv
