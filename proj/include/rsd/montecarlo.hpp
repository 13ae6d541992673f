#pragma once

#include "rsd/chain.hpp"
#include "rsd/common.hpp"
#include "rsd/scenario.hpp"

#include <cstdint>
#include <optional>
#include <thread>

namespace rsd {

namespace detail {

/// Counter-based per-path random stream: splitmix64 over a state derived
/// from (base_seed, path_index). Gaussians via Box-Muller so draws are
/// bitwise-stable across standard library implementations.
class PathRng {
  public:
    PathRng(std::uint64_t base_seed, std::uint64_t path_index)
        : state_(mix(mix(base_seed) ^ mix(path_index + 0x9e3779b97f4a7c15ull))) {}

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ull;
        return mix(state_);
    }

    /// Uniform in (0, 1); never returns 0 (safe for logs).
    double next_uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    double next_gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = next_uniform();
        const double u2 = next_uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double th = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(th);
        have_spare_ = true;
        return r * std::cos(th);
    }

  private:
    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ull;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }
    std::uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace detail

enum class SwitchingScheme { FrozenRateExponential, PerStepBernoulli };

inline std::string to_string(SwitchingScheme s) {
    return s == SwitchingScheme::FrozenRateExponential ? "frozen_rate_exponential"
                                                       : "per_step_bernoulli";
}

struct SimConfig {
    double dt = 1e-3;
    double horizon = 1.0;  // T
    int n_paths = 1000;
    std::uint64_t base_seed = 0;
    SwitchingScheme scheme = SwitchingScheme::FrozenRateExponential;
    int workers = 0;                   // 0 = hardware concurrency
    double explosion_guard = 1e12;     // |x| above this aborts the path

    void validate() const {
        if (!(dt > 0.0) || !(horizon > 0.0) || dt > horizon)
            throw std::invalid_argument("SimConfig: need 0 < dt <= T");
        if (n_paths < 1) throw std::invalid_argument("SimConfig: need n_paths >= 1");
    }
};

struct PathSample {
    std::vector<double> times;
    std::vector<Vector> states;
    std::vector<int> regimes;
    std::uint64_t seed = 0;
    std::optional<int> exploded_at;  // step index of the explosion guard
};

namespace detail {

/// One Euler-Maruyama step with the configured switching scheme. The
/// switching rates are frozen at the step-start state; the clock scheme
/// samples the jump target at the post-step state. Returns false when the
/// explosion guard fires.
template <typename Observer>
bool run_path(const ScenarioModel& model, const Vector& x0, int i0, const SimConfig& cfg,
              std::uint64_t path_index, Observer&& observe) {
    PathRng rng(cfg.base_seed, path_index);
    const int d = model.dimension;
    const int steps = static_cast<int>(std::llround(cfg.horizon / cfg.dt));
    const double sqrt_dt = std::sqrt(cfg.dt);

    Vector x = x0;
    int regime = i0;
    Vector noise(d);
    observe(0, 0.0, x, regime);
    for (int step = 1; step <= steps; ++step) {
        const double q_total = model.generator.total_rate(x, regime);
        if (cfg.scheme == SwitchingScheme::PerStepBernoulli && q_total * cfg.dt > 1.0)
            throw std::runtime_error(
                "simulate: dt * q exceeds 1 in the per-step Bernoulli scheme");

        for (int k = 0; k < d; ++k) noise(k) = rng.next_gaussian();
        const Vector b = model.drift(x, regime);
        const Matrix s = model.diffusion(x, regime);
        x = x + b * cfg.dt + s * (sqrt_dt * noise);

        if (!x.allFinite() || x.norm() > cfg.explosion_guard) {
            observe(step, step * cfg.dt, x, regime);
            return false;
        }

        const double u = rng.next_uniform();
        if (q_total > 0.0) {
            if (cfg.scheme == SwitchingScheme::FrozenRateExponential) {
                const double clock = -std::log(u) / q_total;
                if (clock < cfg.dt) {
                    const double q_here = model.generator.total_rate(x, regime);
                    if (q_here > 0.0)
                        regime = sample_next_regime(model.generator, x, regime,
                                                    rng.next_uniform() * q_here);
                }
            } else {
                if (u < q_total * cfg.dt)
                    regime = sample_next_regime(model.generator, x, regime, u / cfg.dt);
            }
        }
        observe(step, step * cfg.dt, x, regime);
    }
    return true;
}

}  // namespace detail

inline PathSample simulate_path(const ScenarioModel& model, const Vector& x0, int i0,
                                const SimConfig& cfg, std::uint64_t path_index) {
    cfg.validate();
    PathSample sample;
    sample.seed = cfg.base_seed;
    const bool ok = detail::run_path(model, x0, i0, cfg, path_index,
                                     [&](int step, double t, const Vector& x, int regime) {
                                         sample.times.push_back(t);
                                         sample.states.push_back(x);
                                         sample.regimes.push_back(regime);
                                         (void)step;
                                     });
    if (!ok) sample.exploded_at = static_cast<int>(sample.times.size()) - 1;
    return sample;
}

struct MCEstimate {
    double p_hat = 0.0;
    double ci_low = 0.0, ci_high = 1.0;  // Wilson, 95%
    int n_paths = 0;
    int n_errors = 0;  // paths aborted by the explosion guard
    SimConfig config;
};

namespace detail {

inline void wilson_interval(double p, int n, double& lo, double& hi) {
    const double z = 1.959963984540054;  // 97.5% normal quantile
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = (p + z2 / (2.0 * n)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    lo = std::max(0.0, center - half);
    hi = std::min(1.0, center + half);
}

/// Runs `per_path(path_index) -> double` over all paths on the configured
/// worker count. Results land in a vector indexed by path, then are
/// reduced sequentially, so the estimate does not depend on scheduling.
template <typename PerPath>
std::vector<double> map_paths(const SimConfig& cfg, PerPath&& per_path) {
    std::vector<double> results(cfg.n_paths);
    int workers = cfg.workers > 0 ? cfg.workers
                                  : static_cast<int>(std::thread::hardware_concurrency());
    workers = std::max(1, std::min(workers, cfg.n_paths));
    if (workers == 1) {
        for (int p = 0; p < cfg.n_paths; ++p) results[p] = per_path(p);
        return results;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w]() {
            for (int p = w; p < cfg.n_paths; p += workers) results[p] = per_path(p);
        });
    }
    for (auto& t : pool) t.join();
    return results;
}

inline MCEstimate indicator_estimate(const SimConfig& cfg, const std::vector<double>& flags) {
    MCEstimate est;
    est.config = cfg;
    est.n_paths = cfg.n_paths;
    // Each flag encodes outcome in {0,1} plus 2 when the path errored.
    double sum = 0.0;
    for (const double f : flags) {
        if (f >= 2.0) ++est.n_errors;
        sum += f >= 2.0 ? f - 2.0 : f;
    }
    est.p_hat = sum / cfg.n_paths;
    wilson_interval(est.p_hat, cfg.n_paths, est.ci_low, est.ci_high);
    return est;
}

}  // namespace detail

/// P(sup_{t <= T} |X_t| > eps), a horizon-truncated lower bound of the
/// sup-over-all-time exceedance probability in the stability definition.
/// Exploded paths count as exceedances and are reported separately.
inline MCEstimate estimate_sup_exceedance(const ScenarioModel& model, const Vector& x0, int i0,
                                          double eps, const SimConfig& cfg) {
    cfg.validate();
    if (!(eps > x0.norm()))
        throw std::invalid_argument("estimate_sup_exceedance: need eps > |x0|");
    const auto flags = detail::map_paths(cfg, [&](int p) {
        bool exceeded = false;
        const bool ok = detail::run_path(model, x0, i0, cfg, p,
                                         [&](int, double, const Vector& x, int) {
                                             if (x.norm() > eps) exceeded = true;
                                         });
        if (!ok) return 3.0;  // explosion: counted as exceedance, flagged as error
        return exceeded ? 1.0 : 0.0;
    });
    return detail::indicator_estimate(cfg, flags);
}

/// P(|X_T| < delta), the horizon proxy for X_t -> 0.
inline MCEstimate estimate_convergence(const ScenarioModel& model, const Vector& x0, int i0,
                                       double delta, const SimConfig& cfg) {
    cfg.validate();
    if (!(delta > 0.0)) throw std::invalid_argument("estimate_convergence: need delta > 0");
    const auto flags = detail::map_paths(cfg, [&](int p) {
        double final_norm = x0.norm();
        const bool ok = detail::run_path(model, x0, i0, cfg, p,
                                         [&](int, double, const Vector& x, int) {
                                             final_norm = x.norm();
                                         });
        if (!ok) return 2.0;  // explosion: certainly not converged
        return final_norm < delta ? 1.0 : 0.0;
    });
    return detail::indicator_estimate(cfg, flags);
}

/// P(hit {|x| <= r0} x {regime < m0} before T), the recurrence proxy.
/// m0 counts the low regimes kept in the compact set (0-based indices
/// 0..m0-1).
inline MCEstimate estimate_return_probability(const ScenarioModel& model, const Vector& x0, int i0,
                                              double r0, int m0, const SimConfig& cfg) {
    cfg.validate();
    if (!(x0.norm() > r0))
        throw std::invalid_argument("estimate_return_probability: need |x0| > r0");
    const auto flags = detail::map_paths(cfg, [&](int p) {
        bool hit = false;
        const bool ok = detail::run_path(model, x0, i0, cfg, p,
                                         [&](int, double, const Vector& x, int regime) {
                                             if (x.norm() <= r0 && regime < m0) hit = true;
                                         });
        if (!ok) return hit ? 3.0 : 2.0;
        return hit ? 1.0 : 0.0;
    });
    return detail::indicator_estimate(cfg, flags);
}

struct MomentGrowth {
    double slope = 0.0;      // d/dt log E|X_t|^p
    double intercept = 0.0;  // should scale as p * log|x0|
    std::vector<double> times;
    std::vector<double> log_moments;
    int n_errors = 0;
};

/// Least-squares fit of log E|X_t|^p against t over the time grid.
inline MomentGrowth moment_growth_check(const ScenarioModel& model, double p, const Vector& x0,
                                        int i0, const std::vector<double>& time_grid,
                                        const SimConfig& cfg) {
    cfg.validate();
    if (p == 0.0) throw std::invalid_argument("moment_growth_check: need p != 0");
    if (x0.norm() == 0.0) throw std::invalid_argument("moment_growth_check: need x0 != 0");
    if (time_grid.empty()) throw std::invalid_argument("moment_growth_check: empty time grid");

    // Snap grid times to step indices.
    std::vector<int> grid_steps;
    for (const double t : time_grid)
        grid_steps.push_back(static_cast<int>(std::llround(t / cfg.dt)));

    const size_t g = grid_steps.size();
    std::vector<std::vector<double>> per_path(cfg.n_paths);
    int n_errors = 0;
    const auto flags = detail::map_paths(cfg, [&](int pi) {
        std::vector<double> vals(g, std::numeric_limits<double>::quiet_NaN());
        const bool ok = detail::run_path(model, x0, i0, cfg, pi,
                                         [&](int step, double, const Vector& x, int) {
                                             for (size_t k = 0; k < g; ++k)
                                                 if (grid_steps[k] == step)
                                                     vals[k] = std::pow(x.norm(), p);
                                         });
        per_path[pi] = std::move(vals);
        return ok ? 0.0 : 1.0;
    });
    for (const double f : flags) n_errors += f > 0.0 ? 1 : 0;
    if (n_errors == cfg.n_paths)
        throw std::runtime_error("moment_growth_check: every path exploded");

    MomentGrowth out;
    out.n_errors = n_errors;
    for (size_t k = 0; k < g; ++k) {
        double sum = 0.0;
        int count = 0;
        for (int pi = 0; pi < cfg.n_paths; ++pi) {
            const double v = per_path[pi][k];
            if (std::isfinite(v)) {
                sum += v;
                ++count;
            }
        }
        if (count == 0) continue;
        out.times.push_back(grid_steps[k] * cfg.dt);
        out.log_moments.push_back(std::log(sum / count));
    }
    // OLS fit.
    const size_t n = out.times.size();
    if (n == 1) {
        out.slope = 0.0;
        out.intercept = out.log_moments[0];
        return out;
    }
    double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
    for (size_t k = 0; k < n; ++k) {
        st += out.times[k];
        sy += out.log_moments[k];
        stt += out.times[k] * out.times[k];
        sty += out.times[k] * out.log_moments[k];
    }
    const double denom = n * stt - st * st;
    out.slope = denom != 0.0 ? (n * sty - st * sy) / denom : 0.0;
    out.intercept = (sy - out.slope * st) / n;
    return out;
}

}  // namespace rsd
