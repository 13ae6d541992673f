#pragma once

#include "rsd/certificates.hpp"
#include "rsd/chain.hpp"
#include "rsd/scenario_io.hpp"
#include "rsd/spectral.hpp"

#include <json.hpp>

#include <map>
#include <optional>

namespace rsd {

/// Scenario fails its semantic checks (exit 3 at the CLI).
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Non-Inconclusive verdicts disagree on the same axis; the criteria are
/// mutually consistent, so this indicates a bug (exit 4 at the CLI).
struct ContradictionError : std::logic_error {
    using std::logic_error::logic_error;
};

struct AnalysisOptions {
    MMatrixMode partition_mode = MMatrixMode::Semipositivity;
    Tolerances tol;
    GridSpec grid;
    std::pair<double, double> stability_annulus{1e-4, 1e-1};
    std::pair<double, double> recurrence_annulus{1.0, 1e3};
    std::vector<double> partition_thresholds;  // empty = sign-split heuristic
};

struct AnalysisReport {
    nlohmann::json scenario_echo;
    std::vector<std::pair<std::string, VerdictResult>> criteria;
    std::string merged_key;  // empty when everything is Inconclusive
    VerdictResult merged;
    std::vector<std::string> assumptions;

    const VerdictResult* find(const std::string& key) const {
        for (const auto& [k, v] : criteria)
            if (k == key) return &v;
        return nullptr;
    }
};

namespace detail {

inline std::vector<Vector> sample_points(int dimension) {
    std::vector<Vector> pts;
    for (const double t : {0.0, 0.5, -0.5, 1.0, 1.5707963267948966, -1.5707963267948966, 2.0,
                           -2.0, 10.0, -10.0}) {
        Vector x = Vector::Zero(dimension);
        x(0) = t;
        pts.push_back(x);
    }
    return pts;
}

inline VerdictResult not_applicable(const std::string& theorem, const std::string& reason) {
    VerdictResult out;
    out.theorem = theorem;
    out.notes.push_back("not applicable: " + reason);
    return out;
}

inline bool is_stability_axis(Verdict v) {
    return v == Verdict::AsymptoticallyStableInProbability ||
           v == Verdict::UnstableInProbability;
}

}  // namespace detail

/// JSON forms of the certificates and verdicts (the report schema).
inline nlohmann::json to_json(const Vector& v) {
    nlohmann::json a = nlohmann::json::array();
    for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

inline nlohmann::json to_json(const Matrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (int i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

inline nlohmann::json to_json(const FredholmCertificate& c) {
    return {{"type", "fredholm"}, {"c", c.c}, {"xi", to_json(c.xi)}, {"residual", c.residual}};
}

inline nlohmann::json to_json(const MMatrixCertificate& c) {
    nlohmann::json j{{"type", "m_matrix"},
                     {"A", to_json(c.A)},
                     {"mode", to_string(c.mode)},
                     {"accepted", c.accepted}};
    if (c.witness.size() > 0) j["witness"] = to_json(c.witness);
    if (!c.leading_minors.empty()) j["leading_minors"] = c.leading_minors;
    if (c.mode == MMatrixMode::Semipositivity) j["lp_optimum"] = c.lp_optimum;
    return j;
}

inline nlohmann::json to_json(const EigenCertificate& c) {
    nlohmann::json j{{"type", "eigenvalue"},
                     {"lambda0", c.lambda0},
                     {"g", to_json(c.g)},
                     {"kind", to_string(c.kind)},
                     {"residual", c.residual}};
    if (c.kind == EigenKind::TestFunctionBound) j["tail_ratio"] = c.tail_ratio;
    if (c.truncation > 0) j["truncation"] = c.truncation;
    return j;
}

inline nlohmann::json to_json(const VerdictResult& r) {
    nlohmann::json j{{"verdict", to_string(r.verdict)},
                     {"theorem", r.theorem},
                     {"certificate", nullptr},
                     {"mode", nullptr},
                     {"notes", r.notes}};
    if (const auto* f = std::get_if<FredholmCertificate>(&r.certificate)) {
        j["certificate"] = to_json(*f);
        j["weighted_beta"] = r.weighted_beta;
    } else if (const auto* m = std::get_if<MMatrixCertificate>(&r.certificate)) {
        j["certificate"] = to_json(*m);
        j["mode"] = to_string(m->mode);
    } else if (const auto* e = std::get_if<EigenCertificate>(&r.certificate)) {
        j["certificate"] = to_json(*e);
        j["lambda"] = e->lambda0;
    }
    if (r.theorem == "thm_2_1" || r.theorem == "thm_2_3") j["weighted_beta"] = r.weighted_beta;
    return j;
}

inline nlohmann::json to_json(const AnalysisReport& report) {
    nlohmann::json criteria = nlohmann::json::object();
    for (const auto& [key, v] : report.criteria) criteria[key] = to_json(v);
    nlohmann::json merged = nullptr;
    if (!report.merged_key.empty()) {
        merged = to_json(report.merged);
        merged["criterion"] = report.merged_key;
    }
    return {{"scenario", report.scenario_echo},
            {"criteria", criteria},
            {"merged", merged},
            {"assumptions", report.assumptions}};
}

/// Runs every criterion whose structural preconditions the scenario
/// meets, merges by priority, and aborts on contradictory certificates.
inline AnalysisReport analyze(const Scenario& sc, const AnalysisOptions& opt = {}) {
    const ScenarioModel& model = sc.model;
    const int n = model.regimes.count;
    const bool truncated = model.regimes.truncated();
    const bool state_dep = model.generator.state_dependent;

    AnalysisReport report;
    report.scenario_echo = sc.raw;

    const auto points = detail::sample_points(model.dimension);
    const auto validation = validate_generator(model.generator, points, opt.tol);
    if (!validation.pass) throw ValidationError(validation.message);

    const bool equilibrium = !model.equilibrium_violation().has_value();
    if (!equilibrium)
        report.assumptions.push_back(
            "b(0,i) or sigma(0,i) nonzero: no equilibrium at 0, stability criteria skipped");
    if (truncated)
        report.assumptions.push_back("countable regime space handled on a reflecting truncation "
                                     "(N_trunc = " + std::to_string(n) + ")");

    std::optional<Matrix> Q;
    if (!state_dep) Q = model.generator.matrix_at(Vector::Zero(model.dimension));

    // Rate extraction. Declared rates take precedence for their own mode;
    // everything else is estimated on the default grids.
    auto rates_for = [&](RateMode mode,
                         std::pair<double, double> annulus) -> std::optional<RateVector> {
        if (sc.declared_rates && sc.declared_rates->mode == mode) return sc.declared_rates;
        try {
            return extract_rates(model, sc.rho, mode, annulus, opt.grid);
        } catch (const std::exception&) {
            return std::nullopt;
        }
    };
    std::optional<RateVector> beta_bar, gamma_stab, gamma_rec;
    if (equilibrium) {
        beta_bar = rates_for(RateMode::A2, opt.stability_annulus);
        gamma_stab = rates_for(RateMode::A3, opt.stability_annulus);
    }
    gamma_rec = rates_for(RateMode::A4, opt.recurrence_annulus);
    if ((beta_bar && beta_bar->provenance == RateProvenance::NumericallyEstimated) ||
        (gamma_stab && gamma_stab->provenance == RateProvenance::NumericallyEstimated) ||
        (gamma_rec && gamma_rec->provenance == RateProvenance::NumericallyEstimated))
        report.assumptions.push_back(
            "rates estimated as the sup of L rho / rho over a finite grid; they bound the "
            "quotient on the grid only");

    auto push = [&](const std::string& key, VerdictResult v) {
        report.criteria.emplace_back(key, std::move(v));
    };

    // Averaged-rate criterion (finite constant chain, equilibrium).
    if (!equilibrium) {
        push("thm_2_1", detail::not_applicable("thm_2_1", "no equilibrium at 0"));
    } else if (!Q || truncated) {
        push("thm_2_1", detail::not_applicable(
                            "thm_2_1", "needs a finite state-independent switching chain"));
    } else if (sc.power_clipped) {
        const auto& pc = *sc.power_clipped;
        try {
            auto [beta, beta_tilde] =
                sphere_rates(model.drift, model.diffusion, pc.gamma, pc.zeta, model.dimension, n,
                             opt.grid.sphere_hint);
            RateVector a1;
            if (sc.declared_rates && sc.declared_rates->mode == RateMode::A1) {
                a1 = *sc.declared_rates;  // declared rates win over sphere extraction
            } else {
                a1.mode = RateMode::A1;
                a1.rates = beta;
                a1.companion_h = TestFunctionSpec::power_norm(pc.gamma + sc.rho.power - 1.0);
            }
            push("thm_2_1", verdict_fredholm(*Q, a1, sc.rho, opt.tol));
            push("thm_2_3", verdict_nonlinear(stationary_distribution(*Q, opt.tol), beta,
                                              beta_tilde));
        } catch (const std::exception& e) {
            push("thm_2_1", detail::not_applicable("thm_2_1", e.what()));
            push("thm_2_3", detail::not_applicable("thm_2_3", e.what()));
        }
    } else if (beta_bar) {
        push("thm_2_1", verdict_fredholm(*Q, *beta_bar, sc.rho, opt.tol));
    } else {
        push("thm_2_1", detail::not_applicable("thm_2_1", "no usable rates"));
    }
    if (!report.find("thm_2_3"))
        push("thm_2_3", detail::not_applicable(
                            "thm_2_3", "drift/diffusion are not in the scaled-coefficient class"));

    // Direct M-matrix criterion (finite constant chain, equilibrium).
    if (!equilibrium) {
        push("thm_2_2", detail::not_applicable("thm_2_2", "no equilibrium at 0"));
    } else if (!Q || truncated) {
        push("thm_2_2", detail::not_applicable(
                            "thm_2_2", "needs a finite state-independent switching chain"));
    } else if (beta_bar) {
        push("thm_2_2", verdict_mmatrix(*Q, beta_bar->rates, sc.rho, opt.tol));
    } else {
        push("thm_2_2", detail::not_applicable("thm_2_2", "no usable rates"));
    }

    // Finite-partition criterion (countable or state-dependent chains).
    if (!equilibrium) {
        push("thm_2_4", detail::not_applicable("thm_2_4", "no equilibrium at 0"));
    } else if (!truncated && !state_dep) {
        push("thm_2_4",
             detail::not_applicable("thm_2_4", "finite constant chain: thm_2_2 applies directly"));
    } else if (beta_bar) {
        try {
            std::vector<double> thr = opt.partition_thresholds;
            if (thr.empty()) {
                const double lo = beta_bar->rates.minCoeff();
                const double hi = beta_bar->rates.maxCoeff();
                if (lo < 0.0 && hi > 0.0) thr = {0.0, hi};
                else thr = {hi};
            }
            auto agg = build_partition(beta_bar->rates, thr);
            agg = aggregate_generator(model.generator, agg, points, n);
            push("thm_2_4", verdict_partition(agg, sc.rho, opt.partition_mode, opt.tol));
        } catch (const std::exception& e) {
            push("thm_2_4", detail::not_applicable("thm_2_4", e.what()));
        }
    } else {
        push("thm_2_4", detail::not_applicable("thm_2_4", "no usable rates"));
    }

    // Spectral criteria need a reversible state-independent chain.
    const std::string stab_key = truncated ? "thm_3_2" : "thm_3_1";
    const std::string rec_key = truncated ? "thm_4_2" : "thm_4_1";
    std::optional<Vector> pi;
    if (Q) pi = reversing_measure(*Q, opt.tol);

    auto spectral_cert = [&](const Vector& gamma) -> std::optional<EigenCertificate> {
        try {
            if (truncated) {
                Vector g(n);
                for (int i = 0; i < n; ++i) g(i) = i + 1.0;
                return test_function_bound(g, *Q, gamma, n);
            }
            return principal_eigenvalue_finite(*pi, *Q, gamma, opt.tol);
        } catch (const std::exception&) {
            return std::nullopt;
        }
    };

    if (!Q || !pi) {
        const std::string why =
            !Q ? "state-dependent switching chain" : "switching chain is not reversible";
        push(stab_key, detail::not_applicable(stab_key, why));
        push(rec_key, detail::not_applicable(rec_key, why));
    } else {
        if (!equilibrium) {
            push(stab_key, detail::not_applicable(stab_key, "no equilibrium at 0"));
        } else if (gamma_stab) {
            if (auto cert = spectral_cert(gamma_stab->rates)) {
                if (truncated)
                    report.assumptions.push_back(
                        "spectral stability uses the default test function g_i = i + 1 on the "
                        "truncation");
                push(stab_key,
                     verdict_spectral_stability(*cert, sc.rho, model.regimes, opt.tol));
            } else {
                push(stab_key, detail::not_applicable(stab_key, "eigen solve failed"));
            }
        } else {
            push(stab_key, detail::not_applicable(stab_key, "no usable rates"));
        }
        if (gamma_rec) {
            if (auto cert = spectral_cert(gamma_rec->rates)) {
                push(rec_key,
                     verdict_spectral_recurrence(*cert, sc.rho, model.regimes, opt.tol));
            } else {
                push(rec_key, detail::not_applicable(rec_key, "eigen solve failed"));
            }
        } else {
            push(rec_key, detail::not_applicable(rec_key, "no usable rates"));
        }
    }

    // Contradiction check per axis, then merge by certificate strength.
    bool stable = false, unstable = false, recur = false, trans = false;
    for (const auto& [key, v] : report.criteria) {
        switch (v.verdict) {
        case Verdict::AsymptoticallyStableInProbability: stable = true; break;
        case Verdict::UnstableInProbability: unstable = true; break;
        case Verdict::PositiveRecurrent:
        case Verdict::Recurrent: recur = true; break;
        case Verdict::Transient: trans = true; break;
        default: break;
        }
    }
    if ((stable && unstable) || (recur && trans))
        throw ContradictionError(
            "contradictory certificates on the same axis: this indicates a bug in the "
            "toolkit or an invalid scenario, since the criteria are mutually consistent");

    static const std::vector<std::string> priority = {"thm_3_1", "thm_4_1", "thm_2_2",
                                                      "thm_2_1", "thm_2_3", "thm_2_4",
                                                      "thm_3_2", "thm_4_2"};
    for (const auto& key : priority) {
        const VerdictResult* v = report.find(key);
        if (v && v->verdict != Verdict::Inconclusive) {
            report.merged_key = key;
            report.merged = *v;
            break;
        }
    }
    return report;
}

}  // namespace rsd
