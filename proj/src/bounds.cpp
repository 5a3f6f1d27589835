#include "miirl/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace miirl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double log_sum_exp2(double a, double b) {
    double m = std::max(a, b);
    if (m == -kInf) return -kInf;
    return m + std::log(std::exp(a - m) + std::exp(b - m));
}

}  // namespace

double separation_margin(const Eigen::VectorXd& probe, const Eigen::MatrixXd& set_a,
                         const Eigen::MatrixXd& set_b) {
    if (set_a.rows() == 0 || set_b.rows() == 0)
        throw ValidationError("separation_margin: empty point set");
    if (set_a.cols() != probe.size() || set_b.cols() != probe.size())
        throw ValidationError("separation_margin: dimension mismatch");
    Eigen::VectorXd pa = set_a * probe;
    Eigen::VectorXd pb = set_b * probe;
    return pa.minCoeff() - pb.maxCoeff();
}

double mean_intercluster_margin(const Eigen::MatrixXd& features,
                                const std::vector<int>& intent_labels) {
    if (features.rows() != static_cast<long>(intent_labels.size()))
        throw ValidationError("mean_intercluster_margin: label count mismatch");
    int k = 0;
    for (int l : intent_labels) k = std::max(k, l + 1);
    if (k < 2) throw ValidationError("mean_intercluster_margin: need at least two intents");
    std::vector<std::vector<long>> by_intent(static_cast<std::size_t>(k));
    for (long i = 0; i < features.rows(); ++i)
        by_intent[static_cast<std::size_t>(intent_labels[static_cast<std::size_t>(i)])].push_back(i);
    double total = 0.0;
    int pairs = 0;
    for (int a = 0; a < k; ++a)
        for (int b = a + 1; b < k; ++b) {
            if (by_intent[static_cast<std::size_t>(a)].empty() ||
                by_intent[static_cast<std::size_t>(b)].empty())
                continue;
            double best = kInf;
            for (long i : by_intent[static_cast<std::size_t>(a)])
                for (long j : by_intent[static_cast<std::size_t>(b)])
                    best = std::min(best, (features.row(i) - features.row(j)).norm());
            total += best;
            ++pairs;
        }
    if (pairs == 0) throw ValidationError("mean_intercluster_margin: no populated intent pair");
    return total / pairs;
}

namespace {

struct IntentSets {
    std::vector<long> typical;
    std::vector<long> atypical;
};

Eigen::MatrixXd gather(const Eigen::MatrixXd& features, const std::vector<long>& rows) {
    Eigen::MatrixXd out(static_cast<long>(rows.size()), features.cols());
    for (std::size_t i = 0; i < rows.size(); ++i)
        out.row(static_cast<long>(i)) = features.row(rows[i]);
    return out;
}

Eigen::MatrixXd vstack(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    if (a.rows() == 0) return b;
    if (b.rows() == 0) return a;
    Eigen::MatrixXd out(a.rows() + b.rows(), a.cols());
    out.topRows(a.rows()) = a;
    out.bottomRows(b.rows()) = b;
    return out;
}

// Minimum over probes (rows of probe_set) of separation_margin(probe, A, B).
double min_margin_over_probes(const Eigen::MatrixXd& probe_set, const Eigen::MatrixXd& set_a,
                              const Eigen::MatrixXd& set_b) {
    double worst = kInf;
    for (long p = 0; p < probe_set.rows(); ++p)
        worst = std::min(worst,
                         separation_margin(probe_set.row(p).transpose(), set_a, set_b));
    return worst;
}

}  // namespace

SeparationReport assess_assumptions(const Eigen::MatrixXd& features,
                                    const std::vector<int>& intent_labels,
                                    const TypicalSplit& split,
                                    std::vector<int> cluster_assignments,
                                    const Eigen::VectorXd& exact_q_masses, double total_q_mass,
                                    const Eigen::MatrixXd& extra_features) {
    const long n = features.rows();
    if (n == 0) throw ValidationError("assess_assumptions: empty feature set");
    if (static_cast<long>(intent_labels.size()) != n)
        throw ValidationError("assess_assumptions: label count mismatch");
    if (!(split.atypical_fraction >= 0.0 && split.atypical_fraction < 0.5))
        throw ValidationError("assess_assumptions: atypical_fraction must lie in [0, 0.5)");
    int k = 0;
    for (int l : intent_labels) {
        if (l < 0) throw ValidationError("assess_assumptions: negative intent label");
        k = std::max(k, l + 1);
    }
    if (k < 2) throw ValidationError("assess_assumptions: need at least two intents");
    if (cluster_assignments.empty())
        cluster_assignments.assign(intent_labels.begin(), intent_labels.end());
    if (static_cast<long>(cluster_assignments.size()) != n)
        throw ValidationError("assess_assumptions: cluster assignment count mismatch");

    std::vector<std::vector<long>> members(static_cast<std::size_t>(k));
    for (long i = 0; i < n; ++i)
        members[static_cast<std::size_t>(intent_labels[static_cast<std::size_t>(i)])].push_back(i);
    for (int c = 0; c < k; ++c)
        if (members[static_cast<std::size_t>(c)].empty())
            throw ValidationError("assess_assumptions: intent " + std::to_string(c) +
                                  " has no trajectories");

    // Typical/atypical split: drop the lowest-margin fraction per intent,
    // scoring each candidate probe against its own intent vs the rest.
    std::vector<IntentSets> sets(static_cast<std::size_t>(k));
    std::vector<std::uint8_t> is_typical(static_cast<std::size_t>(n), 1);
    for (int c = 0; c < k; ++c) {
        auto& rows = members[static_cast<std::size_t>(c)];
        long drop = static_cast<long>(std::floor(split.atypical_fraction *
                                                 static_cast<double>(rows.size())));
        if (drop == 0) {
            sets[static_cast<std::size_t>(c)].typical = rows;
            continue;
        }
        Eigen::MatrixXd own = gather(features, rows);
        std::vector<long> other_rows;
        for (long i = 0; i < n; ++i)
            if (intent_labels[static_cast<std::size_t>(i)] != c) other_rows.push_back(i);
        Eigen::MatrixXd others = vstack(gather(features, other_rows), extra_features);
        std::vector<std::pair<double, long>> scored;
        scored.reserve(rows.size());
        for (long r : rows)
            scored.emplace_back(
                separation_margin(features.row(r).transpose(), own, others), r);
        std::sort(scored.begin(), scored.end());
        for (long i = 0; i < drop; ++i) {
            sets[static_cast<std::size_t>(c)].atypical.push_back(scored[static_cast<std::size_t>(i)].second);
            is_typical[static_cast<std::size_t>(scored[static_cast<std::size_t>(i)].second)] = 0;
        }
        for (std::size_t i = static_cast<std::size_t>(drop); i < scored.size(); ++i)
            sets[static_cast<std::size_t>(c)].typical.push_back(scored[i].second);
    }

    SeparationReport report;
    report.num_intents = k;

    // Margins for Assumption 1(a): typical probes set d and gamma, atypical
    // probes must not undercut their negations.
    bool any_atypical = false;
    for (const auto& s : sets) any_atypical = any_atypical || !s.atypical.empty();
    double d = kInf;
    double gamma = any_atypical ? kInf : 0.0;
    double worst_atypical_d = kInf;
    double worst_atypical_g = kInf;
    for (int c = 0; c < k; ++c) {
        Eigen::MatrixXd typical = gather(features, sets[static_cast<std::size_t>(c)].typical);
        Eigen::MatrixXd atypical = gather(features, sets[static_cast<std::size_t>(c)].atypical);
        std::vector<long> not_rows;
        for (long i = 0; i < n; ++i)
            if (intent_labels[static_cast<std::size_t>(i)] != c) not_rows.push_back(i);
        Eigen::MatrixXd not_k = vstack(gather(features, not_rows), extra_features);

        if (typical.rows() == 0)
            throw ValidationError("assess_assumptions: empty typical set for intent " +
                                  std::to_string(c));
        if (not_k.rows() > 0)
            d = std::min(d, min_margin_over_probes(typical, typical, not_k));
        if (atypical.rows() > 0) {
            gamma = std::min(gamma, min_margin_over_probes(typical, typical, atypical));
            if (not_k.rows() > 0)
                worst_atypical_d =
                    std::min(worst_atypical_d, min_margin_over_probes(atypical, typical, not_k));
            worst_atypical_g =
                std::min(worst_atypical_g, min_margin_over_probes(atypical, typical, atypical));
        }
    }
    report.d = d == kInf ? 0.0 : d;
    report.gamma_margin = (gamma == kInf) ? 0.0 : gamma;
    report.assumption1a_holds = report.d > 0.0;
    if (any_atypical) {
        report.assumption1a_holds = report.assumption1a_holds && report.gamma_margin > 0.0 &&
                                    (worst_atypical_d == kInf || worst_atypical_d >= -report.d) &&
                                    (worst_atypical_g == kInf ||
                                     worst_atypical_g >= -report.gamma_margin);
    }

    // Radii and Assumption 1(b).
    report.radii = Eigen::VectorXd::Zero(k);
    report.assumption1b_holds = report.assumption1a_holds;
    for (int c = 0; c < k; ++c) {
        Eigen::MatrixXd typical = gather(features, sets[static_cast<std::size_t>(c)].typical);
        double diameter = 0.0;
        for (long i = 0; i < typical.rows(); ++i)
            for (long j = i + 1; j < typical.rows(); ++j)
                diameter = std::max(diameter, (typical.row(i) - typical.row(j)).norm());
        report.radii[c] = 0.5 * diameter;
        double min_bound = kInf;
        for (long i = 0; i < typical.rows(); ++i) {
            double norm = typical.row(i).norm();
            if (norm > 0.0) min_bound = std::min(min_bound, report.d / (2.0 * norm));
        }
        if (!(report.radii[c] < min_bound)) report.assumption1b_holds = false;
    }

    // zeta: atypical mass fraction; empirical counts stand in for q-masses.
    report.zeta = 0.0;
    for (int c = 0; c < k; ++c) {
        double frac = static_cast<double>(sets[static_cast<std::size_t>(c)].atypical.size()) /
                      static_cast<double>(members[static_cast<std::size_t>(c)].size());
        report.zeta = std::max(report.zeta, frac);
    }

    // delta and Assumption 2: clusters are aligned with intents by index;
    // mis-placed members must separate no worse than atypical points.
    report.delta = 0.0;
    report.cluster_sizes = Eigen::VectorXd::Zero(k);
    report.phi_bar.assign(static_cast<std::size_t>(k),
                          Eigen::VectorXd::Zero(features.cols()));
    bool assumption2_margins = true;
    for (long i = 0; i < n; ++i) {
        int c = cluster_assignments[static_cast<std::size_t>(i)];
        if (c < 0 || c >= k)
            throw ValidationError("assess_assumptions: cluster index out of range");
        report.cluster_sizes[c] += 1.0;
        report.phi_bar[static_cast<std::size_t>(c)] += features.row(i).transpose();
    }
    for (int c = 0; c < k; ++c) {
        if (report.cluster_sizes[c] == 0.0)
            throw ValidationError("assess_assumptions: empty cluster " + std::to_string(c));
        report.phi_bar[static_cast<std::size_t>(c)] /= report.cluster_sizes[c];
    }
    for (int c = 0; c < k; ++c) {
        Eigen::MatrixXd typical = gather(features, sets[static_cast<std::size_t>(c)].typical);
        long misplaced = 0;
        for (long i = 0; i < n; ++i) {
            if (cluster_assignments[static_cast<std::size_t>(i)] != c) continue;
            bool typical_of_c = intent_labels[static_cast<std::size_t>(i)] == c &&
                                is_typical[static_cast<std::size_t>(i)];
            if (typical_of_c) continue;
            ++misplaced;
            // Mis-clustered members must (-d)-separate the typical set from
            // every other intent and (-gamma)-separate it from the atypical
            // part.
            for (int other = 0; other < k && assumption2_margins; ++other) {
                if (other == c) continue;
                Eigen::MatrixXd other_set = gather(features, members[static_cast<std::size_t>(other)]);
                if (separation_margin(features.row(i).transpose(), typical, other_set) <
                    -report.d)
                    assumption2_margins = false;
            }
            if (!sets[static_cast<std::size_t>(c)].atypical.empty() && assumption2_margins) {
                Eigen::MatrixXd atypical = gather(features, sets[static_cast<std::size_t>(c)].atypical);
                if (separation_margin(features.row(i).transpose(), typical, atypical) <
                    -report.gamma_margin)
                    assumption2_margins = false;
            }
        }
        report.delta = std::max(report.delta,
                                static_cast<double>(misplaced) / report.cluster_sizes[c]);
    }
    report.assumption2_holds = report.delta < 0.5 && assumption2_margins;

    report.d_tilde = (1.0 - 2.0 * report.delta) * report.d;
    report.gamma_tilde = (1.0 - 2.0 * report.delta) * report.gamma_margin;

    // Q masses: exact if provided, otherwise empirical intent frequencies.
    if (exact_q_masses.size() != 0) {
        if (exact_q_masses.size() != k)
            throw ValidationError("assess_assumptions: q-mass length must equal intent count");
        report.q_masses = exact_q_masses;
        double total = total_q_mass > 0.0 ? total_q_mass : exact_q_masses.sum();
        report.q_not_masses = Eigen::VectorXd::Constant(k, total) - exact_q_masses;
        report.empirical_q = false;
    } else {
        report.q_masses = Eigen::VectorXd(k);
        for (int c = 0; c < k; ++c)
            report.q_masses[c] =
                static_cast<double>(members[static_cast<std::size_t>(c)].size()) /
                static_cast<double>(n);
        report.q_not_masses = Eigen::VectorXd::Ones(k) - report.q_masses;
        report.empirical_q = true;
    }

    report.cone_angles = Eigen::VectorXd::Zero(k);
    for (int c = 0; c < k; ++c) {
        double norm = report.phi_bar[static_cast<std::size_t>(c)].norm();
        report.cone_angles[c] =
            norm > 0.0 ? std::asin(std::min(report.radii[c] / norm, 1.0)) : 0.0;
    }

    Theorem1Bound bound = theorem1_bound(report, report.cluster_sizes, k);
    report.beta = bound.beta;
    report.epsilon_bound = bound.epsilon;
    return report;
}

Theorem1Bound theorem1_bound(const SeparationReport& report,
                             const Eigen::VectorXd& cluster_sizes, int k) {
    if (k < 1) throw ValidationError("theorem1_bound: K must be at least 1");
    if (cluster_sizes.size() != k || report.q_masses.size() != k ||
        report.q_not_masses.size() != k || report.radii.size() != k ||
        static_cast<int>(report.phi_bar.size()) != k)
        throw ValidationError("theorem1_bound: report is incomplete for K components");

    const double zeta = report.zeta;
    const double delta = report.delta;
    const double dt = report.d_tilde;
    const double gt = report.gamma_tilde;
    const double log_one_minus_zeta = zeta < 1.0 ? std::log(1.0 - zeta) : -kInf;

    // log of (1 - zeta)^2 e^gt / (zeta + (1 - zeta) e^gt)
    double log_gamma_factor =
        2.0 * log_one_minus_zeta + gt -
        log_sum_exp2(zeta > 0.0 ? std::log(zeta) : -kInf, log_one_minus_zeta + gt);

    double log_beta = kInf;
    for (int a = 0; a < k; ++a) {
        double norm_phi = report.phi_bar[static_cast<std::size_t>(a)].norm();
        for (int b = 0; b < k; ++b) {
            if (a == b) continue;
            double log_num = std::log(cluster_sizes[a]) + log_one_minus_zeta +
                             std::log(report.q_masses[b]) + dt;
            double log_den =
                std::log(cluster_sizes[b]) +
                log_sum_exp2(log_one_minus_zeta + std::log(report.q_masses[a]) + dt,
                             report.q_not_masses[a] > 0.0
                                 ? std::log(report.q_not_masses[a])
                                 : -kInf);
            double log_pair = log_gamma_factor + log_num - log_den + dt -
                              2.0 * report.radii[a] * norm_phi;
            log_beta = std::min(log_beta, log_pair);
        }
    }

    Theorem1Bound out;
    out.beta = log_beta == kInf ? kInf : std::exp(log_beta);
    if (std::isinf(out.beta)) {
        out.epsilon = 2.0 * delta;
    } else {
        out.epsilon = 2.0 * delta +
                      (1.0 - delta) * 2.0 * (k - 1) / (out.beta + static_cast<double>(k - 1));
    }
    return out;
}

VerifyBoundResult verify_bound_on_instance(const MaxEntModel& model,
                                           const std::vector<Trajectory>& trajs,
                                           const std::vector<int>& intent_labels, int k,
                                           std::uint64_t seed, const VerifyBoundOptions& opts) {
    if (trajs.size() != intent_labels.size())
        throw ValidationError("verify_bound_on_instance: label count mismatch");
    if (trajs.empty()) throw ValidationError("verify_bound_on_instance: empty dataset");

    // The separation analysis lives in centered feature space; centering does
    // not change q, so the q-masses transfer unchanged.
    FeatureMap centered = center_features(model.mdp(), model.fmap(), trajs);
    MaxEntModel cmodel(model.mdp(), centered, model.horizon());

    WarmStartResult ws =
        warmstart(cmodel, trajs, k, ClusterMethod::KMeans, InitMethod::Mean, seed);
    ResponsibilityMatrix u1 = e_step(ws.ensemble, cmodel, trajs);

    VerifyBoundResult res;
    res.observed_first_step_change = responsibility_change(u1, ws.memberships);

    if (k < 2) {
        // A single intent is trivially epsilon-optimal at 0.
        res.epsilon_bound = 0.0;
        res.certified = true;
        return res;
    }

    // Align cluster indices with intents by majority overlap; a non-bijective
    // map means the clustering failed and the bound is not guaranteed.
    std::vector<int> cluster_of(trajs.size());
    for (std::size_t i = 0; i < trajs.size(); ++i) {
        int arg = 0;
        ws.memberships.u.row(static_cast<long>(i)).maxCoeff(&arg);
        cluster_of[i] = arg;
    }
    Eigen::MatrixXd overlap = Eigen::MatrixXd::Zero(k, k);
    for (std::size_t i = 0; i < trajs.size(); ++i)
        overlap(cluster_of[i], intent_labels[i]) += 1.0;
    std::vector<int> cluster_to_intent(static_cast<std::size_t>(k), -1);
    std::vector<std::uint8_t> intent_taken(static_cast<std::size_t>(k), 0);
    bool bijective = true;
    for (int step = 0; step < k; ++step) {
        int bc = -1, bi = -1;
        double best = -1.0;
        for (int c = 0; c < k; ++c) {
            if (cluster_to_intent[static_cast<std::size_t>(c)] >= 0) continue;
            for (int i = 0; i < k; ++i) {
                if (intent_taken[static_cast<std::size_t>(i)]) continue;
                if (overlap(c, i) > best) {
                    best = overlap(c, i);
                    bc = c;
                    bi = i;
                }
            }
        }
        cluster_to_intent[static_cast<std::size_t>(bc)] = bi;
        intent_taken[static_cast<std::size_t>(bi)] = 1;
        if (best <= 0.0) bijective = false;
    }
    std::vector<int> aligned_cluster(trajs.size());
    for (std::size_t i = 0; i < trajs.size(); ++i)
        aligned_cluster[i] = cluster_to_intent[static_cast<std::size_t>(cluster_of[i])];

    // Feature matrix in the centered space.
    Eigen::MatrixXd features(static_cast<long>(trajs.size()), cmodel.feature_dim());
    for (std::size_t i = 0; i < trajs.size(); ++i)
        features.row(static_cast<long>(i)) = cmodel.trajectory_features(trajs[i]).transpose();

    // Exact population quantities when the trajectory class is enumerable and
    // the expert policies are known.
    Eigen::VectorXd q_masses;
    double total_q = 0.0;
    Eigen::MatrixXd extra;
    bool exact = false;
    bool overlapping_supports = false;
    if (static_cast<int>(opts.expert_policies.size()) == k) {
        try {
            auto all = enumerate_trajectories(cmodel, opts.enumeration_cap);
            q_masses = Eigen::VectorXd::Zero(k);
            std::vector<Eigen::VectorXd> garbage;
            for (const auto& et : all) {
                total_q += std::exp(et.log_q);
                int owner = -1;
                for (int c = 0; c < k; ++c) {
                    bool compatible = true;
                    for (std::size_t t = 0; t + 1 < et.traj.states.size(); ++t)
                        if (opts.expert_policies[static_cast<std::size_t>(c)].probs(
                                et.traj.states[t], et.traj.actions[t]) <= 0.0) {
                            compatible = false;
                            break;
                        }
                    if (compatible) {
                        if (owner >= 0) overlapping_supports = true;
                        owner = c;
                        q_masses[c] += std::exp(et.log_q);
                    }
                }
                if (owner < 0) garbage.push_back(et.features);
            }
            if (!garbage.empty()) {
                extra = Eigen::MatrixXd(static_cast<long>(garbage.size()), cmodel.feature_dim());
                for (std::size_t g = 0; g < garbage.size(); ++g)
                    extra.row(static_cast<long>(g)) = garbage[g].transpose();
            }
            exact = !overlapping_supports;
        } catch (const ValidationError&) {
            exact = false;  // class too large; fall back to empirical stand-ins
        }
    }

    res.report = assess_assumptions(features, intent_labels, opts.split, aligned_cluster,
                                    exact ? q_masses : Eigen::VectorXd(), exact ? total_q : 0.0,
                                    exact ? extra : Eigen::MatrixXd());
    res.epsilon_bound = res.report.epsilon_bound;
    res.certified = bijective && exact && res.report.assumption1a_holds &&
                    res.report.assumption1b_holds && res.report.assumption2_holds;
    return res;
}

}  // namespace miirl
