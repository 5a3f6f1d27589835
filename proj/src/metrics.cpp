#include "miirl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "miirl/min_cost_flow.hpp"
#include "miirl/parallel.hpp"
#include "miirl/rng.hpp"

namespace miirl {

namespace {

// Planner tolerance leaks into value differences by O(tol / (1 - gamma)), so
// the negativity budget scales accordingly.
double clamp_budget(double tol, double gamma) {
    return std::max(10.0 * tol, 4.0 * tol / (1.0 - gamma));
}

double start_value(const TabularMdp& mdp, const Eigen::VectorXd& v) {
    return mdp.start_dist.dot(v);
}

// Both sides are policy values under the ground-truth reward, computed by the
// same evaluation routine so that identical policies cancel exactly.
double evd_from_tables(const TabularMdp& mdp, const std::vector<Eigen::MatrixXd>& reward_gt,
                       double optimal_gt_value, const Policy& learned_policy, double tol) {
    Eigen::VectorXd v = policy_evaluation_table(mdp, learned_policy, reward_gt, tol);
    double raw = optimal_gt_value - start_value(mdp, v);
    if (raw < -clamp_budget(tol, mdp.discount))
        throw NumericError("evd: value difference more negative than the planner budget");
    return std::max(raw, 0.0);
}

double greedy_policy_value(const TabularMdp& mdp, const std::vector<Eigen::MatrixXd>& reward,
                           double tol) {
    PlanResult plan = value_iteration_table(mdp, reward, tol);
    return start_value(mdp, policy_evaluation_table(mdp, plan.policy, reward, tol));
}

}  // namespace

double evd(const TabularMdp& mdp, const FeatureMap& fmap, const Eigen::VectorXd& theta_gt,
           const Eigen::VectorXd& theta_learned, double tol) {
    fmap.check_compatible(mdp);
    auto reward_gt = fmap.reward_table(theta_gt);
    PlanResult learned = value_iteration(mdp, theta_learned, fmap, tol);
    return evd_from_tables(mdp, reward_gt, greedy_policy_value(mdp, reward_gt, tol),
                           learned.policy, tol);
}

GevdReport gevd(const TabularMdp& mdp, const FeatureMap& fmap, const RewardEnsemble& ensemble_gt,
                const RewardEnsemble& ensemble_learned, double tol) {
    ensemble_gt.validate();
    ensemble_learned.validate();
    fmap.check_compatible(mdp);
    const int kg = ensemble_gt.size();
    const int kl = ensemble_learned.size();

    // Ground-truth planning (optimal values and the tight normalizer from the
    // reward-minimizing policy), one problem per component.
    std::vector<std::vector<Eigen::MatrixXd>> reward_gt(static_cast<std::size_t>(kg));
    std::vector<double> optimal_value(static_cast<std::size_t>(kg));
    std::vector<double> worst_value(static_cast<std::size_t>(kg));
    parallel_for(kg, default_worker_count(), [&](int i) {
        const auto& theta = ensemble_gt.params[static_cast<std::size_t>(i)].theta;
        reward_gt[static_cast<std::size_t>(i)] = fmap.reward_table(theta);
        optimal_value[static_cast<std::size_t>(i)] =
            greedy_policy_value(mdp, reward_gt[static_cast<std::size_t>(i)], tol);
        PlanResult worst = minimizing_policy(mdp, theta, fmap, tol);
        worst_value[static_cast<std::size_t>(i)] = start_value(mdp, worst.values);
    });

    std::vector<Policy> learned_policy(static_cast<std::size_t>(kl));
    parallel_for(kl, default_worker_count(), [&](int j) {
        learned_policy[static_cast<std::size_t>(j)] =
            value_iteration(mdp, ensemble_learned.params[static_cast<std::size_t>(j)].theta,
                            fmap, tol)
                .policy;
    });

    GevdReport report;
    report.pairwise_evd = Eigen::MatrixXd(kg, kl);
    parallel_for(kg * kl, default_worker_count(), [&](int idx) {
        int i = idx / kl;
        int j = idx % kl;
        report.pairwise_evd(i, j) =
            evd_from_tables(mdp, reward_gt[static_cast<std::size_t>(i)],
                            optimal_value[static_cast<std::size_t>(i)],
                            learned_policy[static_cast<std::size_t>(j)], tol);
    });

    TransportResult transport = solve_transportation(report.pairwise_evd, ensemble_gt.weights,
                                                     ensemble_learned.weights);
    report.flow = transport.flow;
    report.gevd = transport.cost;

    report.normalizer = 0.0;
    for (int i = 0; i < kg; ++i)
        report.normalizer += ensemble_gt.weights[i] *
                             (optimal_value[static_cast<std::size_t>(i)] -
                              worst_value[static_cast<std::size_t>(i)]);
    if (report.normalizer <= 1e-12) {
        report.degenerate_normalizer = true;
        report.normalized_gevd = 0.0;
    } else {
        report.normalized_gevd = report.gevd / report.normalizer;
        if (report.normalized_gevd > 1.0) {
            report.normalized_gevd = 1.0;
            report.clipped = true;
        }
    }
    return report;
}

namespace {

double entropy(const Eigen::VectorXd& p) {
    double h = 0.0;
    for (long i = 0; i < p.size(); ++i)
        if (p[i] > 0.0) h -= p[i] * std::log(p[i]);
    return h;
}

// Mutual information of the soft contingency joint p(k, k') = U'V / N.
double soft_mutual_information(const Eigen::MatrixXd& u, const Eigen::MatrixXd& v) {
    Eigen::MatrixXd joint = (u.transpose() * v) / static_cast<double>(u.rows());
    Eigen::VectorXd pu = joint.rowwise().sum();
    Eigen::VectorXd pv = joint.colwise().sum().transpose();
    double mi = 0.0;
    for (long i = 0; i < joint.rows(); ++i)
        for (long j = 0; j < joint.cols(); ++j) {
            double p = joint(i, j);
            if (p > 0.0 && pu[i] > 0.0 && pv[j] > 0.0)
                mi += p * std::log(p / (pu[i] * pv[j]));
        }
    return mi;
}

Eigen::MatrixXd dirichlet_rows(long n, int k, Rng& rng) {
    Eigen::MatrixXd m(n, k);
    for (long i = 0; i < n; ++i) m.row(i) = rng.dirichlet(1.0 / k, k).transpose();
    return m;
}

}  // namespace

AnidReport anid(const ResponsibilityMatrix& u, const ResponsibilityMatrix& v, int mc_samples,
                std::uint64_t mc_seed) {
    u.validate();
    v.validate();
    if (u.rows() != v.rows())
        throw ValidationError("anid: responsibility matrices have different row counts");
    if (mc_samples < 1) throw ValidationError("anid: mc_samples must be at least 1");

    AnidReport report;
    report.mc_samples = mc_samples;
    report.mc_seed = mc_seed;

    Eigen::MatrixXd joint = (u.u.transpose() * v.u) / static_cast<double>(u.rows());
    report.entropy_u = entropy(joint.rowwise().sum());
    report.entropy_v = entropy(joint.colwise().sum().transpose());
    report.mutual_information = soft_mutual_information(u.u, v.u);

    // Chance correction: E[I(U', V')] under row-wise Dirichlet(1/K) matrices
    // of the same shapes. Each sample draws the smaller-column matrix first
    // from a per-sample stream, so the estimate depends only on the shape
    // pair and ANID stays symmetric under argument swap.
    const long n = u.rows();
    const int ku = u.cols();
    const int kv = v.cols();
    std::vector<double> mi_draws(static_cast<std::size_t>(mc_samples));
    parallel_for(mc_samples, default_worker_count(), [&](int s) {
        Rng rng(derive_seed(mc_seed, {seed_stream::kMcSample, static_cast<std::uint64_t>(s)}));
        Eigen::MatrixXd first = dirichlet_rows(n, std::min(ku, kv), rng);
        Eigen::MatrixXd second = dirichlet_rows(n, std::max(ku, kv), rng);
        const Eigen::MatrixXd& up = (ku <= kv) ? first : second;
        const Eigen::MatrixXd& vp = (ku <= kv) ? second : first;
        mi_draws[static_cast<std::size_t>(s)] = soft_mutual_information(up, vp);
    });
    double mean = 0.0;
    for (double d : mi_draws) mean += d;
    mean /= mc_samples;
    double var = 0.0;
    for (double d : mi_draws) var += (d - mean) * (d - mean);
    var = mc_samples > 1 ? var / (mc_samples - 1) : 0.0;
    report.expected_mi = mean;
    report.mc_stderr = std::sqrt(var / mc_samples);

    double denom = std::max(report.entropy_u, report.entropy_v) - report.expected_mi;
    if (std::abs(denom) <= 1e-12) {
        report.degenerate = true;
        report.anid = 0.0;
        return report;
    }
    double value = 1.0 - (report.mutual_information - report.expected_mi) / denom;
    if (value < 0.0 || value > 1.0) {
        report.clipped = true;
        value = std::clamp(value, 0.0, 1.0);
    }
    report.anid = value;
    return report;
}

std::string pairing_table_text(const GevdReport& report) {
    std::ostringstream out;
    const int kg = static_cast<int>(report.pairwise_evd.rows());
    const int kl = static_cast<int>(report.pairwise_evd.cols());
    out << "pair (gt -> learned)   flow      evd       flow*evd\n";
    for (int i = 0; i < kg; ++i)
        for (int j = 0; j < kl; ++j) {
            if (report.flow(i, j) <= 1e-12) continue;
            char line[128];
            std::snprintf(line, sizeof(line), "  %2d -> %-2d           %8.5f  %9.5f  %9.5f\n", i,
                          j, report.flow(i, j), report.pairwise_evd(i, j),
                          report.flow(i, j) * report.pairwise_evd(i, j));
            out << line;
        }
    char total[160];
    std::snprintf(total, sizeof(total),
                  "gevd = %.6f, normalizer = %.6f, normalized = %.6f%s\n", report.gevd,
                  report.normalizer, report.normalized_gevd,
                  report.degenerate_normalizer ? " (degenerate normalizer)" : "");
    out << total;
    return out.str();
}

}  // namespace miirl
