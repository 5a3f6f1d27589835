#include "miirl/em.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "miirl/parallel.hpp"
#include "miirl/rng.hpp"

namespace miirl {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kDegenerateMass = 1e-12;

Eigen::MatrixXd feature_matrix(const BehaviourModel& model, const std::vector<Trajectory>& trajs) {
    Eigen::MatrixXd phi(static_cast<long>(trajs.size()), model.feature_dim());
    for (std::size_t i = 0; i < trajs.size(); ++i)
        phi.row(static_cast<long>(i)) = model.trajectory_features(trajs[i]).transpose();
    return phi;
}

// Scores s_ik = ln rho_k + theta_k' phi_i - ln Z_k given precomputed features.
Eigen::MatrixXd score_matrix(const RewardEnsemble& ensemble, const BehaviourModel& model,
                             const Eigen::MatrixXd& phi) {
    const int k = ensemble.size();
    Eigen::VectorXd log_z(k);
    for (int c = 0; c < k; ++c)
        log_z[c] = model.log_partition(ensemble.params[static_cast<std::size_t>(c)].theta);
    Eigen::MatrixXd scores(phi.rows(), k);
    for (int c = 0; c < k; ++c) {
        double log_rho =
            ensemble.weights[c] > 0.0 ? std::log(ensemble.weights[c]) : kNegInf;
        scores.col(c) =
            (phi * ensemble.params[static_cast<std::size_t>(c)].theta).array() + log_rho -
            log_z[c];
    }
    return scores;
}

ResponsibilityMatrix normalize_scores(const Eigen::MatrixXd& scores, EStepDiagnostics* diag) {
    ResponsibilityMatrix res;
    res.u = Eigen::MatrixXd::Zero(scores.rows(), scores.cols());
    int fallbacks = 0;
    for (long i = 0; i < scores.rows(); ++i) {
        double m = scores.row(i).maxCoeff();
        if (m == kNegInf || !std::isfinite(m)) {
            res.u.row(i).setConstant(1.0 / scores.cols());
            ++fallbacks;
            continue;
        }
        Eigen::VectorXd p = (scores.row(i).array() - m).exp();
        double s = p.sum();
        if (!(s > 0.0) || !std::isfinite(s)) {
            res.u.row(i).setConstant(1.0 / scores.cols());
            ++fallbacks;
            continue;
        }
        res.u.row(i) = (p / s).transpose();
    }
    if (diag) diag->fallback_rows = fallbacks;
    return res;
}

}  // namespace

ResponsibilityMatrix e_step(const RewardEnsemble& ensemble, const BehaviourModel& model,
                            const std::vector<Trajectory>& trajs, EStepDiagnostics* diag) {
    ensemble.validate();
    if (trajs.empty()) throw ValidationError("e_step: empty trajectory set");
    return normalize_scores(score_matrix(ensemble, model, feature_matrix(model, trajs)), diag);
}

RewardEnsemble m_step(const ResponsibilityMatrix& u, const BehaviourModel& model,
                      const std::vector<Trajectory>& trajs, const RewardEnsemble& prev_ensemble,
                      const FitOptions& fit_opts, MStepDiagnostics* diag) {
    u.validate();
    if (u.rows() != static_cast<int>(trajs.size()))
        throw ValidationError("m_step: responsibility rows do not match trajectories");
    if (u.cols() != prev_ensemble.size())
        throw ValidationError("m_step: responsibility columns do not match ensemble size");

    const int k = u.cols();
    RewardEnsemble next;
    next.weights = u.u.colwise().mean().transpose();
    next.params.resize(static_cast<std::size_t>(k));

    MStepDiagnostics local;
    std::vector<std::uint8_t> degenerate(static_cast<std::size_t>(k), 0);
    for (int c = 0; c < k; ++c)
        if (u.u.col(c).sum() < kDegenerateMass) degenerate[static_cast<std::size_t>(c)] = 1;

    // Component fits are independent weighted problems.
    std::vector<std::uint8_t> nonconverged(static_cast<std::size_t>(k), 0);
    parallel_for(k, default_worker_count(), [&](int c) {
        if (degenerate[static_cast<std::size_t>(c)]) {
            next.params[static_cast<std::size_t>(c)] =
                prev_ensemble.params[static_cast<std::size_t>(c)];
            return;
        }
        FitResult fit =
            model.fit_weighted(trajs, u.u.col(c),
                               prev_ensemble.params[static_cast<std::size_t>(c)].theta, fit_opts);
        next.params[static_cast<std::size_t>(c)] = fit.params;
        if (!fit.converged) nonconverged[static_cast<std::size_t>(c)] = 1;
    });
    for (int c = 0; c < k; ++c) {
        if (nonconverged[static_cast<std::size_t>(c)]) ++local.nonconverged_fits;
        if (!degenerate[static_cast<std::size_t>(c)]) continue;
        next.weights[c] = std::max(next.weights[c], kDegenerateMass);
        ++local.degenerate_columns;
    }
    next.weights /= next.weights.sum();
    if (diag) *diag = local;
    next.validate();
    return next;
}

double responsibility_change(const ResponsibilityMatrix& u_new,
                             const ResponsibilityMatrix& u_old) {
    if (u_new.u.rows() != u_old.u.rows() || u_new.u.cols() != u_old.u.cols())
        throw ValidationError("responsibility_change: shape mismatch");
    return (u_new.u - u_old.u).cwiseAbs().sum() / static_cast<double>(u_new.u.rows());
}

double mixture_nll(const RewardEnsemble& ensemble, const BehaviourModel& model,
                   const std::vector<Trajectory>& trajs) {
    ensemble.validate();
    if (trajs.empty()) throw ValidationError("mixture_nll: empty trajectory set");
    Eigen::MatrixXd phi = feature_matrix(model, trajs);
    Eigen::MatrixXd scores = score_matrix(ensemble, model, phi);
    double total = 0.0;
    for (std::size_t i = 0; i < trajs.size(); ++i) {
        double lq = model.log_prior(trajs[i]);
        double m = scores.row(static_cast<long>(i)).maxCoeff();
        double mix = m == kNegInf
                         ? kNegInf
                         : m + std::log((scores.row(static_cast<long>(i)).array() - m).exp().sum());
        total += -(lq + mix);
    }
    return total / static_cast<double>(trajs.size());
}

RunEmResult run_em(const BehaviourModel& model, const std::vector<Trajectory>& trajs,
                   const RewardEnsemble& init, const EmOptions& opts) {
    if (!(opts.epsilon > 0.0)) throw ValidationError("run_em: epsilon must be positive");
    init.validate();

    RunEmResult res;
    res.ensemble = init;
    res.trace.initial_nll = mixture_nll(init, model, trajs);

    std::optional<ResponsibilityMatrix> u_prev = opts.initial_u;
    for (int it = 1; it <= opts.max_iters; ++it) {
        auto started = std::chrono::steady_clock::now();
        EStepDiagnostics ediag;
        ResponsibilityMatrix u = e_step(res.ensemble, model, trajs, &ediag);
        double change = u_prev ? responsibility_change(u, *u_prev)
                               : std::numeric_limits<double>::infinity();
        // The first M-step always runs; afterwards an epsilon-small move of
        // the responsibilities certifies the current ensemble.
        if (it > 1 && change < opts.epsilon) {
            res.responsibilities = std::move(u);
            res.trace.converged = true;
            res.trace.final_change = change;
            break;
        }
        MStepDiagnostics mdiag;
        res.ensemble = m_step(u, model, trajs, res.ensemble, opts.fit, &mdiag);
        res.responsibilities = u;
        u_prev = std::move(u);

        EmTraceRow row;
        row.iteration = it;
        row.responsibility_change = change;
        row.train_nll = mixture_nll(res.ensemble, model, trajs);
        row.wall_time_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        row.estep_fallback = ediag.fallback_rows > 0;
        row.mstep_degenerate = mdiag.degenerate_columns > 0;
        row.mstep_nonconverged = mdiag.nonconverged_fits > 0;
        res.trace.rows.push_back(row);
        res.trace.iterations = it;
    }
    return res;
}

FeatureMap center_features(const TabularMdp& mdp, const FeatureMap& fmap,
                           const std::vector<Trajectory>& trajs) {
    if (trajs.empty()) throw ValidationError("center_features: empty trajectory set");
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(fmap.dim());
    double mean_len = 0.0;
    for (const auto& traj : trajs) {
        mean += trajectory_features(mdp, fmap, traj);
        mean_len += discounted_length(mdp, traj);
    }
    mean /= static_cast<double>(trajs.size());
    mean_len /= static_cast<double>(trajs.size());
    Eigen::VectorXd shift = mean_len > kProbTolerance
                                ? Eigen::VectorXd(mean / mean_len)
                                : Eigen::VectorXd(Eigen::VectorXd::Zero(fmap.dim()));
    FeatureMap out = fmap.shifted(shift);
    out.mark_centered(true);
    return out;
}

WarmStartResult warmstart(const BehaviourModel& model, const std::vector<Trajectory>& trajs,
                          int k, ClusterMethod method, InitMethod init, std::uint64_t seed,
                          const WarmStartOptions& opts) {
    if (trajs.empty()) throw ValidationError("warmstart: empty trajectory set");
    if (k < 1 || k > static_cast<int>(trajs.size()))
        throw ValidationError("warmstart: K must lie in [1, N]");

    Eigen::MatrixXd phi = feature_matrix(model, trajs);
    const long n = phi.rows();

    WarmStartResult res;
    if (method == ClusterMethod::KMeans) {
        KMeansResult km = kmeans(phi, k, seed, opts.kmeans);
        res.memberships.u = Eigen::MatrixXd::Zero(n, k);
        for (long i = 0; i < n; ++i)
            res.memberships.u(i, km.assignments[static_cast<std::size_t>(i)]) = 1.0;
        res.repaired_clusters = km.repaired_clusters;
    } else {
        GmmResult gm = gmm_fit(phi, k, seed, opts.gmm);
        res.memberships.u = gm.responsibilities;
    }

    Eigen::VectorXd mass = res.memberships.u.colwise().sum().transpose();
    res.ensemble.weights = mass / static_cast<double>(n);
    res.ensemble.params.resize(static_cast<std::size_t>(k));
    for (int c = 0; c < k; ++c) {
        if (init == InitMethod::Mean) {
            // Responsibility-weighted cluster feature mean (reduces to the
            // plain mean for hard memberships).
            Eigen::VectorXd num = Eigen::VectorXd::Zero(model.feature_dim());
            for (long i = 0; i < n; ++i)
                num += res.memberships.u(i, c) * phi.row(i).transpose();
            res.ensemble.params[static_cast<std::size_t>(c)].theta =
                mass[c] > 0.0 ? Eigen::VectorXd(num / mass[c]) : Eigen::VectorXd(num);
        } else {
            FitResult fit = model.fit_weighted(trajs, res.memberships.u.col(c),
                                               Eigen::VectorXd::Zero(model.feature_dim()),
                                               opts.fit);
            res.ensemble.params[static_cast<std::size_t>(c)] = fit.params;
        }
    }
    res.ensemble.validate();
    return res;
}

RewardEnsemble supervised_baseline(const BehaviourModel& model,
                                   const std::vector<Trajectory>& trajs,
                                   const std::vector<int>& labels,
                                   const FitOptions& fit_opts) {
    if (trajs.empty()) throw ValidationError("supervised_baseline: empty trajectory set");
    if (labels.size() != trajs.size())
        throw ValidationError("supervised_baseline: label count does not match trajectories");
    int k = 0;
    for (int l : labels) {
        if (l < 0) throw ValidationError("supervised_baseline: negative label");
        k = std::max(k, l + 1);
    }
    ResponsibilityMatrix u = ResponsibilityMatrix::from_labels(labels, k);
    for (int c = 0; c < k; ++c)
        if (u.u.col(c).sum() == 0.0)
            throw ValidationError("supervised_baseline: empty label class " + std::to_string(c));

    RewardEnsemble ens;
    ens.weights = u.u.colwise().mean().transpose();
    ens.params.resize(static_cast<std::size_t>(k));
    parallel_for(k, default_worker_count(), [&](int c) {
        FitResult fit = model.fit_weighted(trajs, u.u.col(c),
                                           Eigen::VectorXd::Zero(model.feature_dim()), fit_opts);
        ens.params[static_cast<std::size_t>(c)] = fit.params;
    });
    ens.validate();
    return ens;
}

RewardEnsemble random_init(int feature_dim, int k, std::uint64_t seed) {
    if (feature_dim < 1 || k < 1)
        throw ValidationError("random_init: dimensions must be positive");
    Rng rng(derive_seed(seed, {seed_stream::kRandomInit}));
    RewardEnsemble ens;
    ens.weights = Eigen::VectorXd::Constant(k, 1.0 / k);
    ens.params.resize(static_cast<std::size_t>(k));
    for (int c = 0; c < k; ++c) {
        Eigen::VectorXd theta(feature_dim);
        for (int d = 0; d < feature_dim; ++d) theta[d] = rng.uniform(-1.0, 1.0);
        ens.params[static_cast<std::size_t>(c)].theta = std::move(theta);
    }
    return ens;
}

}  // namespace miirl
