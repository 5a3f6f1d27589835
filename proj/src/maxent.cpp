#include "miirl/maxent.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace miirl {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_sum_exp(const std::vector<double>& terms) {
    double m = kNegInf;
    for (double t : terms) m = std::max(m, t);
    if (m == kNegInf) return kNegInf;
    double acc = 0.0;
    for (double t : terms)
        if (t != kNegInf) acc += std::exp(t - m);
    return m + std::log(acc);
}

}  // namespace

MaxEntModel::MaxEntModel(TabularMdp mdp, FeatureMap fmap, int horizon)
    : mdp_(std::move(mdp)), fmap_(std::move(fmap)), horizon_(horizon) {
    mdp_.validate();
    fmap_.check_compatible(mdp_);
    if (horizon_ < 1) throw ValidationError("MaxEntModel: horizon must be at least 1");

    const double log_action = std::log(static_cast<double>(mdp_.num_actions));
    for (int s = 0; s < mdp_.num_states; ++s) {
        if (mdp_.is_terminal(s)) continue;  // trajectories stop at terminal entry
        for (int a = 0; a < mdp_.num_actions; ++a)
            for (int sp = 0; sp < mdp_.num_states; ++sp) {
                double t = mdp_.transition[static_cast<std::size_t>(a)](s, sp);
                if (t > 0.0) edges_.push_back({s, a, sp, std::log(t) - log_action});
            }
    }
    edge_phi_.resize(static_cast<long>(edges_.size()), fmap_.dim());
    for (std::size_t e = 0; e < edges_.size(); ++e)
        edge_phi_.row(static_cast<long>(e)) =
            fmap_.value(edges_[e].s, edges_[e].a, edges_[e].sp);

    gamma_pow_.resize(static_cast<std::size_t>(std::max(horizon_ - 1, 0)));
    double g = 1.0;
    for (auto& p : gamma_pow_) {
        p = g;
        g *= mdp_.discount;
    }
}

MaxEntModel::ForwardResult MaxEntModel::forward(const Eigen::VectorXd& edge_scores) const {
    const int s_count = mdp_.num_states;
    const int steps = horizon_ - 1;

    std::vector<Eigen::VectorXd> scaled(static_cast<std::size_t>(horizon_));
    std::vector<double> scale(static_cast<std::size_t>(horizon_), 0.0);
    scaled[0] = mdp_.start_dist;

    std::vector<double> z_terms;
    auto accumulate_z = [&](int t, bool include_nonterminal) {
        double mass = 0.0;
        for (int s = 0; s < s_count; ++s)
            if (include_nonterminal || mdp_.is_terminal(s)) mass += scaled[static_cast<std::size_t>(t)][s];
        if (mass > 0.0) z_terms.push_back(std::log(mass) + scale[static_cast<std::size_t>(t)]);
    };

    for (int t = 0; t < steps; ++t) {
        accumulate_z(t, false);
        const double gp = gamma_pow_[static_cast<std::size_t>(t)];
        double c = kNegInf;
        for (std::size_t e = 0; e < edges_.size(); ++e)
            c = std::max(c, edges_[e].log_q_step + gp * edge_scores[static_cast<long>(e)]);
        Eigen::VectorXd next = Eigen::VectorXd::Zero(s_count);
        const auto& cur = scaled[static_cast<std::size_t>(t)];
        if (c != kNegInf) {
            for (std::size_t e = 0; e < edges_.size(); ++e) {
                const Edge& ed = edges_[e];
                double mass = cur[ed.s];
                if (mass <= 0.0) continue;
                next[ed.sp] +=
                    mass * std::exp(ed.log_q_step + gp * edge_scores[static_cast<long>(e)] - c);
            }
        }
        double m = next.maxCoeff();
        if (m > 0.0) {
            next /= m;
            scale[static_cast<std::size_t>(t + 1)] = scale[static_cast<std::size_t>(t)] + c + std::log(m);
        } else {
            scale[static_cast<std::size_t>(t + 1)] = kNegInf;
        }
        scaled[static_cast<std::size_t>(t + 1)] = std::move(next);
    }
    accumulate_z(steps, true);

    ForwardResult res;
    res.log_z = log_sum_exp(z_terms);
    if (!std::isfinite(res.log_z))
        throw NumericError("MaxEntModel: partition sum over/underflowed despite stabilization");
    res.log_alpha.resize(static_cast<std::size_t>(horizon_));
    for (int t = 0; t < horizon_; ++t) {
        Eigen::VectorXd la(s_count);
        for (int s = 0; s < s_count; ++s) {
            double v = scaled[static_cast<std::size_t>(t)][s];
            la[s] = v > 0.0 ? std::log(v) + scale[static_cast<std::size_t>(t)] : kNegInf;
        }
        res.log_alpha[static_cast<std::size_t>(t)] = std::move(la);
    }
    return res;
}

std::vector<Eigen::VectorXd> MaxEntModel::backward(const Eigen::VectorXd& edge_scores) const {
    const int s_count = mdp_.num_states;
    const int steps = horizon_ - 1;

    std::vector<Eigen::VectorXd> log_beta(static_cast<std::size_t>(horizon_));
    std::vector<Eigen::VectorXd> scaled(static_cast<std::size_t>(horizon_));
    std::vector<double> scale(static_cast<std::size_t>(horizon_), 0.0);
    scaled[static_cast<std::size_t>(steps)] = Eigen::VectorXd::Ones(s_count);

    for (int t = steps - 1; t >= 0; --t) {
        const double gp = gamma_pow_[static_cast<std::size_t>(t)];
        double c = kNegInf;
        for (std::size_t e = 0; e < edges_.size(); ++e)
            c = std::max(c, edges_[e].log_q_step + gp * edge_scores[static_cast<long>(e)]);
        Eigen::VectorXd cur = Eigen::VectorXd::Zero(s_count);
        const auto& next = scaled[static_cast<std::size_t>(t + 1)];
        if (c != kNegInf) {
            for (std::size_t e = 0; e < edges_.size(); ++e) {
                const Edge& ed = edges_[e];
                double w = next[ed.sp];
                if (w <= 0.0) continue;
                cur[ed.s] +=
                    w * std::exp(ed.log_q_step + gp * edge_scores[static_cast<long>(e)] - c);
            }
        }
        // Terminal states complete with weight 1 at any time; non-terminal
        // completion weight at time t comes from the recursion above, and its
        // scale must absorb both c and the child rescale.
        double m = cur.maxCoeff();
        double child_scale = scale[static_cast<std::size_t>(t + 1)];
        double own_scale = (m > 0.0) ? child_scale + c + std::log(m) : kNegInf;
        if (m > 0.0) cur /= m;
        // Store true logs directly; mixing the terminal "1" with a scaled
        // array would need two scales.
        Eigen::VectorXd lb(s_count);
        for (int s = 0; s < s_count; ++s) {
            if (mdp_.is_terminal(s))
                lb[s] = 0.0;
            else
                lb[s] = cur[s] > 0.0 ? std::log(cur[s]) + own_scale : kNegInf;
        }
        log_beta[static_cast<std::size_t>(t)] = lb;
        // Re-derive the scaled array for the next step down from the logs.
        double ms = lb.maxCoeff();
        Eigen::VectorXd resc = Eigen::VectorXd::Zero(s_count);
        if (ms != kNegInf)
            for (int s = 0; s < s_count; ++s)
                resc[s] = lb[s] == kNegInf ? 0.0 : std::exp(lb[s] - ms);
        scaled[static_cast<std::size_t>(t)] = std::move(resc);
        scale[static_cast<std::size_t>(t)] = ms;
    }
    log_beta[static_cast<std::size_t>(steps)] = Eigen::VectorXd::Zero(s_count);
    return log_beta;
}

double MaxEntModel::log_partition(const Eigen::VectorXd& theta) const {
    if (theta.size() != fmap_.dim())
        throw ValidationError("log_partition: theta length does not match feature dim");
    Eigen::VectorXd scores = edge_phi_ * theta;
    return forward(scores).log_z;
}

double MaxEntModel::log_prior(const Trajectory& traj) const {
    traj.validate(mdp_, horizon_);
    double lq = std::log(mdp_.start_dist[traj.states.front()]);
    const double log_action = std::log(static_cast<double>(mdp_.num_actions));
    for (std::size_t t = 0; t + 1 < traj.states.size(); ++t)
        lq += std::log(mdp_.transition[static_cast<std::size_t>(traj.actions[t])](
                  traj.states[t], traj.states[t + 1])) -
              log_action;
    return lq;
}

double MaxEntModel::log_likelihood(const Eigen::VectorXd& theta, const Trajectory& traj) const {
    if (theta.size() != fmap_.dim())
        throw ValidationError("log_likelihood: theta length does not match feature dim");
    double lq = log_prior(traj);
    return lq + trajectory_features(traj).dot(theta) - log_partition(theta);
}

Eigen::VectorXd MaxEntModel::expected_features(const Eigen::VectorXd& theta) const {
    if (theta.size() != fmap_.dim())
        throw ValidationError("expected_features: theta length does not match feature dim");
    Eigen::VectorXd scores = edge_phi_ * theta;
    ForwardResult fwd = forward(scores);
    std::vector<Eigen::VectorXd> log_beta = backward(scores);

    Eigen::VectorXd expectation = Eigen::VectorXd::Zero(fmap_.dim());
    const int steps = horizon_ - 1;
    for (int t = 0; t < steps; ++t) {
        const double gp = gamma_pow_[static_cast<std::size_t>(t)];
        const auto& la = fwd.log_alpha[static_cast<std::size_t>(t)];
        const auto& lb = log_beta[static_cast<std::size_t>(t + 1)];
        for (std::size_t e = 0; e < edges_.size(); ++e) {
            const Edge& ed = edges_[e];
            if (la[ed.s] == kNegInf || lb[ed.sp] == kNegInf) continue;
            double log_xi = la[ed.s] + ed.log_q_step + gp * scores[static_cast<long>(e)] +
                            lb[ed.sp] - fwd.log_z;
            double xi = std::exp(log_xi);
            if (xi > 0.0)
                expectation += (xi * gp) * edge_phi_.row(static_cast<long>(e)).transpose();
        }
    }
    return expectation;
}

FitResult MaxEntModel::fit_weighted(const std::vector<Trajectory>& trajs,
                                    const Eigen::VectorXd& weights,
                                    const Eigen::VectorXd& init_theta,
                                    const FitOptions& opts) const {
    return fit_weighted_mle(*this, trajs, weights, init_theta, opts);
}

FitResult fit_weighted_mle(const MaxEntModel& model, const std::vector<Trajectory>& trajs,
                           const Eigen::VectorXd& weights, const Eigen::VectorXd& init_theta,
                           const FitOptions& opts) {
    if (trajs.empty()) throw ValidationError("fit_weighted_mle: empty trajectory set");
    if (weights.size() != static_cast<long>(trajs.size()))
        throw ValidationError("fit_weighted_mle: weight count does not match trajectories");
    if (weights.minCoeff() < 0.0)
        throw ValidationError("fit_weighted_mle: negative weight");
    const double total = weights.sum();
    if (!(total > 0.0)) throw ValidationError("fit_weighted_mle: weights must not all be zero");
    if (init_theta.size() != model.feature_dim())
        throw ValidationError("fit_weighted_mle: init_theta length does not match feature dim");

    // Weighted empirical feature mean; the objective is the per-unit-weight
    // log-likelihood (same argmax, better conditioned).
    Eigen::VectorXd target = Eigen::VectorXd::Zero(model.feature_dim());
    for (std::size_t i = 0; i < trajs.size(); ++i)
        target += (weights[static_cast<long>(i)] / total) * model.trajectory_features(trajs[i]);

    auto objective = [&](const Eigen::VectorXd& th) {
        return th.dot(target) - model.log_partition(th) - opts.l2 * th.squaredNorm();
    };
    auto gradient = [&](const Eigen::VectorXd& th) -> Eigen::VectorXd {
        return target - model.expected_features(th) - 2.0 * opts.l2 * th;
    };

    Eigen::VectorXd theta = init_theta;
    double f = objective(theta);
    Eigen::VectorXd grad = gradient(theta);

    Eigen::VectorXd best_theta = theta;
    double best_f = f;
    double best_grad_norm = grad.cwiseAbs().maxCoeff();

    double step = 1.0;
    int it = 0;
    for (; it < opts.max_iters; ++it) {
        double grad_norm = grad.cwiseAbs().maxCoeff();
        if (grad_norm <= opts.tol)
            return {{theta}, true, it, grad_norm, f};

        bool accepted = false;
        const double slope = grad.squaredNorm();
        while (step >= 1e-14) {
            Eigen::VectorXd cand = theta + step * grad;
            double fc = objective(cand);
            if (fc >= f + 1e-4 * step * slope) {
                theta = std::move(cand);
                f = fc;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;  // stalled at numerical resolution
        grad = gradient(theta);
        if (f > best_f) {
            best_f = f;
            best_theta = theta;
            best_grad_norm = grad.cwiseAbs().maxCoeff();
        }
        step = std::min(step * 2.0, 1e6);
    }
    return {{best_theta}, false, it, best_grad_norm, best_f};
}

namespace {

void enumerate_rec(const MaxEntModel& model, Trajectory& traj, double log_q,
                   std::vector<EnumeratedTrajectory>& out, std::size_t max_count) {
    const TabularMdp& mdp = model.mdp();
    int s = traj.states.back();
    if (mdp.is_terminal(s) || traj.length() == model.horizon()) {
        if (out.size() >= max_count)
            throw ValidationError("enumerate_trajectories: class exceeds max_count");
        out.push_back({traj, log_q, model.trajectory_features(traj)});
        return;
    }
    const double log_action = std::log(static_cast<double>(mdp.num_actions));
    for (int a = 0; a < mdp.num_actions; ++a)
        for (int sp = 0; sp < mdp.num_states; ++sp) {
            double t = mdp.transition[static_cast<std::size_t>(a)](s, sp);
            if (t <= 0.0) continue;
            traj.actions.push_back(a);
            traj.states.push_back(sp);
            enumerate_rec(model, traj, log_q + std::log(t) - log_action, out, max_count);
            traj.actions.pop_back();
            traj.states.pop_back();
        }
}

}  // namespace

std::vector<EnumeratedTrajectory> enumerate_trajectories(const MaxEntModel& model,
                                                         std::size_t max_count) {
    std::vector<EnumeratedTrajectory> out;
    const TabularMdp& mdp = model.mdp();
    for (int s = 0; s < mdp.num_states; ++s) {
        if (mdp.start_dist[s] <= 0.0) continue;
        Trajectory traj;
        traj.states.push_back(s);
        enumerate_rec(model, traj, std::log(mdp.start_dist[s]), out, max_count);
    }
    return out;
}

}  // namespace miirl
