#include "miirl/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "miirl/rng.hpp"

namespace miirl {

void TabularMdp::validate() const {
    if (num_states <= 0 || num_actions <= 0)
        throw ValidationError("TabularMdp: num_states and num_actions must be positive");
    if (static_cast<int>(transition.size()) != num_actions)
        throw ValidationError("TabularMdp: transition must have one matrix per action");
    if (static_cast<int>(terminal.size()) != num_states)
        throw ValidationError("TabularMdp: terminal mask has wrong length");
    if (!(discount >= 0.0 && discount < 1.0))
        throw ValidationError("TabularMdp: discount must lie in [0, 1)");
    for (int a = 0; a < num_actions; ++a) {
        const auto& t = transition[a];
        if (t.rows() != num_states || t.cols() != num_states)
            throw ValidationError("TabularMdp: transition matrix has wrong shape");
        for (int s = 0; s < num_states; ++s) {
            if (t.row(s).minCoeff() < 0.0)
                throw ValidationError("TabularMdp: negative transition probability at state " +
                                      std::to_string(s));
            if (std::abs(t.row(s).sum() - 1.0) > kProbTolerance)
                throw ValidationError("TabularMdp: transition row does not sum to 1 at state " +
                                      std::to_string(s));
            if (is_terminal(s) && std::abs(t(s, s) - 1.0) > kProbTolerance)
                throw ValidationError("TabularMdp: terminal state " + std::to_string(s) +
                                      " is not absorbing");
        }
    }
    if (start_dist.size() != num_states)
        throw ValidationError("TabularMdp: start_dist has wrong length");
    if (start_dist.minCoeff() < 0.0)
        throw ValidationError("TabularMdp: negative start probability");
    if (std::abs(start_dist.sum() - 1.0) > kProbTolerance)
        throw ValidationError("TabularMdp: start_dist does not sum to 1");
}

FeatureMap FeatureMap::from_state_features(Eigen::MatrixXd values) {
    if (values.rows() == 0 || values.cols() == 0)
        throw ValidationError("FeatureMap: empty state feature matrix");
    FeatureMap f;
    f.values_ = std::move(values);
    f.num_states_ = static_cast<int>(f.values_.rows());
    f.num_actions_ = 0;  // irrelevant for state maps
    f.state_based_ = true;
    return f;
}

FeatureMap FeatureMap::from_transition_features(int num_states, int num_actions,
                                                Eigen::MatrixXd values) {
    if (num_states <= 0 || num_actions <= 0)
        throw ValidationError("FeatureMap: state/action counts must be positive");
    const long expected = static_cast<long>(num_states) * num_actions * num_states;
    if (values.rows() != expected || values.cols() == 0)
        throw ValidationError("FeatureMap: transition feature matrix has wrong shape");
    FeatureMap f;
    f.values_ = std::move(values);
    f.num_states_ = num_states;
    f.num_actions_ = num_actions;
    f.state_based_ = false;
    return f;
}

void FeatureMap::check_compatible(const TabularMdp& mdp) const {
    if (state_based_) {
        if (num_states_ != mdp.num_states)
            throw ValidationError("FeatureMap: state count does not match MDP");
    } else {
        if (num_states_ != mdp.num_states || num_actions_ != mdp.num_actions)
            throw ValidationError("FeatureMap: shape does not match MDP");
    }
}

std::vector<Eigen::MatrixXd> FeatureMap::reward_table(const Eigen::VectorXd& theta) const {
    if (theta.size() != dim())
        throw ValidationError("reward_table: theta length does not match feature dim");
    std::vector<Eigen::MatrixXd> out;
    if (state_based_) {
        Eigen::VectorXd r = values_ * theta;  // r(s')
        // The same table applies for every action; callers index per action.
        Eigen::MatrixXd broadcast = r.transpose().replicate(num_states_, 1);
        out.assign(1, std::move(broadcast));
    } else {
        Eigen::VectorXd flat = values_ * theta;
        out.reserve(num_actions_);
        for (int a = 0; a < num_actions_; ++a) {
            Eigen::MatrixXd m(num_states_, num_states_);
            for (int s = 0; s < num_states_; ++s)
                for (int sp = 0; sp < num_states_; ++sp)
                    m(s, sp) = flat[flat_index(s, a, sp)];
            out.push_back(std::move(m));
        }
    }
    return out;
}

FeatureMap FeatureMap::shifted(const Eigen::VectorXd& shift) const {
    if (shift.size() != dim())
        throw ValidationError("FeatureMap::shifted: shift length does not match dim");
    FeatureMap f = *this;
    f.values_.rowwise() -= shift.transpose();
    f.centered_ = false;
    return f;
}

void Trajectory::validate(const TabularMdp& mdp, int max_len) const {
    const int n = length();
    if (n < 1) throw ValidationError("Trajectory: must contain at least one state");
    if (n > max_len) throw ValidationError("Trajectory: exceeds max length bound");
    if (static_cast<int>(actions.size()) != n - 1)
        throw ValidationError("Trajectory: action count must be one less than state count");
    for (int t = 0; t < n; ++t) {
        if (states[t] < 0 || states[t] >= mdp.num_states)
            throw ValidationError("Trajectory: state index out of range");
        if (t < n - 1 && mdp.is_terminal(states[t]))
            throw ValidationError("Trajectory: non-final state is terminal");
    }
    for (int t = 0; t < n - 1; ++t) {
        int a = actions[t];
        if (a < 0 || a >= mdp.num_actions)
            throw ValidationError("Trajectory: action index out of range");
        if (mdp.transition[a](states[t], states[t + 1]) <= 0.0)
            throw ValidationError("Trajectory: zero-probability transition at step " +
                                  std::to_string(t));
    }
    if (!mdp.is_terminal(states[n - 1]) && n != max_len)
        throw ValidationError("Trajectory: ends at a non-terminal state before the length bound");
}

void Policy::validate(const TabularMdp& mdp) const {
    if (probs.rows() != mdp.num_states || probs.cols() != mdp.num_actions)
        throw ValidationError("Policy: shape does not match MDP");
    for (int s = 0; s < mdp.num_states; ++s) {
        if (probs.row(s).minCoeff() < 0.0)
            throw ValidationError("Policy: negative action probability");
        if (std::abs(probs.row(s).sum() - 1.0) > kProbTolerance)
            throw ValidationError("Policy: row does not sum to 1 at state " + std::to_string(s));
    }
}

Eigen::VectorXd trajectory_features(const TabularMdp& mdp, const FeatureMap& fmap,
                                    const Trajectory& traj) {
    fmap.check_compatible(mdp);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(fmap.dim());
    double g = 1.0;
    for (std::size_t t = 0; t + 1 < traj.states.size(); ++t) {
        out += g * fmap.value(traj.states[t], traj.actions[t], traj.states[t + 1]).transpose();
        g *= mdp.discount;
    }
    return out;
}

double discounted_length(const TabularMdp& mdp, const Trajectory& traj) {
    double total = 0.0;
    double g = 1.0;
    for (std::size_t t = 0; t + 1 < traj.states.size(); ++t) {
        total += g;
        g *= mdp.discount;
    }
    return total;
}

namespace {

// R[a] accessor that tolerates the single-matrix broadcast used for
// state-based feature maps.
inline const Eigen::MatrixXd& reward_for_action(const std::vector<Eigen::MatrixXd>& reward,
                                                int a) {
    return reward.size() == 1 ? reward[0] : reward[static_cast<std::size_t>(a)];
}

// Expected immediate reward per (s, a) plus the action transition matrices.
struct Backup {
    std::vector<Eigen::VectorXd> expected_reward;  // [a](s)
    const TabularMdp* mdp;
};

Backup make_backup(const TabularMdp& mdp, const std::vector<Eigen::MatrixXd>& reward) {
    Backup b;
    b.mdp = &mdp;
    b.expected_reward.reserve(mdp.num_actions);
    for (int a = 0; a < mdp.num_actions; ++a)
        b.expected_reward.push_back(
            (mdp.transition[a].array() * reward_for_action(reward, a).array()).rowwise().sum());
    return b;
}

Policy greedy_from_q(const TabularMdp& mdp, const std::vector<Eigen::VectorXd>& q, double tol) {
    Policy pi;
    pi.probs = Eigen::MatrixXd::Zero(mdp.num_states, mdp.num_actions);
    for (int s = 0; s < mdp.num_states; ++s) {
        if (mdp.is_terminal(s)) {
            pi.probs.row(s).setConstant(1.0 / mdp.num_actions);
            continue;
        }
        double best = -std::numeric_limits<double>::infinity();
        for (int a = 0; a < mdp.num_actions; ++a) best = std::max(best, q[a][s]);
        int ties = 0;
        for (int a = 0; a < mdp.num_actions; ++a)
            if (q[a][s] >= best - tol) ++ties;
        for (int a = 0; a < mdp.num_actions; ++a)
            if (q[a][s] >= best - tol) pi.probs(s, a) = 1.0 / ties;
    }
    return pi;
}

}  // namespace

PlanResult value_iteration_table(const TabularMdp& mdp,
                                 const std::vector<Eigen::MatrixXd>& reward, double tol,
                                 const PlannerOptions& opts) {
    if (!(tol > 0.0)) throw ValidationError("value_iteration: tol must be positive");
    Backup b = make_backup(mdp, reward);
    Eigen::VectorXd v = Eigen::VectorXd::Zero(mdp.num_states);
    std::vector<Eigen::VectorXd> q(mdp.num_actions);
    double delta = std::numeric_limits<double>::infinity();
    int it = 0;
    for (; it < opts.max_iters; ++it) {
        for (int a = 0; a < mdp.num_actions; ++a)
            q[a] = b.expected_reward[a] + mdp.discount * (mdp.transition[a] * v);
        Eigen::VectorXd v_new(mdp.num_states);
        for (int s = 0; s < mdp.num_states; ++s) {
            if (mdp.is_terminal(s)) {
                v_new[s] = 0.0;
                continue;
            }
            double best = q[0][s];
            for (int a = 1; a < mdp.num_actions; ++a) best = std::max(best, q[a][s]);
            v_new[s] = best;
        }
        delta = (v_new - v).cwiseAbs().maxCoeff();
        v = std::move(v_new);
        if (delta <= tol) break;
    }
    if (delta > tol)
        throw ConvergenceError("value_iteration: iteration cap reached", delta);
    // Final Q under the converged values, for greedy extraction.
    for (int a = 0; a < mdp.num_actions; ++a)
        q[a] = b.expected_reward[a] + mdp.discount * (mdp.transition[a] * v);
    PlanResult res;
    res.values = std::move(v);
    res.policy = greedy_from_q(mdp, q, tol);
    res.iterations = it + 1;
    return res;
}

PlanResult value_iteration(const TabularMdp& mdp, const Eigen::VectorXd& reward_params,
                           const FeatureMap& fmap, double tol, const PlannerOptions& opts) {
    fmap.check_compatible(mdp);
    return value_iteration_table(mdp, fmap.reward_table(reward_params), tol, opts);
}

Eigen::VectorXd policy_evaluation_table(const TabularMdp& mdp, const Policy& policy,
                                        const std::vector<Eigen::MatrixXd>& reward, double tol,
                                        const PlannerOptions& opts) {
    if (!(tol > 0.0)) throw ValidationError("policy_evaluation: tol must be positive");
    policy.validate(mdp);
    Backup b = make_backup(mdp, reward);
    Eigen::VectorXd v = Eigen::VectorXd::Zero(mdp.num_states);
    double delta = std::numeric_limits<double>::infinity();
    for (int it = 0; it < opts.max_iters; ++it) {
        Eigen::VectorXd v_new = Eigen::VectorXd::Zero(mdp.num_states);
        for (int a = 0; a < mdp.num_actions; ++a)
            v_new += policy.probs.col(a).cwiseProduct(b.expected_reward[a] +
                                                      mdp.discount * (mdp.transition[a] * v));
        for (int s = 0; s < mdp.num_states; ++s)
            if (mdp.is_terminal(s)) v_new[s] = 0.0;
        delta = (v_new - v).cwiseAbs().maxCoeff();
        v = std::move(v_new);
        if (delta <= tol) return v;
    }
    throw ConvergenceError("policy_evaluation: iteration cap reached", delta);
}

Eigen::VectorXd policy_evaluation(const TabularMdp& mdp, const Policy& policy,
                                  const Eigen::VectorXd& reward_params, const FeatureMap& fmap,
                                  double tol, const PlannerOptions& opts) {
    fmap.check_compatible(mdp);
    return policy_evaluation_table(mdp, policy, fmap.reward_table(reward_params), tol, opts);
}

PlanResult minimizing_policy(const TabularMdp& mdp, const Eigen::VectorXd& reward_params,
                             const FeatureMap& fmap, double tol, const PlannerOptions& opts) {
    fmap.check_compatible(mdp);
    auto reward = fmap.reward_table(reward_params);
    std::vector<Eigen::MatrixXd> negated;
    negated.reserve(reward.size());
    for (const auto& m : reward) negated.push_back(-m);
    PlanResult res = value_iteration_table(mdp, negated, tol, opts);
    res.values = policy_evaluation_table(mdp, res.policy, reward, tol, opts);
    return res;
}

std::vector<Trajectory> sample_trajectories(const TabularMdp& mdp, const Policy& policy,
                                            int n, int max_len, std::uint64_t seed) {
    if (n < 1) throw ValidationError("sample_trajectories: n must be at least 1");
    if (max_len < 1) throw ValidationError("sample_trajectories: max_len must be at least 1");
    policy.validate(mdp);
    std::vector<Trajectory> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        Rng rng(derive_seed(seed, {seed_stream::kTrajectory, static_cast<std::uint64_t>(i)}));
        Trajectory traj;
        int s = rng.discrete(mdp.start_dist);
        traj.states.push_back(s);
        while (!mdp.is_terminal(s) && traj.length() < max_len) {
            int a = rng.discrete(policy.probs.row(s).transpose());
            int sp = rng.discrete(mdp.transition[a].row(s).transpose());
            traj.actions.push_back(a);
            traj.states.push_back(sp);
            s = sp;
        }
        out[static_cast<std::size_t>(i)] = std::move(traj);
    }
    return out;
}

}  // namespace miirl
