#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "miirl/errors.hpp"

namespace miirl {

constexpr double kProbTolerance = 1e-9;

// Finite state/action environment: transition kernel, start distribution,
// discount and an absorbing terminal set. Terminal states end episodes and
// yield no further reward after entry.
struct TabularMdp {
    int num_states = 0;
    int num_actions = 0;
    // transition[a](s, s') = p(s' | s, a)
    std::vector<Eigen::MatrixXd> transition;
    Eigen::VectorXd start_dist;
    double discount = 0.0;
    std::vector<std::uint8_t> terminal;  // mask, length num_states

    bool is_terminal(int s) const { return terminal[static_cast<std::size_t>(s)] != 0; }

    std::vector<int> terminal_states() const {
        std::vector<int> out;
        for (int s = 0; s < num_states; ++s)
            if (is_terminal(s)) out.push_back(s);
        return out;
    }

    // Throws ValidationError unless rows of T and p0 are distributions,
    // the discount lies in [0, 1) and terminal states are absorbing.
    void validate() const;
};

// Per-transition feature vectors phi(s, a, s') of a fixed dimension.
// State-only maps are stored compactly as phi(s') and broadcast over (s, a).
class FeatureMap {
public:
    FeatureMap() = default;

    // values: num_states x dim, row s' holds phi(s').
    static FeatureMap from_state_features(Eigen::MatrixXd values);

    // values: flat (s * A * S' + a * S' + s') x dim layout.
    static FeatureMap from_transition_features(int num_states, int num_actions,
                                               Eigen::MatrixXd values);

    int dim() const { return static_cast<int>(values_.cols()); }
    bool is_state_based() const { return state_based_; }
    bool centered() const { return centered_; }
    void mark_centered(bool c) { centered_ = c; }
    int num_states() const { return num_states_; }
    int num_actions() const { return num_actions_; }

    // phi(s, a, s') as a row expression.
    Eigen::MatrixXd::ConstRowXpr value(int s, int a, int sp) const {
        return values_.row(state_based_ ? sp : flat_index(s, a, sp));
    }

    // R[a](s, s') = theta' phi(s, a, s'), materialized densely.
    std::vector<Eigen::MatrixXd> reward_table(const Eigen::VectorXd& theta) const;

    // Map with phi'(s, a, s') = phi(s, a, s') - shift.
    FeatureMap shifted(const Eigen::VectorXd& shift) const;

    // Raw storage, rows as described by is_state_based().
    const Eigen::MatrixXd& raw_values() const { return values_; }

    void check_compatible(const TabularMdp& mdp) const;

private:
    int flat_index(int s, int a, int sp) const {
        return (s * num_actions_ + a) * num_states_ + sp;
    }

    Eigen::MatrixXd values_;
    int num_states_ = 0;
    int num_actions_ = 0;
    bool state_based_ = true;
    bool centered_ = false;
};

// State/action sequence. states has one more element than actions; the global
// length bound L counts states.
struct Trajectory {
    std::vector<int> states;
    std::vector<int> actions;

    int length() const { return static_cast<int>(states.size()); }

    // Validity against an MDP and the bound L: positive-probability
    // transitions, no terminal state before the end, final state terminal or
    // length exactly L.
    void validate(const TabularMdp& mdp, int max_len) const;
};

// Row-stochastic action distribution per state.
struct Policy {
    Eigen::MatrixXd probs;  // num_states x num_actions

    void validate(const TabularMdp& mdp) const;
};

struct PlannerOptions {
    int max_iters = 1000000;
};

struct PlanResult {
    Eigen::VectorXd values;
    Policy policy;
    int iterations = 0;
};

// Discounted feature sum phi(tau) = sum_t gamma^(t-1) phi(s_t, a_t, s_{t+1}).
// A single-state trajectory returns the zero vector.
Eigen::VectorXd trajectory_features(const TabularMdp& mdp, const FeatureMap& fmap,
                                    const Trajectory& traj);

// Discounted step count sum_t gamma^(t-1) over the trajectory's transitions.
double discounted_length(const TabularMdp& mdp, const Trajectory& traj);

// Value iteration under R(s,a,s') = theta' phi(s,a,s'). Returns state values
// with Bellman-optimality residual below tol and the greedy policy that
// spreads probability uniformly over all actions within tol of the max
// Q-value. Terminal states have value 0 and a uniform policy row.
PlanResult value_iteration(const TabularMdp& mdp, const Eigen::VectorXd& reward_params,
                           const FeatureMap& fmap, double tol,
                           const PlannerOptions& opts = {});

// Same, on a precomputed reward table (used internally and by metrics).
PlanResult value_iteration_table(const TabularMdp& mdp,
                                 const std::vector<Eigen::MatrixXd>& reward,
                                 double tol, const PlannerOptions& opts = {});

// Greedy policy for the negated reward, evaluated under the original reward.
PlanResult minimizing_policy(const TabularMdp& mdp, const Eigen::VectorXd& reward_params,
                             const FeatureMap& fmap, double tol,
                             const PlannerOptions& opts = {});

// Iterative Bellman-expectation evaluation of a fixed policy.
Eigen::VectorXd policy_evaluation(const TabularMdp& mdp, const Policy& policy,
                                  const Eigen::VectorXd& reward_params,
                                  const FeatureMap& fmap, double tol,
                                  const PlannerOptions& opts = {});

Eigen::VectorXd policy_evaluation_table(const TabularMdp& mdp, const Policy& policy,
                                        const std::vector<Eigen::MatrixXd>& reward,
                                        double tol, const PlannerOptions& opts = {});

// n i.i.d. trajectories under the policy. Episodes stop on entering a
// terminal state or at max_len states. Deterministic given seed.
std::vector<Trajectory> sample_trajectories(const TabularMdp& mdp, const Policy& policy,
                                            int n, int max_len, std::uint64_t seed);

}  // namespace miirl
