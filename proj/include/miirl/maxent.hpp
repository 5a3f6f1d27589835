#pragma once

#include <vector>

#include <Eigen/Dense>

#include "miirl/behaviour_model.hpp"
#include "miirl/ensemble.hpp"
#include "miirl/mdp.hpp"

namespace miirl {

// Exact MaxEnt trajectory model over the class T of trajectories that end at
// a terminal state or reach the horizon L (in states):
//
//   p(tau | theta) = q(tau) exp(theta' phi(tau)) / Z(theta)
//
// q is the path measure of the uniform reference policy,
// q(tau) = p0(s_1) prod_t T(s_{t+1} | s_t, a_t) / |A|, so that q sums to one
// over T and Z(0) = 1. Partition sums and feature expectations are computed
// exactly by time-indexed forward/backward passes (the per-step weight
// carries gamma^(t-1), so the recursion is not stationary), stabilized by
// per-step rescaling.
class MaxEntModel : public BehaviourModel {
public:
    MaxEntModel(TabularMdp mdp, FeatureMap fmap, int horizon);

    const TabularMdp& mdp() const { return mdp_; }
    const FeatureMap& fmap() const { return fmap_; }
    int horizon() const { return horizon_; }
    int feature_dim() const override { return fmap_.dim(); }

    // ln Z(theta).
    double log_partition(const Eigen::VectorXd& theta) const override;

    // ln q(tau) + theta' phi(tau) - ln Z(theta). Rejects trajectories outside
    // T (overlong, zero-probability transitions) with a structured error.
    double log_likelihood(const Eigen::VectorXd& theta, const Trajectory& traj) const;

    // ln q(tau).
    double log_prior(const Trajectory& traj) const override;

    // E_{tau ~ p(.|theta)}[phi(tau)] = grad_theta ln Z(theta).
    Eigen::VectorXd expected_features(const Eigen::VectorXd& theta) const;

    Eigen::VectorXd trajectory_features(const Trajectory& traj) const override {
        return miirl::trajectory_features(mdp_, fmap_, traj);
    }

    FitResult fit_weighted(const std::vector<Trajectory>& trajs, const Eigen::VectorXd& weights,
                           const Eigen::VectorXd& init_theta,
                           const FitOptions& opts) const override;

private:
    struct Edge {
        int s;
        int a;
        int sp;
        double log_q_step;  // ln T(s,a,s') - ln |A|
    };

    struct ForwardResult {
        // log_alpha[t][s]: log total weight of prefixes reaching state s at
        // time t+1 (0-based t).
        std::vector<Eigen::VectorXd> log_alpha;
        double log_z;
    };

    ForwardResult forward(const Eigen::VectorXd& edge_scores) const;
    std::vector<Eigen::VectorXd> backward(const Eigen::VectorXd& edge_scores) const;

    TabularMdp mdp_;
    FeatureMap fmap_;
    int horizon_;
    std::vector<Edge> edges_;
    Eigen::MatrixXd edge_phi_;       // num_edges x F
    std::vector<double> gamma_pow_;  // gamma^t for t = 0..L-2
};

// Maximizes sum_i w_i ln p(tau_i | theta) by gradient ascent with backtracking
// line search on the concave objective. Non-convergence at the iteration cap
// returns the best iterate flagged converged = false.
FitResult fit_weighted_mle(const MaxEntModel& model, const std::vector<Trajectory>& trajs,
                           const Eigen::VectorXd& weights, const Eigen::VectorXd& init_theta,
                           const FitOptions& opts = {});

// One member of the exhaustively enumerated trajectory class T.
struct EnumeratedTrajectory {
    Trajectory traj;
    double log_q;
    Eigen::VectorXd features;
};

// Enumerates T by depth-first search. Used for exact q-mass computations on
// small instances; throws ValidationError when the class exceeds max_count.
std::vector<EnumeratedTrajectory> enumerate_trajectories(const MaxEntModel& model,
                                                         std::size_t max_count = 200000);

}  // namespace miirl
