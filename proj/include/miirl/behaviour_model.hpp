#pragma once

#include <vector>

#include <Eigen/Dense>

#include "miirl/ensemble.hpp"
#include "miirl/mdp.hpp"

namespace miirl {

struct FitOptions {
    double tol = 1e-5;      // on the gradient infinity norm
    int max_iters = 500;
    double l2 = 0.0;        // ridge penalty coefficient on the normalized objective
};

struct FitResult {
    RewardParams params;
    bool converged = false;
    int iterations = 0;
    double grad_inf_norm = 0.0;
    double objective = 0.0;  // normalized weighted log-likelihood (up to the ln q constant)
};

// Single-intent behaviour model of the exponential-family form
// p(tau | theta) = q(tau) exp(theta' phi(tau)) / Z(theta). The EM learner is
// written against this surface so alternative trajectory models can slot in.
class BehaviourModel {
public:
    virtual ~BehaviourModel() = default;

    virtual int feature_dim() const = 0;
    virtual Eigen::VectorXd trajectory_features(const Trajectory& traj) const = 0;
    virtual double log_partition(const Eigen::VectorXd& theta) const = 0;
    // ln of the theta-independent base measure q(tau).
    virtual double log_prior(const Trajectory& traj) const = 0;
    // Weighted maximum-likelihood fit of a single component.
    virtual FitResult fit_weighted(const std::vector<Trajectory>& trajs,
                                   const Eigen::VectorXd& weights,
                                   const Eigen::VectorXd& init_theta,
                                   const FitOptions& opts) const = 0;
};

}  // namespace miirl
