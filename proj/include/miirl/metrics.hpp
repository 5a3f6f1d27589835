#pragma once

#include <cstdint>
#include <string>

#include <Eigen/Dense>

#include "miirl/ensemble.hpp"
#include "miirl/mdp.hpp"

namespace miirl {

// Expected value difference: regret of the learned reward's optimal policy
// evaluated under the ground-truth reward, from the start distribution. Tiny
// negatives caused by planner tolerance are clamped to zero.
double evd(const TabularMdp& mdp, const FeatureMap& fmap, const Eigen::VectorXd& theta_gt,
           const Eigen::VectorXd& theta_learned, double tol);

struct GevdReport {
    Eigen::MatrixXd pairwise_evd;  // K_gt x K_learned
    Eigen::MatrixXd flow;          // optimal coupling, same shape
    double gevd = 0.0;
    double normalizer = 0.0;       // sum_i rho_gt_i * e*_i
    double normalized_gevd = 0.0;  // in [0, 1]
    bool degenerate_normalizer = false;
    bool clipped = false;          // normalized value exceeded 1 by solver/planner slack
};

// Optimal split-and-pair coupling of the two weighted ensembles minimizing
// weighted pairwise EVD (a transportation problem), with the tight
// normalizer built from each ground-truth reward's minimizing policy.
GevdReport gevd(const TabularMdp& mdp, const FeatureMap& fmap, const RewardEnsemble& ensemble_gt,
                const RewardEnsemble& ensemble_learned, double tol);

struct AnidReport {
    double mutual_information = 0.0;
    double entropy_u = 0.0;
    double entropy_v = 0.0;
    double expected_mi = 0.0;  // Monte Carlo estimate under the Dirichlet chance model
    double mc_stderr = 0.0;
    double anid = 0.0;         // clipped to [0, 1]
    bool clipped = false;
    bool degenerate = false;   // denominator below tolerance, reported as 0
    int mc_samples = 0;
    std::uint64_t mc_seed = 0;
};

// Adjusted max-normalized information distance between two soft clusterings,
// chance-corrected by row-wise Dirichlet(1/K) responsibility matrices. The
// Monte Carlo draw order depends only on the shape pair, so anid(U, V) and
// anid(V, U) agree exactly for the same mc_seed.
AnidReport anid(const ResponsibilityMatrix& u, const ResponsibilityMatrix& v,
                int mc_samples = 1000, std::uint64_t mc_seed = 0);

// Human-readable reward pairing table for diagnosing ensemble mismatches.
std::string pairing_table_text(const GevdReport& report);

}  // namespace miirl
