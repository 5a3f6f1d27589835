#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "miirl/em.hpp"
#include "miirl/ensemble.hpp"
#include "miirl/maxent.hpp"

namespace miirl {

// Largest margin by which the probe separates A from B:
// min over (a in A, b in B) of probe' (phi_a - phi_b). Rows are points.
double separation_margin(const Eigen::VectorXd& probe, const Eigen::MatrixXd& set_a,
                         const Eigen::MatrixXd& set_b);

// Mean over unordered intent pairs of the minimum pairwise feature distance
// between the two intents' point sets (the wind-sweep separation diagnostic).
double mean_intercluster_margin(const Eigen::MatrixXd& features,
                                const std::vector<int>& intent_labels);

// Rule for declaring the atypical part of each intent: drop the given
// fraction of points with the lowest probe margin. Zero keeps everything
// typical.
struct TypicalSplit {
    double atypical_fraction = 0.0;
};

struct SeparationReport {
    int num_intents = 0;
    double d = 0.0;             // inter-cluster separation margin
    double gamma_margin = 0.0;  // typical/atypical margin (0 when no atypical points)
    double zeta = 0.0;
    double delta = 0.0;
    Eigen::VectorXd radii;      // r_k, half the max pairwise distance within each typical set
    double d_tilde = 0.0;       // (1 - 2 delta) d
    double gamma_tilde = 0.0;   // (1 - 2 delta) gamma
    double beta = 0.0;
    double epsilon_bound = 0.0;
    Eigen::VectorXd q_masses;      // Q_k
    Eigen::VectorXd q_not_masses;  // Q_{~k}
    std::vector<Eigen::VectorXd> phi_bar;  // cluster feature means, aligned to intents
    Eigen::VectorXd cluster_sizes;         // |C_k|
    Eigen::VectorXd cone_angles;           // asin(r_k / |Phi_k|), informational
    bool assumption1a_holds = false;
    bool assumption1b_holds = false;
    bool assumption2_holds = false;
    bool empirical_q = true;  // Q estimated from data rather than enumerated exactly
};

// Measures every separation quantity on concrete data. features holds one
// point per trajectory; intent_labels assigns each to its expert.
// cluster_assignments defaults to the labels (a perfect clustering);
// extra_features holds trajectories outside every intent (exact-enumeration
// garbage) and only ever acts as the far side of a margin. Passing exact
// q-masses (with the total mass of the trajectory class) replaces the
// empirical stand-ins.
SeparationReport assess_assumptions(const Eigen::MatrixXd& features,
                                    const std::vector<int>& intent_labels,
                                    const TypicalSplit& split = {},
                                    std::vector<int> cluster_assignments = {},
                                    const Eigen::VectorXd& exact_q_masses = Eigen::VectorXd(),
                                    double total_q_mass = 0.0,
                                    const Eigen::MatrixXd& extra_features = Eigen::MatrixXd());

struct Theorem1Bound {
    double beta = 0.0;  // +inf encodes an overflowed exponential product
    double epsilon = 0.0;
};

// epsilon = 2 delta + (1 - delta) 2 (K - 1) / (beta + K - 1), with beta the
// minimum over ordered intent pairs of the separation product. Computed in
// log space; overflow maps to beta = +inf and epsilon = 2 delta.
Theorem1Bound theorem1_bound(const SeparationReport& report,
                             const Eigen::VectorXd& cluster_sizes, int k);

struct VerifyBoundOptions {
    TypicalSplit split;
    // Expert policies; with them the trajectory class is enumerated (up to
    // enumeration_cap) for exact q-masses and population margin sets.
    std::vector<Policy> expert_policies;
    std::size_t enumeration_cap = 200;
};

struct VerifyBoundResult {
    double epsilon_bound = 0.0;
    double observed_first_step_change = 0.0;
    bool certified = false;  // assumptions hold with exact constants
    SeparationReport report;
};

// Runs the mean-init warm start on centered features, performs one E-step,
// and compares the observed responsibility change against the Theorem-1
// bound computed from the measured constants. certified is set only when
// every assumption clause holds and the q-masses are exact.
VerifyBoundResult verify_bound_on_instance(const MaxEntModel& model,
                                           const std::vector<Trajectory>& trajs,
                                           const std::vector<int>& intent_labels, int k,
                                           std::uint64_t seed,
                                           const VerifyBoundOptions& opts = {});

}  // namespace miirl
