#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "miirl/behaviour_model.hpp"
#include "miirl/clustering.hpp"
#include "miirl/ensemble.hpp"
#include "miirl/maxent.hpp"

namespace miirl {

// Per-iteration telemetry of a run_em call.
struct EmTraceRow {
    int iteration = 0;
    double responsibility_change = 0.0;  // inf on the first pass without a prior u
    double train_nll = 0.0;              // mean per-trajectory negative log mixture likelihood
    double wall_time_s = 0.0;
    bool estep_fallback = false;         // some row fell back to uniform
    bool mstep_degenerate = false;       // some component kept its previous parameters
    bool mstep_nonconverged = false;     // some component fit hit its iteration cap
};

struct EmTrace {
    std::vector<EmTraceRow> rows;
    double initial_nll = 0.0;
    int iterations = 0;  // number of M-steps executed
    bool converged = false;
    double final_change = 0.0;  // the change that certified convergence
};

struct EStepDiagnostics {
    int fallback_rows = 0;
};

// Posterior intent responsibilities u_ik proportional to
// rho_k exp(theta_k' phi(tau_i) - ln Z(theta_k)); the q(tau) factor cancels in
// the row normalization and is never evaluated. Log-space with row max
// subtraction; an all-zero row falls back to uniform and is flagged.
ResponsibilityMatrix e_step(const RewardEnsemble& ensemble, const BehaviourModel& model,
                            const std::vector<Trajectory>& trajs,
                            EStepDiagnostics* diag = nullptr);

struct MStepDiagnostics {
    int degenerate_columns = 0;
    int nonconverged_fits = 0;
};

// rho_k = column mean of u; theta_k refit by weighted MLE warm-started from
// the previous component. A column with mass below 1e-12 keeps its previous
// parameters with its weight floored and renormalized, flagged.
RewardEnsemble m_step(const ResponsibilityMatrix& u, const BehaviourModel& model,
                      const std::vector<Trajectory>& trajs, const RewardEnsemble& prev_ensemble,
                      const FitOptions& fit_opts = {}, MStepDiagnostics* diag = nullptr);

// Average L1 responsibility change (1/N) sum_i sum_k |u_new - u_old|; lies in
// [0, 2].
double responsibility_change(const ResponsibilityMatrix& u_new,
                             const ResponsibilityMatrix& u_old);

struct EmOptions {
    double epsilon = 1e-2;  // convergence threshold on responsibility_change
    int max_iters = 100;
    FitOptions fit;
    // Responsibilities the initial ensemble was derived from (e.g. warm-start
    // memberships); used for the first trace row's change value.
    std::optional<ResponsibilityMatrix> initial_u;
};

struct RunEmResult {
    RewardEnsemble ensemble;
    ResponsibilityMatrix responsibilities;
    EmTrace trace;
};

// Alternates e_step / m_step until the responsibility change drops below
// epsilon or max_iters is reached. The first M-step always runs; convergence
// is judged on successive E-step responsibilities. M-step flags are recorded
// in the trace and never abort the loop.
RunEmResult run_em(const BehaviourModel& model, const std::vector<Trajectory>& trajs,
                   const RewardEnsemble& init, const EmOptions& opts = {});

// Mean per-trajectory negative log mixture likelihood under the ensemble.
double mixture_nll(const RewardEnsemble& ensemble, const BehaviourModel& model,
                   const std::vector<Trajectory>& trajs);

// Shifts per-transition features by (dataset mean trajectory feature) /
// (dataset mean discounted length), so the dataset mean of phi(tau) becomes
// zero; the result is marked centered.
FeatureMap center_features(const TabularMdp& mdp, const FeatureMap& fmap,
                           const std::vector<Trajectory>& trajs);

enum class ClusterMethod { KMeans, Gmm };
enum class InitMethod { Mean, Mle };

struct WarmStartOptions {
    KMeansOptions kmeans;
    GmmOptions gmm;
    FitOptions fit;  // for MLE initialization
};

struct WarmStartResult {
    RewardEnsemble ensemble;
    ResponsibilityMatrix memberships;  // hard one-hot for kmeans, soft for gmm
    int repaired_clusters = 0;
};

// Three-step initialization: cluster trajectory feature vectors, set
// rho_k from cluster masses, set theta_k to the (responsibility-weighted)
// cluster feature mean or the cluster weighted MLE.
WarmStartResult warmstart(const BehaviourModel& model, const std::vector<Trajectory>& trajs,
                          int k, ClusterMethod method, InitMethod init, std::uint64_t seed,
                          const WarmStartOptions& opts = {});

// Per-label MLE fits with rho = label frequencies. Labels must cover
// 0..K-1; an empty class is a structured error.
RewardEnsemble supervised_baseline(const BehaviourModel& model,
                                   const std::vector<Trajectory>& trajs,
                                   const std::vector<int>& labels,
                                   const FitOptions& fit_opts = {});

// theta_k ~ uniform on [-1, 1]^F with uniform mixture weights.
RewardEnsemble random_init(int feature_dim, int k, std::uint64_t seed);

}  // namespace miirl
