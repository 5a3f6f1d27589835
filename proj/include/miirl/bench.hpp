#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "miirl/element_world.hpp"
#include "miirl/em.hpp"
#include "miirl/metrics.hpp"
#include "miirl/serialization.hpp"

namespace miirl {

enum class Algorithm {
    LimiirlMle,
    LimiirlMean,
    LimiirlGmmMle,
    LimiirlGmmMean,
    Random,
    Supervised,
};

std::string algorithm_name(Algorithm a);
Algorithm algorithm_from_name(const std::string& name);

struct ExperimentConfig {
    ElementWorldConfig environment;        // per-seed instances derive their own seeds
    std::string instance_path;             // non-empty: load a serialized instance instead
    std::vector<Algorithm> algorithms = {Algorithm::LimiirlMle};
    int num_clusters = 0;                  // K; 0 means K = E
    int n_train = 100;
    int n_test = 100;
    double em_epsilon = 1e-2;
    int em_max_iters = 100;
    double planner_tol = 1e-7;
    double imbalance_p = 0.0;              // geometric intent weights; 0 = uniform
    std::vector<std::uint64_t> seeds = {0};
    bool compute_anid = true;
    bool compute_gevd = true;
    int anid_mc_samples = 1000;
    int workers = 0;                       // 0 = hardware concurrency
    std::string output_path;

    void validate() const;
};

ExperimentConfig experiment_config_from_json(const json& j);
json experiment_config_to_json(const ExperimentConfig& config);

struct RunRecord {
    Algorithm algorithm = Algorithm::LimiirlMle;
    std::uint64_t seed = 0;
    int iterations = 0;        // EM iterations; supervised has none (reported N/A)
    double wall_time_s = 0.0;
    double test_nll = 0.0;     // mean per-trajectory negative log mixture likelihood
    double anid = 0.0;
    double gevd = 0.0;
    double normalized_gevd = 0.0;
    bool converged = false;
    bool failed = false;
    std::string error;
    RewardEnsemble ensemble;   // the fitted ensemble (not serialized into CSV)
};

struct MetricAggregate {
    double mean = 0.0;
    double ci95 = 0.0;  // 1.96 * sample std / sqrt(runs)
};

struct AlgorithmSummary {
    Algorithm algorithm = Algorithm::LimiirlMle;
    int runs = 0;
    int failures = 0;
    MetricAggregate iterations, wall_time_s, test_nll, anid, gevd, normalized_gevd;
};

struct BenchResult {
    std::vector<RunRecord> records;
    std::vector<AlgorithmSummary> summaries;
    bool any_failed = false;
};

// Per (algorithm, seed): generate the instance, sample train/test sets, fit,
// then score test NLL, ANID against the ground-truth labels and GEVD against
// the ground-truth ensemble. Seeds share instances across algorithms for
// paired comparisons. Per-seed failures are recorded and do not stop the run.
BenchResult run_experiment(const ExperimentConfig& config);

enum class SweepAxis { NumDemos, Wind, NumClusters, NumElements, ImbalanceP, ClusteringMethod };

SweepAxis sweep_axis_from_name(const std::string& name);
std::string sweep_axis_name(SweepAxis axis);

struct SweepCell {
    std::string axis_value;
    BenchResult result;
    double mean_intercluster_margin = 0.0;  // separation diagnostic per cell
};

struct SweepResult {
    SweepAxis axis;
    std::vector<SweepCell> cells;
};

// Cross product of axis values x algorithms x seeds; numeric axes take the
// values list, the clustering-method axis takes {"kmeans", "gmm"}.
SweepResult run_sweep(const ExperimentConfig& base, SweepAxis axis,
                      const std::vector<std::string>& values);

// Long-format CSV: one row per run plus mean/ci95 aggregate rows per cell.
std::string sweep_to_csv(const SweepResult& sweep);
std::string bench_to_csv(const BenchResult& result);

// Plain-text summary table (mean +/- 95% CI per algorithm).
std::string bench_table_text(const BenchResult& result);

json bench_to_json(const BenchResult& result);

}  // namespace miirl
