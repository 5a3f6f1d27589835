#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace miirl {

struct KMeansOptions {
    int restarts = 10;
    int max_iters = 300;
    double tol = 1e-10;  // on centroid movement
};

struct KMeansResult {
    Eigen::MatrixXd centroids;     // K x F
    std::vector<int> assignments;  // length N
    double inertia = 0.0;
    int repaired_clusters = 0;     // empty clusters re-seeded at the farthest point
};

// Lloyd's algorithm with kmeans++ seeding; the best of `restarts` runs by
// inertia wins (ties to the lowest restart index). Deterministic given seed;
// restarts run concurrently on pre-derived seeds.
KMeansResult kmeans(const Eigen::MatrixXd& data, int k, std::uint64_t seed,
                    const KMeansOptions& opts = {});

struct GmmOptions {
    int max_iters = 200;
    double tol = 1e-8;            // on per-point log-likelihood change
    double variance_floor = 1e-6;
};

struct GmmResult {
    Eigen::MatrixXd means;             // K x F
    Eigen::MatrixXd variances;         // K x F, diagonal covariances
    Eigen::VectorXd weights;           // K
    Eigen::MatrixXd responsibilities;  // N x K
    double log_likelihood = 0.0;
    bool converged = false;
};

// Diagonal-covariance Gaussian mixture fit by EM, initialized from a k-means
// run on the same derived seed.
GmmResult gmm_fit(const Eigen::MatrixXd& data, int k, std::uint64_t seed,
                  const GmmOptions& opts = {});

}  // namespace miirl
