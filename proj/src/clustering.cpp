#include "miirl/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "miirl/errors.hpp"
#include "miirl/parallel.hpp"
#include "miirl/rng.hpp"

namespace miirl {

namespace {

double sq_dist(const Eigen::MatrixXd& data, long i, const Eigen::MatrixXd& centroids, long c) {
    return (data.row(i) - centroids.row(c)).squaredNorm();
}

Eigen::MatrixXd kmeanspp_seed(const Eigen::MatrixXd& data, int k, Rng& rng) {
    const long n = data.rows();
    Eigen::MatrixXd centroids(k, data.cols());
    centroids.row(0) = data.row(rng.uniform_int(static_cast<int>(n)));
    Eigen::VectorXd d2(n);
    for (long i = 0; i < n; ++i) d2[i] = sq_dist(data, i, centroids, 0);
    for (int c = 1; c < k; ++c) {
        double total = d2.sum();
        long pick;
        if (total > 0.0) {
            pick = rng.discrete(d2);
        } else {
            pick = rng.uniform_int(static_cast<int>(n));  // all points coincide
        }
        centroids.row(c) = data.row(pick);
        for (long i = 0; i < n; ++i) d2[i] = std::min(d2[i], sq_dist(data, i, centroids, c));
    }
    return centroids;
}

KMeansResult kmeans_single(const Eigen::MatrixXd& data, int k, std::uint64_t seed,
                           const KMeansOptions& opts) {
    const long n = data.rows();
    Rng rng(seed);
    KMeansResult res;
    res.centroids = kmeanspp_seed(data, k, rng);
    res.assignments.assign(static_cast<std::size_t>(n), 0);

    auto assign = [&]() {
        double inertia = 0.0;
        for (long i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            int arg = 0;
            for (int c = 0; c < k; ++c) {
                double d = sq_dist(data, i, res.centroids, c);
                if (d < best) {
                    best = d;
                    arg = c;
                }
            }
            res.assignments[static_cast<std::size_t>(i)] = arg;
            inertia += best;
        }
        return inertia;
    };

    for (int it = 0; it < opts.max_iters; ++it) {
        res.inertia = assign();
        // Means; empty clusters get re-seeded at the point farthest from its
        // centroid, then assignment is redone.
        Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, data.cols());
        Eigen::VectorXd counts = Eigen::VectorXd::Zero(k);
        for (long i = 0; i < n; ++i) {
            sums.row(res.assignments[static_cast<std::size_t>(i)]) += data.row(i);
            counts[res.assignments[static_cast<std::size_t>(i)]] += 1.0;
        }
        bool repaired = false;
        for (int c = 0; c < k; ++c) {
            if (counts[c] > 0.0) continue;
            long farthest = 0;
            double best = -1.0;
            for (long i = 0; i < n; ++i) {
                double d = sq_dist(data, i, res.centroids,
                                   res.assignments[static_cast<std::size_t>(i)]);
                if (d > best) {
                    best = d;
                    farthest = i;
                }
            }
            sums.row(c) = data.row(farthest);
            counts[c] = 1.0;
            ++res.repaired_clusters;
            repaired = true;
        }
        Eigen::MatrixXd next = sums.array().colwise() / counts.array();
        double moved = (next - res.centroids).rowwise().norm().maxCoeff();
        res.centroids = std::move(next);
        if (!repaired && moved <= opts.tol) break;
    }
    res.inertia = assign();
    return res;
}

}  // namespace

KMeansResult kmeans(const Eigen::MatrixXd& data, int k, std::uint64_t seed,
                    const KMeansOptions& opts) {
    if (data.rows() == 0) throw ValidationError("kmeans: empty data");
    if (k < 1 || k > data.rows())
        throw ValidationError("kmeans: k must lie in [1, N]");
    std::vector<KMeansResult> runs(static_cast<std::size_t>(opts.restarts));
    parallel_for(opts.restarts, default_worker_count(), [&](int r) {
        runs[static_cast<std::size_t>(r)] = kmeans_single(
            data, k,
            derive_seed(seed, {seed_stream::kClusterRestart, static_cast<std::uint64_t>(r)}),
            opts);
    });
    int best = 0;
    for (int r = 1; r < opts.restarts; ++r)
        if (runs[static_cast<std::size_t>(r)].inertia < runs[static_cast<std::size_t>(best)].inertia)
            best = r;
    return runs[static_cast<std::size_t>(best)];
}

GmmResult gmm_fit(const Eigen::MatrixXd& data, int k, std::uint64_t seed,
                  const GmmOptions& opts) {
    if (data.rows() == 0) throw ValidationError("gmm_fit: empty data");
    if (k < 1 || k > data.rows())
        throw ValidationError("gmm_fit: k must lie in [1, N]");
    const long n = data.rows();
    const long f = data.cols();

    KMeansResult init = kmeans(data, k, seed);
    GmmResult res;
    res.means = init.centroids;
    res.weights = Eigen::VectorXd::Constant(k, 1.0 / k);
    // Shared initial variances from the global spread.
    Eigen::RowVectorXd mean = data.colwise().mean();
    Eigen::RowVectorXd var =
        ((data.rowwise() - mean).array().square().colwise().sum() / std::max<long>(n, 1))
            .matrix();
    res.variances = var.cwiseMax(opts.variance_floor).replicate(k, 1);
    res.responsibilities = Eigen::MatrixXd::Zero(n, k);

    double prev_ll = -std::numeric_limits<double>::infinity();
    for (int it = 0; it < opts.max_iters; ++it) {
        // E-step in log space.
        double ll = 0.0;
        for (long i = 0; i < n; ++i) {
            Eigen::VectorXd logp(k);
            for (int c = 0; c < k; ++c) {
                double acc = std::log(std::max(res.weights[c], 1e-300));
                for (long d = 0; d < f; ++d) {
                    double v = res.variances(c, d);
                    double diff = data(i, d) - res.means(c, d);
                    acc += -0.5 * (std::log(2.0 * M_PI * v) + diff * diff / v);
                }
                logp[c] = acc;
            }
            double m = logp.maxCoeff();
            Eigen::VectorXd p = (logp.array() - m).exp();
            double s = p.sum();
            res.responsibilities.row(i) = (p / s).transpose();
            ll += m + std::log(s);
        }
        ll /= static_cast<double>(n);
        // M-step.
        Eigen::VectorXd nk = res.responsibilities.colwise().sum();
        for (int c = 0; c < k; ++c) {
            double mass = std::max(nk[c], 1e-12);
            res.weights[c] = nk[c] / static_cast<double>(n);
            Eigen::RowVectorXd mu = Eigen::RowVectorXd::Zero(f);
            for (long i = 0; i < n; ++i) mu += res.responsibilities(i, c) * data.row(i);
            mu /= mass;
            Eigen::RowVectorXd v2 = Eigen::RowVectorXd::Zero(f);
            for (long i = 0; i < n; ++i)
                v2 += res.responsibilities(i, c) *
                      (data.row(i) - mu).array().square().matrix();
            res.means.row(c) = mu;
            res.variances.row(c) = (v2 / mass).cwiseMax(opts.variance_floor);
        }
        res.weights /= res.weights.sum();
        res.log_likelihood = ll;
        if (std::abs(ll - prev_ll) <= opts.tol) {
            res.converged = true;
            break;
        }
        prev_ll = ll;
    }
    return res;
}

}  // namespace miirl
