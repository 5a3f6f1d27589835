#pragma once

#include <vector>

#include <Eigen/Dense>

#include "miirl/errors.hpp"
#include "miirl/mdp.hpp"

namespace miirl {

// Linear reward parameters, R(s, a, s') = theta' phi(s, a, s').
struct RewardParams {
    Eigen::VectorXd theta;
};

// K (mixture weight, parameter vector) pairs. Used for both ground-truth and
// learned ensembles.
struct RewardEnsemble {
    Eigen::VectorXd weights;            // rho, length K
    std::vector<RewardParams> params;   // length K

    int size() const { return static_cast<int>(params.size()); }

    void validate() const {
        if (params.empty()) throw ValidationError("RewardEnsemble: empty ensemble");
        if (weights.size() != size())
            throw ValidationError("RewardEnsemble: weight/param count mismatch");
        if (weights.minCoeff() < 0.0)
            throw ValidationError("RewardEnsemble: negative mixture weight");
        if (std::abs(weights.sum() - 1.0) > kProbTolerance)
            throw ValidationError("RewardEnsemble: weights do not sum to 1");
        const long f = params.front().theta.size();
        for (const auto& p : params)
            if (p.theta.size() != f)
                throw ValidationError("RewardEnsemble: inconsistent parameter dimensions");
    }
};

// N x K row-stochastic soft assignment of demonstrations to intents.
struct ResponsibilityMatrix {
    Eigen::MatrixXd u;

    int rows() const { return static_cast<int>(u.rows()); }
    int cols() const { return static_cast<int>(u.cols()); }

    void validate() const {
        if (u.rows() == 0 || u.cols() == 0)
            throw ValidationError("ResponsibilityMatrix: empty matrix");
        for (int i = 0; i < u.rows(); ++i) {
            if (u.row(i).minCoeff() < 0.0)
                throw ValidationError("ResponsibilityMatrix: negative responsibility");
            if (std::abs(u.row(i).sum() - 1.0) > kProbTolerance)
                throw ValidationError("ResponsibilityMatrix: row does not sum to 1");
        }
    }

    // One-hot matrix from hard labels.
    static ResponsibilityMatrix from_labels(const std::vector<int>& labels, int k) {
        ResponsibilityMatrix r;
        r.u = Eigen::MatrixXd::Zero(static_cast<long>(labels.size()), k);
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (labels[i] < 0 || labels[i] >= k)
                throw ValidationError("ResponsibilityMatrix: label out of range");
            r.u(static_cast<long>(i), labels[i]) = 1.0;
        }
        return r;
    }
};

}  // namespace miirl
