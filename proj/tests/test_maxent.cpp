#include <doctest.h>

#include <cmath>

#include "miirl/maxent.hpp"
#include "miirl/rng.hpp"
#include "oracles.hpp"

using namespace miirl;

namespace {

// 2-state MDP with one terminal state reachable from the other.
MaxEntModel two_state_model(double gamma, int horizon, Rng& rng) {
    TabularMdp mdp;
    mdp.num_states = 2;
    mdp.num_actions = 2;
    mdp.discount = gamma;
    mdp.terminal = {0, 1};
    mdp.transition.assign(2, Eigen::MatrixXd::Zero(2, 2));
    mdp.transition[0](0, 0) = 0.6;
    mdp.transition[0](0, 1) = 0.4;
    mdp.transition[1](0, 0) = 0.2;
    mdp.transition[1](0, 1) = 0.8;
    for (int a = 0; a < 2; ++a) mdp.transition[static_cast<std::size_t>(a)](1, 1) = 1.0;
    mdp.start_dist = Eigen::VectorXd::Zero(2);
    mdp.start_dist[0] = 1.0;
    mdp.validate();
    FeatureMap fmap = oracle::random_transition_features(2, 2, 2, rng);
    return MaxEntModel(std::move(mdp), std::move(fmap), horizon);
}

}  // namespace

TEST_CASE("log_partition: zero parameters normalize to ln Z = 0") {
    Rng rng(3);
    for (int round = 0; round < 5; ++round) {
        TabularMdp mdp = oracle::random_mdp(4, 2, 0.8, 0.3, rng);
        FeatureMap fmap = oracle::random_state_features(4, 2, rng);
        MaxEntModel model(mdp, fmap, 4);
        CHECK(model.log_partition(Eigen::VectorXd::Zero(2)) == doctest::Approx(0.0).epsilon(1e-12));
    }
}

TEST_CASE("log_partition matches exhaustive enumeration on a 2-state MDP") {
    Rng rng(17);
    MaxEntModel model = two_state_model(0.9, 3, rng);
    auto paths = oracle::enumerate_paths(model.mdp(), model.fmap(), 3);
    for (int round = 0; round < 10; ++round) {
        Eigen::VectorXd theta(2);
        theta << rng.normal(), rng.normal();
        double expect = std::log(oracle::oracle_partition(paths, theta));
        CHECK(model.log_partition(theta) == doctest::Approx(expect).epsilon(1e-10));
    }
}

TEST_CASE("log_partition: uniform per-step translation tilts each length class") {
    Rng rng(29);
    MaxEntModel model = two_state_model(0.9, 3, rng);
    auto paths = oracle::enumerate_paths(model.mdp(), model.fmap(), 3);
    Eigen::VectorXd theta(2);
    theta << 0.4, -0.7;

    // Shift every transition's score by a constant c: each trajectory's
    // weight multiplies by exp(c * discounted length); checked against the
    // same enumeration oracle on the shifted map.
    const double c = 0.6;
    Eigen::MatrixXd phi2(model.fmap().raw_values().rows(), 3);
    phi2.leftCols(2) = model.fmap().raw_values();
    phi2.col(2).setConstant(1.0);
    FeatureMap augmented =
        FeatureMap::from_transition_features(2, 2, std::move(phi2));
    MaxEntModel shifted(model.mdp(), augmented, 3);
    Eigen::VectorXd theta3(3);
    theta3 << theta[0], theta[1], c;

    auto paths3 = oracle::enumerate_paths(shifted.mdp(), shifted.fmap(), 3);
    double expect = std::log(oracle::oracle_partition(paths3, theta3));
    CHECK(shifted.log_partition(theta3) == doctest::Approx(expect).epsilon(1e-10));

    // Cross-check against the hand-tilted unshifted oracle.
    double tilted = 0.0;
    for (const auto& p : paths) {
        double disc_len = 0.0;
        for (std::size_t t = 0; t + 1 < p.states.size(); ++t)
            disc_len += std::pow(model.mdp().discount, static_cast<double>(t));
        tilted += p.q * std::exp(theta.dot(p.features) + c * disc_len);
    }
    CHECK(shifted.log_partition(theta3) == doctest::Approx(std::log(tilted)).epsilon(1e-10));
}

TEST_CASE("log_likelihood: zero parameters reduce to ln q") {
    Rng rng(31);
    MaxEntModel model = two_state_model(0.85, 3, rng);
    Trajectory traj;
    traj.states = {0, 1};
    traj.actions = {1};
    double lq = std::log(1.0) + std::log(0.8) - std::log(2.0);
    CHECK(model.log_likelihood(Eigen::VectorXd::Zero(2), traj) ==
          doctest::Approx(lq).epsilon(1e-12));
}

TEST_CASE("exp(log_likelihood) sums to one over the enumerated class") {
    Rng rng(37);
    for (int round = 0; round < 5; ++round) {
        TabularMdp mdp = oracle::random_mdp(3, 2, 0.9, 0.4, rng);
        FeatureMap fmap = oracle::random_state_features(3, 2, rng);
        MaxEntModel model(mdp, fmap, 3);
        auto paths = oracle::enumerate_paths(mdp, fmap, 3);
        Eigen::VectorXd theta(2);
        theta << rng.normal(), rng.normal();
        double total = 0.0;
        for (const auto& p : paths) {
            Trajectory traj;
            traj.states = p.states;
            traj.actions = p.actions;
            total += std::exp(model.log_likelihood(theta, traj));
        }
        CHECK(total == doctest::Approx(1.0).epsilon(1e-10));
    }
}

TEST_CASE("doubling theta shifts two-trajectory log odds by theta'(phi1 - phi2)") {
    Rng rng(41);
    MaxEntModel model = two_state_model(0.9, 2, rng);
    Trajectory t1, t2;
    t1.states = {0, 1};
    t1.actions = {0};
    t2.states = {0, 1};
    t2.actions = {1};
    Eigen::VectorXd theta(2);
    theta << 0.3, -1.1;
    Eigen::VectorXd diff = model.trajectory_features(t1) - model.trajectory_features(t2);
    double odds1 = model.log_likelihood(theta, t1) - model.log_likelihood(theta, t2);
    double odds2 = model.log_likelihood(2.0 * theta, t1) - model.log_likelihood(2.0 * theta, t2);
    CHECK(odds2 - odds1 == doctest::Approx(theta.dot(diff)).epsilon(1e-10));
}

TEST_CASE("log_likelihood rejects malformed demonstrations") {
    Rng rng(43);
    MaxEntModel model = two_state_model(0.9, 3, rng);
    Trajectory overlong;
    overlong.states = {0, 0, 0, 0, 1};
    overlong.actions = {0, 0, 0, 0};
    CHECK_THROWS_AS(model.log_likelihood(Eigen::VectorXd::Zero(2), overlong), ValidationError);
    Trajectory impossible;
    impossible.states = {1, 0};
    impossible.actions = {0};
    CHECK_THROWS_AS(model.log_likelihood(Eigen::VectorXd::Zero(2), impossible), ValidationError);
}

TEST_CASE("expected_features: symmetric two-branch MDP averages the mirrored features") {
    TabularMdp mdp;
    mdp.num_states = 3;
    mdp.num_actions = 2;
    mdp.discount = 0.9;
    mdp.terminal = {0, 1, 1};
    mdp.transition.assign(2, Eigen::MatrixXd::Zero(3, 3));
    mdp.transition[0](0, 1) = 1.0;
    mdp.transition[1](0, 2) = 1.0;
    for (int a = 0; a < 2; ++a) {
        mdp.transition[static_cast<std::size_t>(a)](1, 1) = 1.0;
        mdp.transition[static_cast<std::size_t>(a)](2, 2) = 1.0;
    }
    mdp.start_dist = Eigen::VectorXd::Zero(3);
    mdp.start_dist[0] = 1.0;
    Eigen::MatrixXd phi(3, 2);
    phi << 0, 0, 1, -1, -1, 1;  // mirrored arms
    MaxEntModel model(mdp, FeatureMap::from_state_features(phi), 2);
    Eigen::VectorXd ef = model.expected_features(Eigen::VectorXd::Zero(2));
    CHECK(ef[0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(ef[1] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("expected_features matches enumeration on random small instances") {
    Rng rng(53);
    for (int round = 0; round < 8; ++round) {
        TabularMdp mdp = oracle::random_mdp(3, 2, 0.8, 0.35, rng);
        FeatureMap fmap = oracle::random_state_features(3, 2, rng);
        MaxEntModel model(mdp, fmap, 3);
        auto paths = oracle::enumerate_paths(mdp, fmap, 3);
        Eigen::VectorXd theta(2);
        theta << rng.normal(), rng.normal();
        Eigen::VectorXd expect = oracle::oracle_expected_features(paths, theta);
        Eigen::VectorXd got = model.expected_features(theta);
        CHECK((got - expect).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("expected_features matches central finite differences of log_partition") {
    Rng rng(59);
    for (int round = 0; round < 5; ++round) {
        TabularMdp mdp = oracle::random_mdp(4, 2, 0.85, 0.3, rng);
        FeatureMap fmap = oracle::random_state_features(4, 3, rng);
        MaxEntModel model(mdp, fmap, 4);
        Eigen::VectorXd theta(3);
        theta << rng.normal(), rng.normal(), rng.normal();
        Eigen::VectorXd grad = model.expected_features(theta);
        const double h = 1e-5;
        for (int d = 0; d < 3; ++d) {
            Eigen::VectorXd up = theta, down = theta;
            up[d] += h;
            down[d] -= h;
            double fd = (model.log_partition(up) - model.log_partition(down)) / (2.0 * h);
            CHECK(grad[d] == doctest::Approx(fd).epsilon(1e-6));
        }
    }
}

TEST_CASE("weighted log-likelihood is concave along random lines") {
    Rng rng(61);
    TabularMdp mdp = oracle::random_mdp(4, 2, 0.85, 0.3, rng);
    FeatureMap fmap = oracle::random_state_features(4, 2, rng);
    MaxEntModel model(mdp, fmap, 4);
    Policy uniform;
    uniform.probs = Eigen::MatrixXd::Constant(4, 2, 0.5);
    auto trajs = sample_trajectories(mdp, uniform, 10, 4, 77);
    Eigen::VectorXd weights = Eigen::VectorXd::Ones(10);

    Eigen::VectorXd target = Eigen::VectorXd::Zero(2);
    for (const auto& t : trajs) target += model.trajectory_features(t) / 10.0;
    auto objective = [&](const Eigen::VectorXd& th) {
        return th.dot(target) - model.log_partition(th);
    };
    for (int line = 0; line < 20; ++line) {
        Eigen::VectorXd origin(2), dir(2);
        origin << rng.normal(), rng.normal();
        dir << rng.normal(), rng.normal();
        const double h = 0.05;
        for (int step = -2; step <= 2; ++step) {
            double t = step * h;
            double second = objective(origin + (t + h) * dir) - 2.0 * objective(origin + t * dir) +
                            objective(origin + (t - h) * dir);
            CHECK(second <= 1e-8);
        }
    }
}

TEST_CASE("fit_weighted_mle: identical-feature demonstrations moment-match exactly") {
    Rng rng(67);
    MaxEntModel model = two_state_model(0.9, 2, rng);
    Trajectory t1;
    t1.states = {0, 1};
    t1.actions = {0};
    std::vector<Trajectory> trajs = {t1, t1, t1};
    Eigen::VectorXd w = Eigen::VectorXd::Ones(3);
    FitResult fit = fit_weighted_mle(model, trajs, w, Eigen::VectorXd::Zero(2));
    CHECK(fit.converged);
    Eigen::VectorXd moments = model.expected_features(fit.params.theta);
    Eigen::VectorXd target = model.trajectory_features(t1);
    CHECK((moments - target).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("fit_weighted_mle: uniform weights equal the unweighted MLE") {
    Rng rng(71);
    TabularMdp mdp = oracle::random_mdp(3, 2, 0.8, 0.4, rng);
    FeatureMap fmap = oracle::random_state_features(3, 2, rng);
    MaxEntModel model(mdp, fmap, 3);
    Policy uniform;
    uniform.probs = Eigen::MatrixXd::Constant(3, 2, 0.5);
    auto trajs = sample_trajectories(mdp, uniform, 8, 3, 5);
    FitResult a = fit_weighted_mle(model, trajs, Eigen::VectorXd::Ones(8),
                                   Eigen::VectorXd::Zero(2));
    FitResult b = fit_weighted_mle(model, trajs, Eigen::VectorXd::Constant(8, 0.37),
                                   Eigen::VectorXd::Zero(2));
    CHECK((a.params.theta - b.params.theta).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("fit_weighted_mle: moment matching at the optimum beats a dense grid") {
    Rng rng(73);
    MaxEntModel model = two_state_model(0.9, 2, rng);
    Trajectory t1, t2;
    t1.states = {0, 1};
    t1.actions = {0};
    t2.states = {0, 1};
    t2.actions = {1};
    std::vector<Trajectory> trajs = {t1, t2};
    Eigen::VectorXd w(2);
    w << 0.7, 0.3;
    FitOptions opts;
    opts.tol = 1e-7;
    FitResult fit = fit_weighted_mle(model, trajs, w, Eigen::VectorXd::Zero(2), opts);
    CHECK(fit.converged);

    Eigen::VectorXd mean = 0.7 * model.trajectory_features(t1) + 0.3 * model.trajectory_features(t2);
    CHECK((model.expected_features(fit.params.theta) - mean).cwiseAbs().maxCoeff() < 1e-5);

    // Dense grid over [-10, 10]^2: no grid point beats the fitted objective.
    auto objective = [&](const Eigen::VectorXd& th) {
        return th.dot(mean) - model.log_partition(th);
    };
    double best_grid = -1e300;
    for (int i = 0; i <= 80; ++i)
        for (int j = 0; j <= 80; ++j) {
            Eigen::VectorXd th(2);
            th << -10.0 + 0.25 * i, -10.0 + 0.25 * j;
            best_grid = std::max(best_grid, objective(th));
        }
    CHECK(objective(fit.params.theta) >= best_grid - 1e-6);
}

TEST_CASE("fit_weighted_mle flags the iterate when capped") {
    Rng rng(79);
    MaxEntModel model = two_state_model(0.9, 2, rng);
    Trajectory t1;
    t1.states = {0, 1};
    t1.actions = {0};
    std::vector<Trajectory> trajs = {t1};
    FitOptions opts;
    opts.max_iters = 1;
    opts.tol = 1e-14;
    FitResult fit = fit_weighted_mle(model, trajs, Eigen::VectorXd::Ones(1),
                                     Eigen::VectorXd::Zero(2), opts);
    CHECK_FALSE(fit.converged);
    CHECK(fit.iterations <= 1);
}

TEST_CASE("fit_weighted_mle validates weights") {
    Rng rng(83);
    MaxEntModel model = two_state_model(0.9, 2, rng);
    Trajectory t1;
    t1.states = {0, 1};
    t1.actions = {0};
    std::vector<Trajectory> trajs = {t1};
    CHECK_THROWS_AS(fit_weighted_mle(model, trajs, Eigen::VectorXd::Zero(1),
                                     Eigen::VectorXd::Zero(2)),
                    ValidationError);
    Eigen::VectorXd negative(1);
    negative << -1.0;
    CHECK_THROWS_AS(fit_weighted_mle(model, trajs, negative, Eigen::VectorXd::Zero(2)),
                    ValidationError);
}

TEST_CASE("horizon-1 models have a trivial trajectory class") {
    Rng rng(89);
    TabularMdp mdp = oracle::random_mdp(3, 2, 0.9, 0.3, rng);
    FeatureMap fmap = oracle::random_state_features(3, 2, rng);
    MaxEntModel model(mdp, fmap, 1);
    Eigen::VectorXd theta(2);
    theta << 1.3, -0.4;
    CHECK(model.log_partition(theta) == doctest::Approx(0.0));
    CHECK(model.expected_features(theta).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("enumerate_trajectories agrees with the oracle enumeration") {
    Rng rng(97);
    TabularMdp mdp = oracle::random_mdp(3, 2, 0.85, 0.4, rng);
    FeatureMap fmap = oracle::random_state_features(3, 2, rng);
    MaxEntModel model(mdp, fmap, 3);
    auto lib = enumerate_trajectories(model);
    auto ref = oracle::enumerate_paths(mdp, fmap, 3);
    REQUIRE(lib.size() == ref.size());
    double lib_mass = 0.0, ref_mass = 0.0;
    for (const auto& e : lib) lib_mass += std::exp(e.log_q);
    for (const auto& p : ref) ref_mass += p.q;
    CHECK(lib_mass == doctest::Approx(ref_mass).epsilon(1e-12));
    CHECK(lib_mass == doctest::Approx(1.0).epsilon(1e-12));
}
