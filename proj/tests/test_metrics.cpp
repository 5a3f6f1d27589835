#include <doctest.h>

#include <cmath>

#include "miirl/element_world.hpp"
#include "miirl/metrics.hpp"
#include "miirl/min_cost_flow.hpp"
#include "miirl/rng.hpp"
#include "oracles.hpp"

using namespace miirl;

namespace {

// Two-armed bandit with non-terminal absorbing arms so rewards accumulate.
TabularMdp accumulating_bandit(double gamma) {
    TabularMdp mdp;
    mdp.num_states = 3;
    mdp.num_actions = 2;
    mdp.discount = gamma;
    mdp.terminal = {0, 0, 0};
    mdp.transition.assign(2, Eigen::MatrixXd::Zero(3, 3));
    mdp.transition[0](0, 1) = 1.0;
    mdp.transition[1](0, 2) = 1.0;
    for (int a = 0; a < 2; ++a) {
        mdp.transition[static_cast<std::size_t>(a)](1, 1) = 1.0;
        mdp.transition[static_cast<std::size_t>(a)](2, 2) = 1.0;
    }
    mdp.start_dist = Eigen::VectorXd::Zero(3);
    mdp.start_dist[0] = 1.0;
    mdp.validate();
    return mdp;
}

FeatureMap arm_features() {
    Eigen::MatrixXd phi(3, 2);
    phi << 0, 0, 1, 0, 0, 1;
    return FeatureMap::from_state_features(phi);
}

ResponsibilityMatrix random_hard(int n, int k, Rng& rng) {
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (auto& l : labels) l = rng.uniform_int(k);
    return ResponsibilityMatrix::from_labels(labels, k);
}

}  // namespace

TEST_CASE("evd: identical and positively scaled rewards have zero regret") {
    TabularMdp mdp = accumulating_bandit(0.9);
    FeatureMap fmap = arm_features();
    Eigen::VectorXd theta(2);
    theta << 1.0, -1.0;
    CHECK(evd(mdp, fmap, theta, theta, 1e-9) == 0.0);
    CHECK(evd(mdp, fmap, theta, Eigen::VectorXd(2.0 * theta), 1e-9) == 0.0);
}

TEST_CASE("evd: swapped bandit rewards pay the full 2/(1-gamma) gap") {
    const double gamma = 0.9;
    TabularMdp mdp = accumulating_bandit(gamma);
    FeatureMap fmap = arm_features();
    Eigen::VectorXd gt(2), learned(2);
    gt << 1.0, -1.0;
    learned << -1.0, 1.0;
    // Enumerating both deterministic policies: the optimal earns
    // +1/(1-gamma), the swapped-reward policy earns -1/(1-gamma).
    CHECK(evd(mdp, fmap, gt, learned, 1e-9) ==
          doctest::Approx(2.0 / (1.0 - gamma)).epsilon(1e-6));
}

TEST_CASE("solve_transportation matches the vertex-enumeration oracle") {
    Rng rng(3);
    for (int round = 0; round < 60; ++round) {
        const int m = 1 + rng.uniform_int(3);
        const int n = 1 + rng.uniform_int(3);
        Eigen::MatrixXd costs(m, n);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j) costs(i, j) = 10.0 * rng.uniform();
        Eigen::VectorXd rows(m), cols(n);
        for (int i = 0; i < m; ++i) rows[i] = rng.uniform_pos();
        for (int j = 0; j < n; ++j) cols[j] = rng.uniform_pos();
        rows /= rows.sum();
        cols /= cols.sum();

        TransportResult got = solve_transportation(costs, rows, cols);
        double expect = oracle::transportation_vertex_optimum(costs, rows, cols);
        CHECK(got.cost == doctest::Approx(expect).epsilon(1e-6));
        // Marginal feasibility of the returned flow.
        CHECK((got.flow.rowwise().sum() - rows).cwiseAbs().maxCoeff() < 1e-9);
        CHECK((got.flow.colwise().sum().transpose() - cols).cwiseAbs().maxCoeff() < 1e-9);
        CHECK(got.flow.minCoeff() >= 0.0);
    }
}

TEST_CASE("gevd: identical ensembles score exactly zero") {
    TabularMdp mdp = accumulating_bandit(0.9);
    FeatureMap fmap = arm_features();
    RewardEnsemble ens;
    ens.weights = Eigen::VectorXd(2);
    ens.weights << 0.6, 0.4;
    Eigen::VectorXd t1(2), t2(2);
    t1 << 1.0, -1.0;
    t2 << -1.0, 1.0;
    ens.params = {{t1}, {t2}};
    GevdReport report = gevd(mdp, fmap, ens, ens, 1e-9);
    CHECK(report.gevd == 0.0);
    CHECK(report.normalized_gevd == 0.0);
}

TEST_CASE("gevd: permuted components score exactly zero") {
    TabularMdp mdp = accumulating_bandit(0.9);
    FeatureMap fmap = arm_features();
    RewardEnsemble gt, permuted;
    gt.weights = Eigen::VectorXd(2);
    gt.weights << 0.7, 0.3;
    Eigen::VectorXd t1(2), t2(2);
    t1 << 1.0, -1.0;
    t2 << -1.0, 1.0;
    gt.params = {{t1}, {t2}};
    permuted.weights = Eigen::VectorXd(2);
    permuted.weights << 0.3, 0.7;
    permuted.params = {{t2}, {t1}};
    GevdReport report = gevd(mdp, fmap, gt, permuted, 1e-9);
    CHECK(report.gevd == 0.0);
}

TEST_CASE("gevd: hand-built K'=2, K=3 instance matches brute force and bounds") {
    const double gamma = 0.9;
    TabularMdp mdp = accumulating_bandit(gamma);
    FeatureMap fmap = arm_features();
    RewardEnsemble gt, learned;
    gt.weights = Eigen::VectorXd(2);
    gt.weights << 0.65, 0.35;
    Eigen::VectorXd g1(2), g2(2);
    g1 << 1.0, -1.0;
    g2 << -0.5, 0.5;
    gt.params = {{g1}, {g2}};
    learned.weights = Eigen::VectorXd(3);
    learned.weights << 0.5, 0.3, 0.2;
    Eigen::VectorXd l1(2), l2(2), l3(2);
    l1 << 0.9, -1.1;
    l2 << -1.0, 1.2;
    l3 << 0.1, 0.11;
    learned.params = {{l1}, {l2}, {l3}};

    GevdReport report = gevd(mdp, fmap, gt, learned, 1e-9);
    double expect = oracle::transportation_vertex_optimum(report.pairwise_evd, gt.weights,
                                                          learned.weights);
    CHECK(report.gevd == doctest::Approx(expect).epsilon(1e-6));

    // Feasibility, witness-flow upper bound and GT-span range.
    CHECK((report.flow.rowwise().sum() - gt.weights).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((report.flow.colwise().sum().transpose() - learned.weights).cwiseAbs().maxCoeff() <
          1e-9);
    Eigen::MatrixXd witness = gt.weights * learned.weights.transpose();  // independent coupling
    double witness_cost = (witness.array() * report.pairwise_evd.array()).sum();
    CHECK(report.gevd <= witness_cost + 1e-9);
    double span = 2.0 / (1.0 - gamma);  // max_k Delta_k / (1 - gamma)
    CHECK(report.gevd >= 0.0);
    CHECK(report.gevd <= span + 1e-9);
    CHECK(report.normalized_gevd >= 0.0);
    CHECK(report.normalized_gevd <= 1.0);
}

TEST_CASE("gevd: constant rewards degenerate the normalizer and flag it") {
    TabularMdp mdp = accumulating_bandit(0.9);
    FeatureMap fmap = arm_features();
    RewardEnsemble flat;
    flat.weights = Eigen::VectorXd::Ones(1);
    Eigen::VectorXd zero = Eigen::VectorXd::Zero(2);
    flat.params = {{zero}};
    GevdReport report = gevd(mdp, fmap, flat, flat, 1e-9);
    CHECK(report.degenerate_normalizer);
    CHECK(report.normalized_gevd == 0.0);
}

TEST_CASE("anid: identical hard clusterings are at distance zero") {
    Rng rng(7);
    ResponsibilityMatrix u = random_hard(300, 3, rng);
    AnidReport report = anid(u, u, 1000, 11);
    CHECK(report.anid <= 0.02);
    CHECK(report.mutual_information ==
          doctest::Approx(report.entropy_u).epsilon(1e-12));
}

TEST_CASE("anid: column permutation leaves the distance unchanged") {
    Rng rng(13);
    ResponsibilityMatrix u = random_hard(200, 3, rng);
    ResponsibilityMatrix v = random_hard(200, 3, rng);
    ResponsibilityMatrix v_perm;
    v_perm.u = Eigen::MatrixXd(200, 3);
    v_perm.u.col(0) = v.u.col(2);
    v_perm.u.col(1) = v.u.col(0);
    v_perm.u.col(2) = v.u.col(1);
    AnidReport a = anid(u, v, 500, 17);
    AnidReport b = anid(u, v_perm, 500, 17);
    CHECK(a.anid == doctest::Approx(b.anid).epsilon(1e-12));
}

TEST_CASE("anid: independent uniform clusterings sit near maximal distance") {
    Rng rng(19);
    ResponsibilityMatrix u = random_hard(1000, 3, rng);
    ResponsibilityMatrix v = random_hard(1000, 3, rng);
    AnidReport report = anid(u, v, 1000, 23);
    CHECK(report.anid >= 0.9);
}

TEST_CASE("anid is symmetric under argument swap with the same seed") {
    Rng rng(29);
    ResponsibilityMatrix u = random_hard(150, 2, rng);
    ResponsibilityMatrix v = random_hard(150, 4, rng);
    AnidReport a = anid(u, v, 400, 31);
    AnidReport b = anid(v, u, 400, 31);
    CHECK(a.anid == doctest::Approx(b.anid).epsilon(1e-12));
    CHECK(a.expected_mi == doctest::Approx(b.expected_mi).epsilon(1e-12));

    // Equal-column-count case draws two distinct matrices per sample.
    ResponsibilityMatrix w = random_hard(150, 3, rng);
    ResponsibilityMatrix x = random_hard(150, 3, rng);
    AnidReport c = anid(w, x, 400, 37);
    AnidReport d = anid(x, w, 400, 37);
    CHECK(c.anid == doctest::Approx(d.anid).epsilon(1e-12));
    CHECK(c.expected_mi > 0.0);
}

TEST_CASE("anid: mutual information respects its entropy ceiling") {
    Rng rng(41);
    for (int round = 0; round < 10; ++round) {
        ResponsibilityMatrix u = random_hard(80, 2 + rng.uniform_int(3), rng);
        ResponsibilityMatrix v = random_hard(80, 2 + rng.uniform_int(3), rng);
        AnidReport r = anid(u, v, 50, 43 + round);
        CHECK(r.mutual_information <= std::min(r.entropy_u, r.entropy_v) + 1e-9);
        CHECK(r.mutual_information >= -1e-12);
        CHECK(r.anid >= 0.0);
        CHECK(r.anid <= 1.0);
    }
}

TEST_CASE("anid: row-count mismatch is a structured error") {
    Rng rng(47);
    ResponsibilityMatrix u = random_hard(10, 2, rng);
    ResponsibilityMatrix v = random_hard(11, 2, rng);
    CHECK_THROWS_AS(anid(u, v, 10, 1), ValidationError);
}

TEST_CASE("anid: single-column clusterings degenerate to zero with a flag") {
    // K = 1 on both sides: H(U) = H(V) = I = 0, denominator collapses.
    ResponsibilityMatrix u, v;
    u.u = Eigen::MatrixXd::Ones(50, 1);
    v.u = Eigen::MatrixXd::Ones(50, 1);
    AnidReport r = anid(u, v, 100, 3);
    CHECK(r.degenerate);
    CHECK(r.anid == 0.0);
}

TEST_CASE("pairing table renders the supported pairs") {
    TabularMdp mdp = accumulating_bandit(0.9);
    FeatureMap fmap = arm_features();
    RewardEnsemble ens;
    ens.weights = Eigen::VectorXd(2);
    ens.weights << 0.5, 0.5;
    Eigen::VectorXd t1(2), t2(2);
    t1 << 1.0, -1.0;
    t2 << -1.0, 1.0;
    ens.params = {{t1}, {t2}};
    GevdReport report = gevd(mdp, fmap, ens, ens, 1e-9);
    std::string text = pairing_table_text(report);
    CHECK(text.find("gevd") != std::string::npos);
    CHECK(text.find("0 -> 0") != std::string::npos);
}

TEST_CASE("evd on ElementWorld ground-truth pairs is positive across intents") {
    ElementWorldConfig c;
    c.num_elements = 2;
    c.wind = 0.0;
    c.height = 5;
    c.seed = 3;
    ElementWorldInstance inst = generate(c);
    double same = evd(inst.mdp, inst.fmap, inst.ground_truth.params[0].theta,
                      inst.ground_truth.params[0].theta, 1e-8);
    double cross = evd(inst.mdp, inst.fmap, inst.ground_truth.params[0].theta,
                       inst.ground_truth.params[1].theta, 1e-8);
    CHECK(same == 0.0);
    CHECK(cross > 0.1);
}
