#include "miirl/element_world.hpp"

#include <algorithm>
#include <cmath>

#include "miirl/rng.hpp"

namespace miirl {

void ElementWorldConfig::validate() const {
    if (num_elements < 1)
        throw ValidationError("ElementWorldConfig: num_elements must be at least 1");
    if (!(wind >= 0.0 && wind <= 1.0))
        throw ValidationError("ElementWorldConfig: wind must lie in [0, 1]");
    if (height < 3) throw ValidationError("ElementWorldConfig: height must be at least 3");
    if (effective_width() < num_elements)
        throw ValidationError("ElementWorldConfig: width must be at least num_elements");
    if (!(gamma >= 0.0 && gamma < 1.0))
        throw ValidationError("ElementWorldConfig: gamma must lie in [0, 1)");
    if (cluster_weights.size() != 0) {
        if (cluster_weights.size() != num_elements)
            throw ValidationError("ElementWorldConfig: cluster_weights length must equal E");
        if (cluster_weights.minCoeff() < 0.0)
            throw ValidationError("ElementWorldConfig: negative cluster weight");
        if (std::abs(cluster_weights.sum() - 1.0) > kProbTolerance)
            throw ValidationError("ElementWorldConfig: cluster_weights must sum to 1");
    }
}

namespace {

// Lane boundaries for one middle row: base split into E near-equal cyclic
// segments, each boundary jittered by {-1, 0, +1} and clamped so every
// element keeps at least one column.
std::vector<int> row_boundaries(int width, int elements, Rng& rng) {
    std::vector<int> b(static_cast<std::size_t>(elements));
    for (int j = 0; j < elements; ++j) {
        int base = static_cast<int>(std::lround(static_cast<double>(j) * width / elements));
        b[static_cast<std::size_t>(j)] = base + (rng.uniform_int(3) - 1);
    }
    // Clamp: keep boundaries strictly increasing with room for the remaining
    // segments and a non-empty wrap-around gap back to b[0].
    for (int j = 1; j < elements; ++j) {
        int lo = b[static_cast<std::size_t>(j - 1)] + 1;
        int hi = b[0] + width - (elements - j);
        b[static_cast<std::size_t>(j)] = std::clamp(b[static_cast<std::size_t>(j)], lo, hi);
    }
    return b;
}

int lane_of_column(const std::vector<int>& boundaries, int width, int col) {
    const int elements = static_cast<int>(boundaries.size());
    // Offset from the first boundary, wrapped into [0, width).
    int rel = ((col - boundaries[0]) % width + width) % width;
    for (int k = elements - 1; k >= 0; --k) {
        int seg_start = boundaries[static_cast<std::size_t>(k)] - boundaries[0];
        if (rel >= seg_start) return k;
    }
    return 0;
}

}  // namespace

ElementWorldInstance generate(const ElementWorldConfig& config) {
    config.validate();
    const int e = config.num_elements;
    const int w = config.effective_width();
    const int h = config.height;
    const int num_states = w * h;
    const int feature_dim = e + 2;

    ElementWorldInstance inst;
    inst.config = config;

    // Cell types: bottom row Start, top row Goal, middle rows element lanes.
    inst.cell_types.assign(static_cast<std::size_t>(h), std::vector<int>(static_cast<std::size_t>(w), 0));
    for (int col = 0; col < w; ++col) {
        inst.cell_types[0][static_cast<std::size_t>(col)] = static_cast<int>(CellType::Start);
        inst.cell_types[static_cast<std::size_t>(h - 1)][static_cast<std::size_t>(col)] =
            static_cast<int>(CellType::Goal);
    }
    for (int row = 1; row < h - 1; ++row) {
        Rng rng(derive_seed(config.seed, {seed_stream::kLaneRow, static_cast<std::uint64_t>(row)}));
        auto boundaries = row_boundaries(w, e, rng);
        for (int col = 0; col < w; ++col)
            inst.cell_types[static_cast<std::size_t>(row)][static_cast<std::size_t>(col)] =
                static_cast<int>(CellType::Element0) + lane_of_column(boundaries, w, col);
    }

    // MDP dynamics.
    TabularMdp mdp;
    mdp.num_states = num_states;
    mdp.num_actions = 4;
    mdp.discount = config.gamma;
    mdp.terminal.assign(static_cast<std::size_t>(num_states), 0);
    for (int col = 0; col < w; ++col)
        mdp.terminal[static_cast<std::size_t>((h - 1) * w + col)] = 1;

    auto move_target = [&](int row, int col, int action) {
        switch (action) {
            case element_world_action::kUp:
                return std::make_pair(std::min(row + 1, h - 1), col);
            case element_world_action::kDown:
                return std::make_pair(std::max(row - 1, 0), col);
            case element_world_action::kLeft:
                return std::make_pair(row, (col + w - 1) % w);
            default:
                return std::make_pair(row, (col + 1) % w);
        }
    };

    mdp.transition.assign(4, Eigen::MatrixXd::Zero(num_states, num_states));
    for (int row = 0; row < h; ++row) {
        for (int col = 0; col < w; ++col) {
            const int s = row * w + col;
            if (mdp.terminal[static_cast<std::size_t>(s)]) {
                for (int a = 0; a < 4; ++a) mdp.transition[static_cast<std::size_t>(a)](s, s) = 1.0;
                continue;
            }
            for (int a = 0; a < 4; ++a) {
                auto [ir, ic] = move_target(row, col, a);
                mdp.transition[static_cast<std::size_t>(a)](s, ir * w + ic) += 1.0 - config.wind;
                for (int b = 0; b < 4; ++b) {
                    auto [rr, rc] = move_target(row, col, b);
                    mdp.transition[static_cast<std::size_t>(a)](s, rr * w + rc) += config.wind / 4.0;
                }
            }
        }
    }
    mdp.start_dist = Eigen::VectorXd::Zero(num_states);
    for (int col = 0; col < w; ++col) mdp.start_dist[col] = 1.0 / w;
    mdp.validate();
    inst.mdp = std::move(mdp);

    // One-hot state features of the entered cell's type.
    Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(num_states, feature_dim);
    for (int row = 0; row < h; ++row)
        for (int col = 0; col < w; ++col)
            phi(row * w + col, inst.cell_types[static_cast<std::size_t>(row)][static_cast<std::size_t>(col)]) = 1.0;
    inst.fmap = FeatureMap::from_state_features(std::move(phi));

    // Ground truth: intent k pays -10 on foreign elements, -1 on its own
    // element and the start zone, 0 on the goal.
    RewardEnsemble gt;
    gt.weights = config.cluster_weights.size() != 0
                     ? config.cluster_weights
                     : Eigen::VectorXd::Constant(e, 1.0 / e);
    gt.params.resize(static_cast<std::size_t>(e));
    for (int k = 0; k < e; ++k) {
        Eigen::VectorXd theta = Eigen::VectorXd::Zero(feature_dim);
        theta[static_cast<int>(CellType::Start)] = -1.0;
        theta[static_cast<int>(CellType::Goal)] = 0.0;
        for (int j = 0; j < e; ++j)
            theta[static_cast<int>(CellType::Element0) + j] = (j == k) ? -1.0 : -10.0;
        gt.params[static_cast<std::size_t>(k)].theta = std::move(theta);
    }
    gt.validate();
    inst.ground_truth = std::move(gt);
    return inst;
}

std::pair<std::vector<Trajectory>, std::vector<int>> make_dataset(
    const ElementWorldInstance& instance, int n, std::uint64_t seed,
    const Eigen::VectorXd& cluster_weights) {
    if (n < 1) throw ValidationError("make_dataset: n must be at least 1");
    Eigen::VectorXd weights =
        cluster_weights.size() != 0 ? cluster_weights : instance.ground_truth.weights;
    if (weights.size() != instance.ground_truth.size())
        throw ValidationError("make_dataset: cluster_weights length must equal E");

    const int e = instance.ground_truth.size();
    const int horizon = instance.config.effective_horizon();
    std::vector<Policy> policies(static_cast<std::size_t>(e));
    for (int k = 0; k < e; ++k)
        policies[static_cast<std::size_t>(k)] =
            value_iteration(instance.mdp, instance.ground_truth.params[static_cast<std::size_t>(k)].theta,
                            instance.fmap, 1e-8)
                .policy;

    std::vector<Trajectory> trajs;
    std::vector<int> labels;
    trajs.reserve(static_cast<std::size_t>(n));
    labels.reserve(static_cast<std::size_t>(n));
    Rng intent_rng(derive_seed(seed, {seed_stream::kTrainData}));
    for (int i = 0; i < n; ++i) {
        int k = intent_rng.discrete(weights);
        auto sampled = sample_trajectories(
            instance.mdp, policies[static_cast<std::size_t>(k)], 1, horizon,
            derive_seed(seed, {seed_stream::kTrajectory, static_cast<std::uint64_t>(i)}));
        trajs.push_back(std::move(sampled.front()));
        labels.push_back(k);
    }
    return {std::move(trajs), std::move(labels)};
}

Eigen::VectorXd geometric_weights(int num_elements, double p) {
    if (num_elements < 1) throw ValidationError("geometric_weights: E must be at least 1");
    if (!(p >= 0.0 && p < 1.0))
        throw ValidationError("geometric_weights: p must lie in [0, 1)");
    if (p == 0.0) return Eigen::VectorXd::Constant(num_elements, 1.0 / num_elements);
    Eigen::VectorXd w(num_elements);
    for (int k = 0; k < num_elements; ++k) w[k] = p * std::pow(1.0 - p, k);
    return w / w.sum();
}

std::string grid_text(const ElementWorldInstance& instance) {
    std::string out;
    const int h = instance.config.height;
    for (int row = h - 1; row >= 0; --row) {
        for (int type : instance.cell_types[static_cast<std::size_t>(row)]) {
            if (type == static_cast<int>(CellType::Start))
                out += 'S';
            else if (type == static_cast<int>(CellType::Goal))
                out += 'G';
            else
                out += static_cast<char>('a' + (type - static_cast<int>(CellType::Element0)));
        }
        out += '\n';
    }
    return out;
}

}  // namespace miirl
