#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "miirl/ensemble.hpp"
#include "miirl/mdp.hpp"

namespace miirl {

// Cell type codes double as feature dimensions: phi(s) is the one-hot of the
// entered cell's type, dim E + 2.
enum class CellType : int { Start = 0, Goal = 1, Element0 = 2 };

struct ElementWorldConfig {
    int num_elements = 3;   // E
    double wind = 0.1;      // w, in [0, 1]
    int height = 6;         // h >= 3
    int width = 0;          // 0 means the default 4 * E
    std::uint64_t seed = 0;
    double gamma = 0.99;
    // Ground-truth mixture weights over intents; empty means uniform.
    Eigen::VectorXd cluster_weights;
    int horizon = 0;        // demonstration length bound L; 0 means 3 * h

    int effective_width() const { return width > 0 ? width : 4 * num_elements; }
    int effective_horizon() const { return horizon > 0 ? horizon : 3 * height; }

    void validate() const;
};

struct ElementWorldInstance {
    ElementWorldConfig config;
    TabularMdp mdp;
    FeatureMap fmap;                 // one-hot, dim E + 2
    RewardEnsemble ground_truth;     // K = E intents
    std::vector<std::vector<int>> cell_types;  // [row][col], row 0 = bottom

    int state_index(int row, int col) const { return row * config.effective_width() + col; }
};

// Action indices for the four cardinal moves.
namespace element_world_action {
constexpr int kUp = 0;
constexpr int kDown = 1;
constexpr int kLeft = 2;
constexpr int kRight = 3;
}  // namespace element_world_action

// Builds the cylindrical gridworld: bottom row Start, top row Goal (terminal,
// absorbing), middle rows split into E contiguous element lanes whose
// boundaries jitter by {-1, 0, +1} per row (clamped so every element keeps at
// least one column). Dynamics: the chosen cardinal action succeeds with
// probability 1 - w, otherwise one of the four executes uniformly at random;
// x wraps, y self-loops at the edges. Deterministic given config.seed.
ElementWorldInstance generate(const ElementWorldConfig& config);

// Samples n demonstrations: intent k ~ cluster_weights, plan under the
// ground-truth theta_k, sample one episode. Returns trajectories plus the
// ground-truth intent labels.
std::pair<std::vector<Trajectory>, std::vector<int>> make_dataset(
    const ElementWorldInstance& instance, int n, std::uint64_t seed,
    const Eigen::VectorXd& cluster_weights = Eigen::VectorXd());

// Normalized geometric intent weights rho_k proportional to p * (1 - p)^k.
// p = 0 degenerates to uniform.
Eigen::VectorXd geometric_weights(int num_elements, double p);

// Plain-text grid dump (row h-1 printed first).
std::string grid_text(const ElementWorldInstance& instance);

}  // namespace miirl
