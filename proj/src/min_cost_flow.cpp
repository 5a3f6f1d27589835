#include "miirl/min_cost_flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "miirl/errors.hpp"

namespace miirl {

namespace {

constexpr double kFlowEps = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();

struct Edge {
    int from;
    int to;
    double cap;
    double cost;
};

// Successive shortest paths with node potentials. Dijkstra finalizes each
// node once, so the predecessor chain is always acyclic even when rounding
// introduces tiny negative reduced costs (they are clamped to zero).
class ResidualNetwork {
public:
    explicit ResidualNetwork(int n) : potential_(static_cast<std::size_t>(n), 0.0), n_(n) {}

    int add_edge(int from, int to, double cap, double cost) {
        int id = static_cast<int>(edges_.size());
        edges_.push_back({from, to, cap, cost});
        edges_.push_back({to, from, 0.0, -cost});
        return id;
    }

    // Linear-scan Dijkstra by reduced cost; ties resolve to the lowest node
    // index. Returns false when the sink is unreachable.
    bool shortest_path(int source, int sink, std::vector<int>& via_edge) {
        std::vector<double> dist(static_cast<std::size_t>(n_), kInf);
        std::vector<bool> done(static_cast<std::size_t>(n_), false);
        via_edge.assign(static_cast<std::size_t>(n_), -1);
        dist[static_cast<std::size_t>(source)] = 0.0;
        for (int round = 0; round < n_; ++round) {
            int u = -1;
            for (int v = 0; v < n_; ++v)
                if (!done[static_cast<std::size_t>(v)] && std::isfinite(dist[static_cast<std::size_t>(v)]) &&
                    (u < 0 || dist[static_cast<std::size_t>(v)] < dist[static_cast<std::size_t>(u)]))
                    u = v;
            if (u < 0) break;
            done[static_cast<std::size_t>(u)] = true;
            for (int id = 0; id < static_cast<int>(edges_.size()); ++id) {
                const Edge& e = edges_[static_cast<std::size_t>(id)];
                if (e.from != u || e.cap <= kFlowEps) continue;
                if (done[static_cast<std::size_t>(e.to)]) continue;
                double reduced = std::max(
                    e.cost + potential_[static_cast<std::size_t>(e.from)] -
                        potential_[static_cast<std::size_t>(e.to)],
                    0.0);
                double nd = dist[static_cast<std::size_t>(u)] + reduced;
                if (nd < dist[static_cast<std::size_t>(e.to)]) {
                    dist[static_cast<std::size_t>(e.to)] = nd;
                    via_edge[static_cast<std::size_t>(e.to)] = id;
                }
            }
        }
        if (!std::isfinite(dist[static_cast<std::size_t>(sink)])) return false;
        for (int v = 0; v < n_; ++v)
            if (std::isfinite(dist[static_cast<std::size_t>(v)]))
                potential_[static_cast<std::size_t>(v)] += dist[static_cast<std::size_t>(v)];
        return true;
    }

    void augment(int source, int sink, const std::vector<int>& via_edge) {
        double bottleneck = kInf;
        for (int v = sink; v != source;) {
            const Edge& e = edges_[static_cast<std::size_t>(via_edge[static_cast<std::size_t>(v)])];
            bottleneck = std::min(bottleneck, e.cap);
            v = e.from;
        }
        for (int v = sink; v != source;) {
            int id = via_edge[static_cast<std::size_t>(v)];
            edges_[static_cast<std::size_t>(id)].cap -= bottleneck;
            edges_[static_cast<std::size_t>(id ^ 1)].cap += bottleneck;
            v = edges_[static_cast<std::size_t>(id)].from;
        }
    }

    double forward_flow(int id, double original_cap) const {
        return original_cap - edges_[static_cast<std::size_t>(id)].cap;
    }

private:
    std::vector<Edge> edges_;
    std::vector<double> potential_;
    int n_;
};

}  // namespace

TransportResult solve_transportation(const Eigen::MatrixXd& costs,
                                     const Eigen::VectorXd& row_marginals,
                                     const Eigen::VectorXd& col_marginals) {
    const int m = static_cast<int>(costs.rows());
    const int n = static_cast<int>(costs.cols());
    if (m == 0 || n == 0) throw ValidationError("solve_transportation: empty cost matrix");
    if (row_marginals.size() != m || col_marginals.size() != n)
        throw ValidationError("solve_transportation: marginal lengths do not match costs");
    if (row_marginals.minCoeff() < 0.0 || col_marginals.minCoeff() < 0.0)
        throw ValidationError("solve_transportation: negative marginal");
    if (std::abs(row_marginals.sum() - col_marginals.sum()) > 1e-6)
        throw ValidationError("solve_transportation: marginal sums differ");
    if (costs.minCoeff() < 0.0)
        throw ValidationError("solve_transportation: negative cost entry");

    const int source = 0;
    const int sink = m + n + 1;
    ResidualNetwork net(m + n + 2);
    Eigen::MatrixXi inner(m, n);
    for (int i = 0; i < m; ++i) net.add_edge(source, 1 + i, row_marginals[i], 0.0);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
            inner(i, j) = net.add_edge(1 + i, 1 + m + j, 1.0, costs(i, j));
    for (int j = 0; j < n; ++j) net.add_edge(1 + m + j, sink, col_marginals[j], 0.0);

    std::vector<int> via;
    const int max_augmentations = 8 * (m + 2) * (n + 2) + 64;
    int rounds = 0;
    while (net.shortest_path(source, sink, via)) {
        net.augment(source, sink, via);
        if (++rounds > max_augmentations)
            throw NumericError("solve_transportation: augmentation did not terminate");
    }

    TransportResult res;
    res.flow = Eigen::MatrixXd(m, n);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
            res.flow(i, j) = std::max(net.forward_flow(inner(i, j), 1.0), 0.0);
    res.cost = (res.flow.array() * costs.array()).sum();
    return res;
}

}  // namespace miirl
