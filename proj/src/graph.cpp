#include "rrhinf/graph.hpp"

#include <algorithm>
#include <queue>

namespace rrhinf {

ObserverGraph::ObserverGraph(int node_count, std::vector<std::pair<int, int>> edges)
    : N_(node_count) {
    if (node_count < 1)
        throw GraphError("node_count must be positive");

    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

    neigh_.assign(N_, {});
    out_degree_.assign(N_, 0);
    adjacency_ = Eigen::MatrixXd::Zero(N_, N_);

    for (auto [j, i] : edges) {
        if (j < 1 || j > N_ || i < 1 || i > N_)
            throw GraphError("edge (" + std::to_string(j) + "," + std::to_string(i) +
                             ") out of range 1.." + std::to_string(N_));
        if (j == i)
            throw GraphError("self-loop at node " + std::to_string(i));
        neigh_[i - 1].push_back(j);
        out_degree_[j - 1] += 1;
        adjacency_(i - 1, j - 1) = 1.0;
    }
    edges_ = std::move(edges);

    max_in_degree_ = 0;
    for (auto& v : neigh_) {
        std::sort(v.begin(), v.end());
        max_in_degree_ = std::max(max_in_degree_, static_cast<int>(v.size()));
    }

    laplacian_ = -adjacency_;
    for (int i = 0; i < N_; ++i)
        laplacian_(i, i) = static_cast<double>(neigh_[i].size());

    // weak connectivity: undirected breadth-first reachability from node 1
    std::vector<char> seen(N_, 0);
    std::queue<int> q;
    q.push(0);
    seen[0] = 1;
    int reached = 1;
    while (!q.empty()) {
        int u = q.front();
        q.pop();
        for (int v = 0; v < N_; ++v) {
            if (!seen[v] && (adjacency_(u, v) != 0.0 || adjacency_(v, u) != 0.0)) {
                seen[v] = 1;
                ++reached;
                q.push(v);
            }
        }
    }
    if (reached != N_)
        throw GraphError("graph is not weakly connected");
}

int ObserverGraph::check(int i) const {
    if (i < 1 || i > N_)
        throw GraphError("node index " + std::to_string(i) + " out of range");
    return i;
}

std::vector<int> shift_permutation(std::vector<int> ordered_set) {
    if (ordered_set.size() > 1)
        std::rotate(ordered_set.rbegin(), ordered_set.rbegin() + 1, ordered_set.rend());
    return ordered_set;
}

std::vector<int> permuted_neighbourhood(const ObserverGraph& g, int i, long k) {
    const auto& v = g.neighbourhood(i);
    const long p = static_cast<long>(v.size());
    if (p == 0)
        return {};
    std::vector<int> out(v.size());
    const long shift = ((k % p) + p) % p;
    for (long idx = 0; idx < p; ++idx)
        out[static_cast<size_t>((idx + shift) % p)] = v[static_cast<size_t>(idx)];
    return out;
}

int sample_slot(const ObserverGraph& g, int i, int j, long k) {
    const auto& v = g.neighbourhood(i);
    auto it = std::find(v.begin(), v.end(), j);
    if (it == v.end())
        throw GraphError("node " + std::to_string(j) + " is not a neighbour of " +
                         std::to_string(i));
    const long p = static_cast<long>(v.size());
    const long a = it - v.begin();
    return static_cast<int>((a + ((k % p) + p) % p) % p) + 1;
}

RoundRobinSchedule make_schedule(const ObserverGraph& g, double period) {
    if (!(period > 0.0))
        throw GraphError("sampling period must be positive");
    RoundRobinSchedule s;
    s.period = period;
    s.node_delays.resize(static_cast<size_t>(g.node_count()));
    for (int i = 1; i <= g.node_count(); ++i)
        s.node_delays[static_cast<size_t>(i - 1)] = g.in_degree(i) * period;
    s.network_delay = g.max_in_degree() * period;
    return s;
}

}  // namespace rrhinf
