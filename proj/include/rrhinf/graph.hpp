#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace rrhinf {

struct GraphError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Directed observer topology. An edge (j,i) means node j sends information
// to node i; V_i is the ascending list of in-neighbours of i. Nodes are
// 1-based in the public interface. Immutable after construction.
class ObserverGraph {
public:
    ObserverGraph(int node_count, std::vector<std::pair<int, int>> edges);

    int node_count() const { return N_; }
    const std::vector<int>& neighbourhood(int i) const { return neigh_[check(i) - 1]; }
    int in_degree(int i) const { return static_cast<int>(neighbourhood(i).size()); }
    int out_degree(int i) const { return out_degree_[check(i) - 1]; }
    int max_in_degree() const { return max_in_degree_; }
    bool has_edge(int j, int i) const { return adjacency_(check(i) - 1, check(j) - 1) != 0.0; }
    const std::vector<std::pair<int, int>>& edges() const { return edges_; }

    // a_ij = 1 iff (j,i) is an edge; laplacian = diag(p_1..p_N) - adjacency.
    const Eigen::MatrixXd& adjacency() const { return adjacency_; }
    const Eigen::MatrixXd& laplacian() const { return laplacian_; }

private:
    int check(int i) const;

    int N_;
    std::vector<std::pair<int, int>> edges_;
    std::vector<std::vector<int>> neigh_;
    std::vector<int> out_degree_;
    int max_in_degree_;
    Eigen::MatrixXd adjacency_;
    Eigen::MatrixXd laplacian_;
};

// One cyclic shift: the last element moves to the front.
std::vector<int> shift_permutation(std::vector<int> ordered_set);

// Neighbourhood of i after k consecutive shift permutations.
std::vector<int> permuted_neighbourhood(const ObserverGraph& g, int i, long k);

// 1-based position nu of neighbour j in the permuted neighbourhood of i at
// instant k. The sample node i uses for j on [t_k, t_{k+1}) was taken at
// t_{k-nu+1} (zero prehistory when that index is negative).
int sample_slot(const ObserverGraph& g, int i, int j, long k);

// Constant-period Round-Robin timing: t_k = k*period, tau_i = p_i*period.
struct RoundRobinSchedule {
    double period = 0.0;
    std::vector<double> node_delays;
    double network_delay = 0.0;

    double instant(long k) const { return static_cast<double>(k) * period; }
};

RoundRobinSchedule make_schedule(const ObserverGraph& g, double period);

}  // namespace rrhinf
