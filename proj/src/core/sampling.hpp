#pragma once

#include "core/pomdp.hpp"

#include <cstdint>
#include <vector>

namespace bsqz {

/// Sampled beliefs stacked as columns (n x m).
struct BeliefMatrix {
    Matrix columns;
    std::uint64_t seed = 0;
    std::size_t horizon_cap = 0;

    std::size_t size() const { return static_cast<std::size_t>(columns.cols()); }
    std::size_t dim() const { return static_cast<std::size_t>(columns.rows()); }
};

inline constexpr std::size_t kDefaultHorizonCap = 250;

/// Random-walk belief collection under a uniform-random action policy. Each episode
/// starts at the initial belief and runs horizon_cap steps; episode e draws from a
/// sub-seed of (seed, e), so the result does not depend on the thread count.
BeliefMatrix sample_beliefs(const Pomdp& model, std::size_t m, std::uint64_t seed,
                            std::size_t horizon_cap = kDefaultHorizonCap);

/// Greedy pass in column order: keeps a column iff it is at least delta away
/// (Euclidean) from every column kept so far.
BeliefMatrix delta_subsample(const BeliefMatrix& beliefs, double delta);

/// Symmetrised K-nearest-neighbour relation over belief columns.
struct NeighbourhoodGraph {
    std::size_t k = 0;
    std::vector<std::vector<std::size_t>> adjacency;  // sorted, no self loops

    std::size_t node_count() const { return adjacency.size(); }
    /// Undirected edges (i < j), sorted.
    std::vector<std::pair<std::size_t, std::size_t>> edges() const;
};

/// Per node, the K nearest other columns (ties to the lower index); an edge is kept
/// if either endpoint selected it. Rejects K == 0 and K >= m.
NeighbourhoodGraph knn_graph(const BeliefMatrix& beliefs, std::size_t k);

}  // namespace bsqz
