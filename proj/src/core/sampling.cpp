#include "core/sampling.hpp"

#include "core/parallel.hpp"
#include "core/rng.hpp"

#include <algorithm>
#include <numeric>

namespace bsqz {

BeliefMatrix sample_beliefs(const Pomdp& model, std::size_t m, std::uint64_t seed, std::size_t horizon_cap) {
    require_valid(model);
    if (m == 0) throw InvalidArgument("sample_beliefs requires m >= 1");
    const std::size_t per_episode = horizon_cap + 1;
    const std::size_t episodes = (m + per_episode - 1) / per_episode;
    const auto n = static_cast<Eigen::Index>(model.n_states);
    const Belief b0 = model.start();

    BeliefMatrix out;
    out.seed = seed;
    out.horizon_cap = horizon_cap;
    out.columns.resize(n, static_cast<Eigen::Index>(m));

    parallel::for_each_index(episodes, [&](std::size_t e) {
        Rng rng(derive_seed(seed, e));
        const std::size_t first = e * per_episode;
        const std::size_t last = std::min(m, first + per_episode);
        Belief b = b0;
        for (std::size_t col = first; col < last; ++col) {
            out.columns.col(static_cast<Eigen::Index>(col)) = b;
            if (col + 1 == last) break;
            const std::size_t a = uniform_index(rng, model.n_actions);
            const Vector pz = observation_distribution(model, b, a);
            const std::size_t z = sample_index(rng, pz);
            try {
                b = belief_update(model, b, a, z);
            } catch (const ImpossibleObservation&) {
                b = b0;
            }
        }
    });
    return out;
}

BeliefMatrix delta_subsample(const BeliefMatrix& beliefs, double delta) {
    if (!(delta >= 0.0)) throw InvalidArgument("delta must be >= 0");
    const auto& B = beliefs.columns;
    std::vector<Eigen::Index> kept;
    const double d2 = delta * delta;
    for (Eigen::Index j = 0; j < B.cols(); ++j) {
        bool keep = true;
        if (delta > 0.0) {
            for (auto i : kept) {
                if ((B.col(j) - B.col(i)).squaredNorm() < d2) {
                    keep = false;
                    break;
                }
            }
        }
        if (keep) kept.push_back(j);
    }
    BeliefMatrix out;
    out.seed = beliefs.seed;
    out.horizon_cap = beliefs.horizon_cap;
    out.columns.resize(B.rows(), static_cast<Eigen::Index>(kept.size()));
    for (std::size_t c = 0; c < kept.size(); ++c) out.columns.col(static_cast<Eigen::Index>(c)) = B.col(kept[c]);
    return out;
}

std::vector<std::pair<std::size_t, std::size_t>> NeighbourhoodGraph::edges() const {
    std::vector<std::pair<std::size_t, std::size_t>> e;
    for (std::size_t i = 0; i < adjacency.size(); ++i)
        for (auto j : adjacency[i])
            if (i < j) e.emplace_back(i, j);
    return e;
}

NeighbourhoodGraph knn_graph(const BeliefMatrix& beliefs, std::size_t k) {
    const std::size_t m = beliefs.size();
    if (k == 0) throw InvalidArgument("knn_graph requires K >= 1");
    if (k >= m) throw InvalidArgument("knn_graph requires K < number of beliefs");
    const auto& B = beliefs.columns;
    std::vector<std::vector<std::size_t>> selected(m);
    parallel::for_each_index(m, [&](std::size_t i) {
        std::vector<std::pair<double, std::size_t>> dist;
        dist.reserve(m - 1);
        for (std::size_t j = 0; j < m; ++j) {
            if (j == i) continue;
            dist.emplace_back((B.col(static_cast<Eigen::Index>(i)) - B.col(static_cast<Eigen::Index>(j))).squaredNorm(), j);
        }
        std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
        for (std::size_t r = 0; r < k; ++r) selected[i].push_back(dist[r].second);
    });
    NeighbourhoodGraph g;
    g.k = k;
    g.adjacency.assign(m, {});
    for (std::size_t i = 0; i < m; ++i) {
        for (auto j : selected[i]) {
            g.adjacency[i].push_back(j);
            g.adjacency[j].push_back(i);
        }
    }
    for (auto& adj : g.adjacency) {
        std::sort(adj.begin(), adj.end());
        adj.erase(std::unique(adj.begin(), adj.end()), adj.end());
    }
    return g;
}

}  // namespace bsqz
