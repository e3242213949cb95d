#include "core/evaluation.hpp"

#include "core/compressed.hpp"
#include "core/parallel.hpp"
#include "core/rng.hpp"

#include <cmath>

namespace bsqz {

void EvalProtocol::validate() const {
    if (n_trajectories == 0 || horizon == 0 || n_repeats == 0)
        throw InvalidArgument("evaluation counts must be at least 1");
}

namespace {

double run_trajectory(const Pomdp& model, const ValueFunction& gamma, const CompressionBasis* basis,
                      std::size_t horizon, bool discounted, Rng& rng) {
    const Belief b0 = model.start();
    Belief b = b0;
    std::size_t s = sample_index(rng, b0);
    double ret = 0.0;
    double weight = 1.0;
    for (std::size_t t = 0; t < horizon; ++t) {
        const std::size_t a = basis ? greedy_action(gamma, compress_belief(*basis, b)) : greedy_action(gamma, b);
        const auto si = static_cast<Eigen::Index>(s);
        const auto ai = static_cast<Eigen::Index>(a);
        ret += weight * model.reward(si, ai);
        if (discounted) weight *= model.discount;
        const std::size_t next = sample_index(rng, model.transition[a].row(si));
        const std::size_t z = sample_index(rng, model.observation[a].row(static_cast<Eigen::Index>(next)));
        try {
            b = belief_update(model, b, a, z);
        } catch (const ImpossibleObservation&) {
            // Only reachable through rounding; fall back to an observation the filter accepts.
            const Vector dist = observation_distribution(model, b, a);
            b = belief_update(model, b, a, sample_index(rng, dist));
        }
        s = next;
    }
    return ret;
}

EvalResult simulate(const Pomdp& model, const ValueFunction& gamma, const CompressionBasis* basis,
                    const EvalProtocol& proto) {
    proto.validate();
    require_valid(model);
    if (gamma.empty()) throw InvalidArgument("cannot evaluate an empty value function");
    const std::size_t want = basis ? static_cast<std::size_t>(basis->F.cols()) : model.n_states;
    if (basis && basis->F.rows() != static_cast<Eigen::Index>(model.n_states))
        throw InvalidArgument("basis does not match the model");
    if (gamma.dim() != want) throw InvalidArgument("value function dimension does not match");

    EvalResult res;
    res.discounted = proto.discounted;
    for (std::size_t r = 0; r < proto.n_repeats; ++r) {
        const std::uint64_t repeat_seed = derive_seed(proto.seed, r);
        std::vector<double> returns(proto.n_trajectories);
        parallel::for_each_index(proto.n_trajectories, [&](std::size_t i) {
            Rng rng(derive_seed(repeat_seed, i));
            returns[i] = run_trajectory(model, gamma, basis, proto.horizon, proto.discounted, rng);
        });
        double sum = 0.0;
        for (double v : returns) sum += v;
        res.per_repeat.push_back(sum / static_cast<double>(proto.n_trajectories));
    }
    double sum = 0.0;
    for (double v : res.per_repeat) sum += v;
    res.mean = sum / static_cast<double>(res.per_repeat.size());
    if (res.per_repeat.size() > 1) {
        double ss = 0.0;
        for (double v : res.per_repeat) ss += (v - res.mean) * (v - res.mean);
        res.std = std::sqrt(ss / static_cast<double>(res.per_repeat.size() - 1));
    }
    return res;
}

}  // namespace

EvalResult simulate_policy(const Pomdp& model, const ValueFunction& gamma, const EvalProtocol& proto) {
    return simulate(model, gamma, nullptr, proto);
}

EvalResult simulate_policy(const Pomdp& model, const ValueFunction& gamma, const CompressionBasis& basis,
                           const EvalProtocol& proto) {
    return simulate(model, gamma, &basis, proto);
}

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::Converged: return "converged";
        case Verdict::Plateaued: return "plateaued";
        case Verdict::Diverged: return "diverged";
    }
    return "unknown";
}

Verdict divergence_verdict(const SolverTrace& trace) {
    if (trace.guard_fired || trace.status == SolveStatus::Diverged) return Verdict::Diverged;
    const double ceiling = trace.ceiling();
    for (double v : trace.expected_value)
        if (!std::isfinite(v) || std::abs(v) > ceiling) return Verdict::Diverged;
    return trace.status == SolveStatus::Converged ? Verdict::Converged : Verdict::Plateaued;
}

}  // namespace bsqz
