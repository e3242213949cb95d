#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace bsqz::cli {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
    /// POMDP file, binary model artifact, or "synth:k=<k>,n=<n>,seed=<s>".
    std::string model;
    std::uint64_t seed = 0;
    /// Empty: $BSQZ_OUT, else "bsqz-out".
    std::string out;

    struct Sampler {
        std::size_t m = 1000;
        std::optional<std::uint64_t> seed;
        std::size_t horizon_cap = 250;
    } sampler;

    struct Compress {
        /// none | vdc | pnmf | onmf | lpnmf
        std::string method = "none";
        /// Existing basis artifact to reuse instead of compressing.
        std::string basis;
        std::size_t k = 0;
        /// lossless-rank | lossless-residual | lossy
        std::string vdc_mode = "lossy";
        double tau = 1e-6;
        /// Number or "auto".
        std::string lambda = "0";
        std::size_t max_iters = 2000;
        double tol = 1e-7;
        std::optional<std::uint64_t> seed;
        double delta = 0.0;
        std::size_t knn_k = 5;
        double locality_weight = 0.1;
        std::size_t restarts = 1;
        bool accelerate = true;
    } compress;

    struct Solver {
        /// 0 uses every sampled belief.
        std::size_t points = 0;
        std::size_t max_stages = 500;
        double tol = 1e-4;
        std::optional<std::uint64_t> seed;
        bool prune = true;
        bool synchronous = false;
    } solver;

    struct Eval {
        std::size_t trajectories = 1000;
        std::size_t horizon = 251;
        std::size_t repeats = 5;
        std::optional<std::uint64_t> seed;
        bool discounted = true;
    } eval;

    struct Diagnose {
        std::size_t draws = 10000;
    } diagnose;

    struct Report {
        /// k | tau
        std::string sweep = "k";
        std::vector<double> values;
    } report;

    std::uint64_t sampler_seed() const { return sampler.seed.value_or(seed); }
    std::uint64_t compress_seed() const { return compress.seed.value_or(seed + 1); }
    std::uint64_t solver_seed() const { return solver.seed.value_or(seed + 2); }
    std::uint64_t eval_seed() const { return eval.seed.value_or(seed + 3); }

    void set(const std::string& key, const std::string& value);
    std::string get(const std::string& key) const;
    static const std::vector<std::string>& keys();

    /// One "key = value" line per field, in keys() order.
    std::string serialise() const;
    static ExperimentConfig parse(const std::string& text);
    static ExperimentConfig load(const std::string& path);

    void validate() const;
    bool compressed() const { return compress.method != "none"; }
};

/// FNV-1a over the serialised form.
std::uint64_t config_hash(const ExperimentConfig& cfg);

/// Applies one "key=value" override.
void apply_override(ExperimentConfig& cfg, const std::string& assignment);

std::string format_double(double v);

}  // namespace bsqz::cli
