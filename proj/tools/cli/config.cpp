#include "cli/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

namespace bsqz::cli {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <typename T>
T parse_unsigned(const std::string& key, const std::string& v) {
    T out{};
    const auto* end = v.data() + v.size();
    auto [p, ec] = std::from_chars(v.data(), end, out);
    if (v.empty() || ec != std::errc() || p != end) throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
    return out;
}

double parse_double(const std::string& key, const std::string& v) {
    double out = 0.0;
    const auto* end = v.data() + v.size();
    auto [p, ec] = std::from_chars(v.data(), end, out);
    if (v.empty() || ec != std::errc() || p != end || !std::isfinite(out))
        throw ConfigError(key + ": expected a finite number, got '" + v + "'");
    return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::optional<std::uint64_t> parse_seed(const std::string& key, const std::string& v) {
    if (v == "auto") return std::nullopt;
    return parse_unsigned<std::uint64_t>(key, v);
}

std::string seed_text(const std::optional<std::uint64_t>& s) { return s ? std::to_string(*s) : "auto"; }

std::string choice(const std::string& key, const std::string& v, std::initializer_list<const char*> allowed) {
    for (const char* a : allowed)
        if (v == a) return v;
    std::string msg = key + ": '" + v + "' is not one of";
    for (const char* a : allowed) msg += std::string(" ") + a;
    throw ConfigError(msg);
}

struct Field {
    std::string key;
    std::function<std::string(const ExperimentConfig&)> get;
    std::function<void(ExperimentConfig&, const std::string&)> set;
};

#define BSQZ_SIZE(name, member)                                                                       \
    Field { name, [](const ExperimentConfig& c) { return std::to_string(c.member); },                 \
            [](ExperimentConfig& c, const std::string& v) { c.member = parse_unsigned<std::size_t>(name, v); } }
#define BSQZ_REAL(name, member)                                                                       \
    Field { name, [](const ExperimentConfig& c) { return format_double(c.member); },                  \
            [](ExperimentConfig& c, const std::string& v) { c.member = parse_double(name, v); } }
#define BSQZ_BOOL(name, member)                                                                       \
    Field { name, [](const ExperimentConfig& c) { return std::string(c.member ? "true" : "false"); }, \
            [](ExperimentConfig& c, const std::string& v) { c.member = parse_bool(name, v); } }
#define BSQZ_SEED(name, member)                                                                       \
    Field { name, [](const ExperimentConfig& c) { return seed_text(c.member); },                      \
            [](ExperimentConfig& c, const std::string& v) { c.member = parse_seed(name, v); } }
#define BSQZ_TEXT(name, member)                                                                       \
    Field { name, [](const ExperimentConfig& c) { return c.member; },                                 \
            [](ExperimentConfig& c, const std::string& v) { c.member = v; } }

const std::vector<Field>& fields() {
    static const std::vector<Field> f = {
        BSQZ_TEXT("model", model),
        Field{"seed", [](const ExperimentConfig& c) { return std::to_string(c.seed); },
              [](ExperimentConfig& c, const std::string& v) { c.seed = parse_unsigned<std::uint64_t>("seed", v); }},
        BSQZ_TEXT("out", out),
        BSQZ_SIZE("sampler.m", sampler.m),
        BSQZ_SEED("sampler.seed", sampler.seed),
        BSQZ_SIZE("sampler.horizon_cap", sampler.horizon_cap),
        Field{"compress.method", [](const ExperimentConfig& c) { return c.compress.method; },
              [](ExperimentConfig& c, const std::string& v) {
                  c.compress.method = choice("compress.method", v, {"none", "vdc", "pnmf", "onmf", "lpnmf"});
              }},
        BSQZ_TEXT("compress.basis", compress.basis),
        BSQZ_SIZE("compress.k", compress.k),
        Field{"compress.vdc_mode", [](const ExperimentConfig& c) { return c.compress.vdc_mode; },
              [](ExperimentConfig& c, const std::string& v) {
                  c.compress.vdc_mode = choice("compress.vdc_mode", v, {"lossless-rank", "lossless-residual", "lossy"});
              }},
        BSQZ_REAL("compress.tau", compress.tau),
        Field{"compress.lambda", [](const ExperimentConfig& c) { return c.compress.lambda; },
              [](ExperimentConfig& c, const std::string& v) {
                  c.compress.lambda = v == "auto" ? v : format_double(parse_double("compress.lambda", v));
              }},
        BSQZ_SIZE("compress.max_iters", compress.max_iters),
        BSQZ_REAL("compress.tol", compress.tol),
        BSQZ_SEED("compress.seed", compress.seed),
        BSQZ_REAL("compress.delta", compress.delta),
        BSQZ_SIZE("compress.knn_k", compress.knn_k),
        BSQZ_REAL("compress.locality_weight", compress.locality_weight),
        BSQZ_SIZE("compress.restarts", compress.restarts),
        BSQZ_BOOL("compress.accelerate", compress.accelerate),
        BSQZ_SIZE("solver.points", solver.points),
        BSQZ_SIZE("solver.max_stages", solver.max_stages),
        BSQZ_REAL("solver.tol", solver.tol),
        BSQZ_SEED("solver.seed", solver.seed),
        BSQZ_BOOL("solver.prune", solver.prune),
        BSQZ_BOOL("solver.synchronous", solver.synchronous),
        BSQZ_SIZE("eval.trajectories", eval.trajectories),
        BSQZ_SIZE("eval.horizon", eval.horizon),
        BSQZ_SIZE("eval.repeats", eval.repeats),
        BSQZ_SEED("eval.seed", eval.seed),
        BSQZ_BOOL("eval.discounted", eval.discounted),
        BSQZ_SIZE("diagnose.draws", diagnose.draws),
        Field{"report.sweep", [](const ExperimentConfig& c) { return c.report.sweep; },
              [](ExperimentConfig& c, const std::string& v) { c.report.sweep = choice("report.sweep", v, {"k", "tau"}); }},
        Field{"report.values",
              [](const ExperimentConfig& c) {
                  std::string s;
                  for (std::size_t i = 0; i < c.report.values.size(); ++i) {
                      if (i) s += ",";
                      s += format_double(c.report.values[i]);
                  }
                  return s;
              },
              [](ExperimentConfig& c, const std::string& v) {
                  c.report.values.clear();
                  std::stringstream ss(v);
                  std::string item;
                  while (std::getline(ss, item, ',')) {
                      item = trim(item);
                      if (!item.empty()) c.report.values.push_back(parse_double("report.values", item));
                  }
              }},
    };
    return f;
}

#undef BSQZ_SIZE
#undef BSQZ_REAL
#undef BSQZ_BOOL
#undef BSQZ_SEED
#undef BSQZ_TEXT

const Field& field(const std::string& key) {
    for (const auto& f : fields())
        if (f.key == key) return f;
    throw ConfigError("unknown config key '" + key + "'");
}

}  // namespace

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void ExperimentConfig::set(const std::string& key, const std::string& value) { field(key).set(*this, trim(value)); }

std::string ExperimentConfig::get(const std::string& key) const { return field(key).get(*this); }

const std::vector<std::string>& ExperimentConfig::keys() {
    static const std::vector<std::string> k = [] {
        std::vector<std::string> out;
        for (const auto& f : fields()) out.push_back(f.key);
        return out;
    }();
    return k;
}

std::string ExperimentConfig::serialise() const {
    std::string s;
    for (const auto& f : fields()) s += f.key + " = " + f.get(*this) + "\n";
    return s;
}

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
    ExperimentConfig cfg;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        try {
            cfg.set(trim(line.substr(0, eq)), line.substr(eq + 1));
        } catch (const ConfigError& e) {
            throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

void ExperimentConfig::validate() const {
    if (model.empty()) throw ConfigError("model is not set");
    if (sampler.m == 0) throw ConfigError("sampler.m must be positive");
    if (sampler.horizon_cap == 0) throw ConfigError("sampler.horizon_cap must be positive");
    if (compress.method != "none" && compress.method != "vdc" && compress.basis.empty() && compress.k == 0)
        throw ConfigError("compress.k must be positive for " + compress.method);
    if (compress.method == "vdc" && compress.vdc_mode == "lossy" && compress.basis.empty() && compress.k == 0)
        throw ConfigError("compress.k must be positive for lossy VDC");
    if (compress.lambda == "auto" && compress.method != "pnmf" && compress.method != "onmf")
        throw ConfigError("compress.lambda=auto applies to pnmf and onmf only");
    if (compress.restarts == 0) throw ConfigError("compress.restarts must be positive");
    if (eval.repeats == 0 || eval.trajectories == 0) throw ConfigError("eval.repeats and eval.trajectories must be positive");
    for (double v : report.values)
        if (report.sweep == "k" && (v < 1 || v != std::floor(v))) throw ConfigError("report.values must be positive integers for a k sweep");
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : cfg.serialise()) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

void apply_override(ExperimentConfig& cfg, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' is not key=value");
    cfg.set(trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

}  // namespace bsqz::cli
