#include "cli/commands.hpp"

#include "cli/svg.hpp"

#include <bsqz/bsqz.h>

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <vector>

namespace bsqz::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

struct ApiError : std::runtime_error {
    bsqz_status status;
    std::string stage;
    ApiError(bsqz_status s, std::string st, const std::string& msg) : std::runtime_error(msg), status(s), stage(std::move(st)) {}
};

void check(bsqz_status s, const char* stage) {
    if (s != BSQZ_OK) throw ApiError(s, stage, bsqz_last_error());
}

template <typename T, void (*Free)(T*)>
struct Deleter {
    void operator()(T* p) const { Free(p); }
};
using Model = std::unique_ptr<bsqz_model, Deleter<bsqz_model, bsqz_model_free>>;
using Beliefs = std::unique_ptr<bsqz_beliefs, Deleter<bsqz_beliefs, bsqz_beliefs_free>>;
using Basis = std::unique_ptr<bsqz_basis, Deleter<bsqz_basis, bsqz_basis_free>>;
using Compressed = std::unique_ptr<bsqz_compressed, Deleter<bsqz_compressed, bsqz_compressed_free>>;
using Solution = std::unique_ptr<bsqz_solution, Deleter<bsqz_solution, bsqz_solution_free>>;
using Value = std::unique_ptr<bsqz_value, Deleter<bsqz_value, bsqz_value_free>>;

std::string num(double v) { return format_double(v); }

class Csv {
  public:
    explicit Csv(std::vector<std::string> header) { row(header); }
    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) text_ += ',';
            text_ += quote(cells[i]);
        }
        text_ += '\n';
    }
    const std::string& str() const { return text_; }

  private:
    static std::string quote(const std::string& s) {
        if (s.find_first_of(",\"\n") == std::string::npos) return s;
        std::string q = "\"";
        for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
        return q + "\"";
    }
    std::string text_;
};

const char* verdict_name(bsqz_verdict v) {
    switch (v) {
        case BSQZ_CONVERGED: return "converged";
        case BSQZ_PLATEAUED: return "plateaued";
        case BSQZ_DIVERGED: return "diverged";
    }
    return "unknown";
}

const char* check_name(bsqz_check_status s) {
    switch (s) {
        case BSQZ_CHECK_PASS: return "pass";
        case BSQZ_CHECK_FAIL: return "fail";
        case BSQZ_CHECK_NOT_APPLICABLE: return "not-applicable";
        case BSQZ_CHECK_NONE_FOUND: return "none-found";
    }
    return "unknown";
}

struct SolveOutcome {
    Solution solution;
    std::vector<double> expected_value;
    std::vector<std::size_t> n_vectors;
    std::vector<double> max_change;
    bsqz_verdict verdict = BSQZ_CONVERGED;
    std::string status;

    const bsqz_value* value() const { return bsqz_solution_value(solution.get()); }
};

struct EvalOutcome {
    double mean = 0.0;
    double std = 0.0;
    std::vector<double> per_repeat;
};

std::string mean_pm_std(double mean, double sd) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4g\xC2\xB1%.2g", mean, sd);
    return buf;
}

class Pipeline {
  public:
    Pipeline(const ExperimentConfig& cfg, fs::path out, std::ostream& log) : cfg_(cfg), out_(std::move(out)), log_(log) {}

    void load_model() {
        const std::string& spec = cfg_.model;
        bsqz_model* m = nullptr;
        if (spec.rfind("synth:", 0) == 0) {
            std::map<std::string, std::uint64_t> p{{"k", 2}, {"n", 10}, {"seed", 0}};
            std::stringstream ss(spec.substr(6));
            std::string item;
            while (std::getline(ss, item, ',')) {
                const auto eq = item.find('=');
                if (eq == std::string::npos || !p.count(item.substr(0, eq)))
                    throw ConfigError("model: bad synth parameter '" + item + "' (expected k=,n=,seed=)");
                try {
                    p[item.substr(0, eq)] = std::stoull(item.substr(eq + 1));
                } catch (const std::exception&) {
                    throw ConfigError("model: bad synth value in '" + item + "'");
                }
            }
            check(bsqz_model_synth_lowrank(p["k"], p["n"], p["seed"], &m), "model");
        } else {
            if (!fs::exists(spec)) throw ConfigError("model file '" + spec + "' does not exist");
            check(bsqz_model_load(spec.c_str(), &m), "model");
        }
        model_.reset(m);
        check(bsqz_model_dims(model_.get(), &n_states_, &n_actions_, &n_obs_, &discount_), "model");
    }

    void sample() {
        bsqz_beliefs* b = nullptr;
        check(bsqz_sample_beliefs(model_.get(), cfg_.sampler.m, cfg_.sampler_seed(), cfg_.sampler.horizon_cap, &b), "sample");
        beliefs_.reset(b);
        save("beliefs.bin", bsqz_beliefs_save(beliefs_.get(), path("beliefs.bin").c_str()));
        bsqz_beliefs* h = nullptr;
        const std::size_t count = cfg_.solver.points ? cfg_.solver.points : cfg_.sampler.m;
        check(bsqz_beliefs_head(beliefs_.get(), count, &h), "sample");
        points_.reset(h);
    }

    Basis make_basis(const ExperimentConfig& c) const {
        bsqz_basis* b = nullptr;
        if (c.compress.method == "vdc") {
            bsqz_vdc_options o;
            bsqz_vdc_options_default(&o);
            o.mode = c.compress.vdc_mode == "lossless-rank"       ? BSQZ_VDC_LOSSLESS_RANK
                     : c.compress.vdc_mode == "lossless-residual" ? BSQZ_VDC_LOSSLESS_RESIDUAL
                                                                  : BSQZ_VDC_LOSSY;
            o.tau = c.compress.tau;
            o.k = c.compress.k;
            check(bsqz_compress_vdc(model_.get(), &o, &b), "compress");
        } else {
            bsqz_nmf_options o;
            bsqz_nmf_options_default(&o);
            o.variant = c.compress.method == "pnmf" ? BSQZ_NMF_PNMF : c.compress.method == "onmf" ? BSQZ_NMF_ONMF : BSQZ_NMF_LPNMF;
            o.k = c.compress.k;
            o.lambda_auto = c.compress.lambda == "auto";
            o.lambda = o.lambda_auto ? 0.0 : std::stod(c.compress.lambda);
            o.max_iters = c.compress.max_iters;
            o.tol = c.compress.tol;
            o.seed = c.compress_seed();
            o.delta = c.compress.delta;
            o.knn_k = c.compress.knn_k;
            o.locality_weight = c.compress.locality_weight;
            o.restarts = c.compress.restarts;
            o.accelerate = c.compress.accelerate ? 1 : 0;
            check(bsqz_compress_nmf(model_.get(), beliefs_.get(), &o, &b), "compress");
        }
        return Basis(b);
    }

    void compress() {
        if (!cfg_.compressed()) return;
        const auto t0 = std::chrono::steady_clock::now();
        if (!cfg_.compress.basis.empty()) {
            if (!fs::exists(cfg_.compress.basis)) throw ConfigError("basis file '" + cfg_.compress.basis + "' does not exist");
            bsqz_basis* b = nullptr;
            check(bsqz_basis_load(cfg_.compress.basis.c_str(), &b), "compress");
            basis_.reset(b);
        } else {
            basis_ = make_basis(cfg_);
        }
        std::size_t n = 0, k = 0;
        check(bsqz_basis_dims(basis_.get(), &n, &k), "compress");
        if (n != n_states_) throw ConfigError("basis has " + std::to_string(n) + " rows but the model has " + std::to_string(n_states_) + " states");
        k_ = k;
        check(bsqz_error_report_compute(model_.get(), basis_.get(), &errors_), "compress");
        errors_ready_ = true;
        bsqz_compressed* c = nullptr;
        check(bsqz_build_compressed(model_.get(), basis_.get(), &c), "compress");
        compressed_.reset(c);
        timings_["compression"] = seconds_since(t0);

        save("basis.bin", bsqz_basis_save(basis_.get(), path("basis.bin").c_str()));
        save("compressed.bin", bsqz_compressed_save(compressed_.get(), path("compressed.bin").c_str()));

        std::vector<double> F(n * k);
        check(bsqz_basis_copy(basis_.get(), F.data(), nullptr), "compress");
        std::vector<std::string> header{"state"};
        for (std::size_t j = 0; j < k; ++j) header.push_back("f" + std::to_string(j));
        Csv basis_csv(header);
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<std::string> row{std::to_string(i)};
            for (std::size_t j = 0; j < k; ++j) row.push_back(num(F[j * n + i]));
            basis_csv.row(row);
        }
        write("basis.csv", basis_csv.str());

        const std::string method = bsqz_basis_method(basis_.get());
        std::size_t len = 0;
        const double* trace = nullptr;
        check(bsqz_basis_trace(basis_.get(), &len, &trace), "compress");
        Csv trace_csv({method == "vdc" ? "column" : "iteration", method == "vdc" ? "residual" : "objective"});
        for (std::size_t i = 0; i < len; ++i) trace_csv.row({std::to_string(i), num(trace[i])});
        write("compress_trace.csv", trace_csv.str());

        double residual = 0.0;
        check(bsqz_basis_residual(basis_.get(), beliefs_.get(), &residual), "compress");
        Csv err({"method", "k", "eps_r", "eps_t", "a_inf", "i_minus_a_inf", "contraction_margin", "value_bound", "v_sup",
                 "belief_residual", "nonnegative", "stop_reason", "lambda"});
        err.row({method, std::to_string(k), num(errors_.eps_r), num(errors_.eps_t), num(errors_.a_inf), num(errors_.i_minus_a_inf),
                 num(errors_.contraction_margin), errors_.has_value_bound ? num(errors_.value_bound) : "", num(errors_.v_sup),
                 num(residual), bsqz_basis_nonnegative(basis_.get()) ? "true" : "false", bsqz_basis_stop_reason(basis_.get()),
                 num(bsqz_basis_lambda(basis_.get()))});
        write("errors.csv", err.str());
        log_ << "compressed with " << method << " to k=" << k << " (eps_T=" << errors_.eps_t
             << ", margin=" << errors_.contraction_margin << ")\n";
    }

    SolveOutcome solve(bool compressed, const std::string& suffix) {
        bsqz_solver_options o;
        bsqz_solver_options_default(&o);
        o.max_stages = cfg_.solver.max_stages;
        o.seed = cfg_.solver_seed();
        o.prune = cfg_.solver.prune ? 1 : 0;
        o.tol = cfg_.solver.tol;
        o.synchronous = cfg_.solver.synchronous ? 1 : 0;
        const auto t0 = std::chrono::steady_clock::now();
        bsqz_solution* s = nullptr;
        check(bsqz_solve(model_.get(), compressed ? compressed_.get() : nullptr, points_.get(), &o, &s), "solve");
        SolveOutcome r;
        r.solution.reset(s);
        timings_["policy" + suffix] = seconds_since(t0);

        const std::size_t stages = bsqz_solution_stages(s);
        r.expected_value.resize(stages);
        r.n_vectors.resize(stages);
        r.max_change.resize(stages);
        check(bsqz_solution_trace(s, r.expected_value.data(), r.n_vectors.data(), r.max_change.data()), "solve");
        r.verdict = bsqz_solution_verdict(s);
        r.status = bsqz_solution_status(s);

        save("value" + suffix + ".bin", bsqz_value_save(r.value(), path("value" + suffix + ".bin").c_str()));
        std::size_t count = 0, dim = 0;
        check(bsqz_value_dims(r.value(), &count, &dim), "solve");
        std::vector<double> alphas(count * dim);
        std::vector<std::size_t> actions(count);
        check(bsqz_value_copy(r.value(), alphas.data(), actions.data()), "solve");
        std::vector<std::string> header{"action"};
        for (std::size_t j = 0; j < dim; ++j) header.push_back("v" + std::to_string(j));
        Csv value_csv(header);
        for (std::size_t i = 0; i < count; ++i) {
            std::vector<std::string> row{std::to_string(actions[i])};
            for (std::size_t j = 0; j < dim; ++j) row.push_back(num(alphas[i * dim + j]));
            value_csv.row(row);
        }
        write("value" + suffix + ".csv", value_csv.str());

        Csv trace({"stage", "expected_value", "n_vectors", "max_change", "status"});
        for (std::size_t i = 0; i < stages; ++i)
            trace.row({std::to_string(i + 1), num(r.expected_value[i]), std::to_string(r.n_vectors[i]), num(r.max_change[i]),
                       i + 1 == stages ? verdict_name(r.verdict) : "running"});
        write("trace" + suffix + ".csv", trace.str());

        Csv summary({"process", "stages", "solver_status", "verdict", "ceiling", "heuristic_floor", "n_vectors"});
        summary.row({compressed ? "compressed" : "original", std::to_string(stages), r.status, verdict_name(r.verdict),
                     num(bsqz_solution_ceiling(s)), bsqz_solution_heuristic_floor(s) ? "true" : "false", std::to_string(count)});
        write("solve_summary" + suffix + ".csv", summary.str());
        log_ << "solved " << (compressed ? "compressed" : "original") << " process: " << stages << " stages, "
             << verdict_name(r.verdict) << "\n";
        return r;
    }

    SolveOutcome solve_configured() { return solve(cfg_.compressed(), ""); }

    EvalOutcome evaluate(const SolveOutcome& s, bool compressed, const std::string& suffix) {
        bsqz_eval_protocol p;
        bsqz_eval_protocol_default(&p);
        p.n_trajectories = cfg_.eval.trajectories;
        p.horizon = cfg_.eval.horizon;
        p.n_repeats = cfg_.eval.repeats;
        p.seed = cfg_.eval_seed();
        p.discounted = cfg_.eval.discounted ? 1 : 0;
        EvalOutcome r;
        r.per_repeat.resize(p.n_repeats);
        const auto t0 = std::chrono::steady_clock::now();
        check(bsqz_evaluate(model_.get(), s.value(), compressed ? basis_.get() : nullptr, &p, &r.mean, &r.std, r.per_repeat.data()),
              "eval");
        timings_["evaluation" + suffix] = seconds_since(t0);
        Csv per({"repeat", "mean_reward"});
        for (std::size_t i = 0; i < r.per_repeat.size(); ++i) per.row({std::to_string(i), num(r.per_repeat[i])});
        write("eval" + suffix + ".csv", per.str());
        Csv summary({"policy", "mean", "std", "mean_pm_std"});
        summary.row({label(compressed), num(r.mean), num(r.std), mean_pm_std(r.mean, r.std)});
        write("eval_summary" + suffix + ".csv", summary.str());
        log_ << "evaluated " << label(compressed) << ": " << mean_pm_std(r.mean, r.std) << "\n";
        return r;
    }

    void diagnose(const SolveOutcome& original, const SolveOutcome& comp) {
        std::string lines;
        auto emit = [&](const json& j) { lines += j.dump() + "\n"; };

        bsqz_check c4{};
        check(bsqz_lemma4(basis_.get(), points_.get(), cfg_.diagnose.draws, cfg_.seed + 4, &c4), "diagnose");
        emit({{"check", "lemma4"}, {"status", check_name(c4.status)}, {"margin", c4.margin},
              {"nonnegative_basis", bsqz_basis_nonnegative(basis_.get()) != 0}, {"draws", cfg_.diagnose.draws}});

        bsqz_check c3{};
        double measured = 0.0, bound = 0.0;
        check(bsqz_value_gap(model_.get(), basis_.get(), original.value(), comp.value(), points_.get(), &c3, &measured, &bound),
              "diagnose");
        json t3{{"check", "value_gap"}, {"status", check_name(c3.status)}, {"margin", c3.margin},
                {"contraction_margin", errors_.contraction_margin}};
        if (c3.status != BSQZ_CHECK_NOT_APPLICABLE) {
            t3["measured"] = measured;
            t3["bound"] = bound;
        }
        emit(t3);

        bsqz_value* lifted = nullptr;
        check(bsqz_value_lift(basis_.get(), comp.value(), &lifted), "diagnose");
        Value lifted_v(lifted);
        std::size_t passed = 0, failed = 0, na = 0;
        check(bsqz_lemma1(model_.get(), basis_.get(), lifted_v.get(), points_.get(), &passed, &failed, &na), "diagnose");
        emit({{"check", "lemma1"}, {"status", failed ? "fail" : passed ? "pass" : "not-applicable"}, {"passed", passed},
              {"failed", failed}, {"not_applicable", na}});

        std::size_t n = 0, count = 0;
        check(bsqz_beliefs_dims(points_.get(), &n, &count), "diagnose");
        std::vector<double> lhs(count), rhs(count);
        std::vector<int> premise(count);
        double max_residual = 0.0;
        std::size_t premise_failures = 0;
        check(bsqz_value_loss(model_.get(), basis_.get(), original.value(), comp.value(), points_.get(), lhs.data(), rhs.data(),
                              premise.data(), &max_residual, &premise_failures),
              "diagnose");
        Csv vl({"belief", "lhs", "rhs", "residual", "premise"});
        for (std::size_t i = 0; i < count; ++i)
            vl.row({std::to_string(i), num(lhs[i]), num(rhs[i]), num(std::abs(lhs[i] - rhs[i])), premise[i] ? "true" : "false"});
        write("value_loss.csv", vl.str());
        emit({{"check", "value_loss"}, {"max_residual", max_residual}, {"premise_failures", premise_failures}, {"beliefs", count}});

        emit({{"check", "divergence"}, {"original", verdict_name(original.verdict)}, {"compressed", verdict_name(comp.verdict)}});
        write("diagnostics.jsonl", lines);
        log_ << "diagnostics: lemma4 " << check_name(c4.status) << ", value_gap " << check_name(c3.status) << "\n";
    }

    void report(const SolveOutcome& original, const SolveOutcome* comp, const EvalOutcome& eo, const EvalOutcome* ec) {
        if (cfg_.compressed()) sweep();

        std::vector<Series> traces;
        Csv f2({"series", "stage", "expected_value"});
        auto add_trace = [&](const std::string& name, const SolveOutcome& s) {
            Series ser{name, {}, {}};
            for (std::size_t i = 0; i < s.expected_value.size(); ++i) {
                f2.row({name, std::to_string(i + 1), num(s.expected_value[i])});
                ser.x.push_back(static_cast<double>(i + 1));
                ser.y.push_back(s.expected_value[i]);
            }
            traces.push_back(std::move(ser));
        };
        add_trace("uncompressed", original);
        if (comp) add_trace(label(true), *comp);
        write("figure2.csv", f2.str());
        write("figure2.svg", line_chart({"Expected value during value iteration", "stage", "sum of point values", false, 640, 420}, traces));

        Csv table({"policy", "k", "verdict", "mean", "std", "mean_pm_std"});
        table.row({"uncompressed", std::to_string(n_states_), verdict_name(original.verdict), num(eo.mean), num(eo.std),
                   mean_pm_std(eo.mean, eo.std)});
        if (comp && ec)
            table.row({label(true), std::to_string(k_), verdict_name(comp->verdict), num(ec->mean), num(ec->std),
                       mean_pm_std(ec->mean, ec->std)});
        write("table.csv", table.str());
        Csv reps({"policy", "repeat", "mean_reward"});
        for (std::size_t i = 0; i < eo.per_repeat.size(); ++i) reps.row({"uncompressed", std::to_string(i), num(eo.per_repeat[i])});
        if (ec)
            for (std::size_t i = 0; i < ec->per_repeat.size(); ++i) reps.row({label(true), std::to_string(i), num(ec->per_repeat[i])});
        write("table_repeats.csv", reps.str());
    }

    void write_manifest(const std::string& command, double total) {
        json cfg = json::object();
        for (const auto& key : ExperimentConfig::keys()) cfg[key] = cfg_.get(key);
        char hash[20];
        std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(config_hash(cfg_)));
        json times = json::object();
        for (const auto& [k, v] : timings_) times[k] = v;
        times["total"] = total;
        json m{{"command", command},       {"version", bsqz_version()}, {"config_hash", hash}, {"config", cfg},
               {"wall_seconds", times},     {"outputs", outputs_}};
        write("config.txt", cfg_.serialise());
        std::ofstream(path("manifest.json"), std::ios::binary) << m.dump(2) << "\n";
    }

    void write_failure(const ApiError& e) {
        json f{{"stage", e.stage}, {"status", bsqz_status_name(e.status)}, {"message", e.what()}};
        if (errors_ready_)
            f["error_report"] = {{"eps_r", errors_.eps_r}, {"eps_t", errors_.eps_t}, {"contraction_margin", errors_.contraction_margin}};
        std::ofstream(path("failure.json"), std::ios::binary) << f.dump(2) << "\n";
    }

  private:
    void sweep() {
        std::vector<double> values = cfg_.report.values;
        if (values.empty()) values.push_back(cfg_.report.sweep == "k" ? static_cast<double>(k_) : cfg_.compress.tau);
        if (cfg_.report.sweep == "tau" && cfg_.compress.method != "vdc") throw ConfigError("report.sweep=tau requires compress.method=vdc");
        Csv f1({cfg_.report.sweep == "k" ? "k_requested" : "tau", "k", "eps_r", "eps_t", "contraction_margin"});
        Series er{"eps_R", {}, {}}, et{"eps_T", {}, {}};
        for (double v : values) {
            ExperimentConfig c = cfg_;
            c.compress.basis.clear();
            if (c.report.sweep == "k") {
                c.compress.k = static_cast<std::size_t>(v);
                if (c.compress.method == "vdc") c.compress.vdc_mode = "lossy";
            } else {
                c.compress.vdc_mode = "lossless-residual";
                c.compress.tau = v;
            }
            Basis b = make_basis(c);
            bsqz_error_report rep{};
            check(bsqz_error_report_compute(model_.get(), b.get(), &rep), "report");
            std::size_t n = 0, k = 0;
            check(bsqz_basis_dims(b.get(), &n, &k), "report");
            f1.row({num(v), std::to_string(k), num(rep.eps_r), num(rep.eps_t), num(rep.contraction_margin)});
            er.x.push_back(v);
            er.y.push_back(rep.eps_r);
            et.x.push_back(v);
            et.y.push_back(rep.eps_t);
        }
        write("figure1.csv", f1.str());
        write("figure1.svg",
              line_chart({"Compression errors (" + cfg_.compress.method + ")", cfg_.report.sweep, "error (inf-norm)", true, 640, 420},
                         {er, et}));
    }

    std::string label(bool compressed) const {
        if (!compressed) return "uncompressed";
        return std::string(basis_ ? bsqz_basis_method(basis_.get()) : cfg_.compress.method.c_str()) + " k=" + std::to_string(k_);
    }

    std::string path(const std::string& name) const { return (out_ / name).string(); }

    void write(const std::string& name, const std::string& text) {
        std::ofstream f(path(name), std::ios::binary);
        f << text;
        if (!f) throw ApiError(BSQZ_ERR_IO, "output", "cannot write " + path(name));
        outputs_.push_back(name);
    }

    void save(const std::string& name, bsqz_status s) {
        check(s, "output");
        outputs_.push_back(name);
    }

    static double seconds_since(std::chrono::steady_clock::time_point t0) {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }

    const ExperimentConfig& cfg_;
    fs::path out_;
    std::ostream& log_;
    Model model_;
    Beliefs beliefs_, points_;
    Basis basis_;
    Compressed compressed_;
    bsqz_error_report errors_{};
    bool errors_ready_ = false;
    std::size_t n_states_ = 0, n_actions_ = 0, n_obs_ = 0, k_ = 0;
    double discount_ = 0.0;
    std::map<std::string, double> timings_;
    std::vector<std::string> outputs_;
};

int exit_code_for(bsqz_status s) {
    switch (s) {
        case BSQZ_ERR_INVALID_ARGUMENT:
        case BSQZ_ERR_INVALID_MODEL:
        case BSQZ_ERR_PARSE:
        case BSQZ_ERR_IO:
        case BSQZ_ERR_FORMAT: return kExitConfig;
        case BSQZ_ERR_NUMERICAL:
        case BSQZ_ERR_IMPOSSIBLE_OBSERVATION: return kExitNumerical;
        default: return kExitFailure;
    }
}

}  // namespace

std::string output_dir(const ExperimentConfig& cfg) {
    if (!cfg.out.empty()) return cfg.out;
    if (const char* env = std::getenv("BSQZ_OUT"); env && *env) return env;
    return "bsqz-out";
}

int run_command(const std::string& command, const ExperimentConfig& cfg, std::ostream& log) {
    static const std::vector<std::string> known{"compress", "solve", "eval", "diagnose", "report"};
    if (std::find(known.begin(), known.end(), command) == known.end()) {
        log << "error: unknown command '" << command << "'\n";
        return kExitConfig;
    }
    const auto start = std::chrono::steady_clock::now();
    std::unique_ptr<Pipeline> p;
    try {
        cfg.validate();
        if (command == "diagnose" && !cfg.compressed()) throw ConfigError("diagnose needs compress.method other than none");
        const fs::path out = output_dir(cfg);
        std::error_code ec;
        fs::create_directories(out, ec);
        if (ec) throw ConfigError("cannot create output directory '" + out.string() + "': " + ec.message());
        p = std::make_unique<Pipeline>(cfg, out, log);

        p->load_model();
        p->sample();
        p->compress();
        if (command == "solve" || command == "eval") {
            auto s = p->solve_configured();
            if (command == "eval") p->evaluate(s, cfg.compressed(), "");
        } else if (command == "diagnose") {
            auto comp = p->solve(true, "");
            auto orig = p->solve(false, "_original");
            p->diagnose(orig, comp);
        } else if (command == "report") {
            auto orig = p->solve(false, "_original");
            auto eo = p->evaluate(orig, false, "_original");
            if (cfg.compressed()) {
                auto comp = p->solve(true, "");
                auto ec2 = p->evaluate(comp, true, "");
                p->report(orig, &comp, eo, &ec2);
            } else {
                p->report(orig, nullptr, eo, nullptr);
            }
        }
        p->write_manifest(command, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
        return kExitOk;
    } catch (const ConfigError& e) {
        log << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ApiError& e) {
        const int code = exit_code_for(e.status);
        log << (code == kExitNumerical ? "numerical failure" : "error") << " during " << e.stage << ": " << e.what() << "\n";
        if (p && code == kExitNumerical) p->write_failure(e);
        return code;
    } catch (const std::exception& e) {
        log << "error: " << e.what() << "\n";
        return kExitFailure;
    }
}

int run_cli(int argc, char** argv) {
    CLI::App app{"Belief compression for POMDPs: compress, solve, evaluate, diagnose and report"};
    std::string command, config_path, out;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
    unsigned threads = 0;
    app.add_option("command", command, "compress | solve | eval | diagnose | report")
        ->required()
        ->check(CLI::IsMember({"compress", "solve", "eval", "diagnose", "report"}));
    app.add_option("--config", config_path, "flat key = value config file");
    app.add_option("--set", overrides, "override one config field, key=value")->allow_extra_args(false);
    app.add_option("--seed", seed, "master seed");
    app.add_option("--threads", threads, "worker thread cap (0 = all cores)");
    app.add_option("--out", out, "output directory (default $BSQZ_OUT or bsqz-out)");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    ExperimentConfig cfg;
    try {
        if (!config_path.empty()) cfg = ExperimentConfig::load(config_path);
        for (const auto& o : overrides) apply_override(cfg, o);
        if (seed) cfg.seed = *seed;
        if (!out.empty()) cfg.out = out;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    }
    bsqz_set_threads(threads);
    return run_command(command, cfg, std::cerr);
}

}  // namespace bsqz::cli
