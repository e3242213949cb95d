#include "bsqz/bsqz.h"

#include "core/artifact.hpp"
#include "core/compressed.hpp"
#include "core/diagnostics.hpp"
#include "core/evaluation.hpp"
#include "core/nmf.hpp"
#include "core/parallel.hpp"
#include "core/pomdp_io.hpp"
#include "core/sampling.hpp"
#include "core/solver.hpp"
#include "core/vdc.hpp"

#include <cstring>
#include <string>

struct bsqz_model {
    bsqz::Pomdp m;
};

struct bsqz_beliefs {
    bsqz::BeliefMatrix b;
};

struct bsqz_basis {
    bsqz::CompressionBasis b;
    std::string method;
    std::vector<double> trace;
    std::string stop_reason;
    double lambda = 0.0;
};

struct bsqz_compressed {
    bsqz::CompressedPomdp c;
};

struct bsqz_value {
    bsqz::ValueFunction v;
};

struct bsqz_solution {
    bsqz_value value;
    bsqz::SolverTrace trace;
    std::string status;
};

namespace {

thread_local std::string g_last_error;

template <class Fn>
bsqz_status guarded(Fn&& fn) {
    try {
        fn();
        g_last_error.clear();
        return BSQZ_OK;
    } catch (const bsqz::ParseError& e) {
        g_last_error = e.what();
        return BSQZ_ERR_PARSE;
    } catch (const bsqz::FormatError& e) {
        g_last_error = e.what();
        return BSQZ_ERR_FORMAT;
    } catch (const bsqz::IoError& e) {
        g_last_error = e.what();
        return BSQZ_ERR_IO;
    } catch (const bsqz::InvalidModel& e) {
        g_last_error = e.what();
        return BSQZ_ERR_INVALID_MODEL;
    } catch (const bsqz::InvalidArgument& e) {
        g_last_error = e.what();
        return BSQZ_ERR_INVALID_ARGUMENT;
    } catch (const bsqz::NumericalError& e) {
        g_last_error = e.what();
        return BSQZ_ERR_NUMERICAL;
    } catch (const bsqz::ImpossibleObservation& e) {
        g_last_error = e.what();
        return BSQZ_ERR_IMPOSSIBLE_OBSERVATION;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return BSQZ_ERR_INTERNAL;
    } catch (...) {
        g_last_error = "unknown error";
        return BSQZ_ERR_INTERNAL;
    }
}

void need(const void* p, const char* what) {
    if (!p) throw bsqz::InvalidArgument(std::string(what) + " is NULL");
}

void copy_out(const bsqz::Matrix& m, double* out) {
    std::memcpy(out, m.data(), static_cast<std::size_t>(m.size()) * sizeof(double));
}

bsqz_check to_check(const bsqz::DiagnosticReport& r) {
    bsqz_check c{};
    c.margin = r.margin;
    switch (r.status) {
        case bsqz::CheckStatus::Pass: c.status = BSQZ_CHECK_PASS; break;
        case bsqz::CheckStatus::Fail: c.status = BSQZ_CHECK_FAIL; break;
        case bsqz::CheckStatus::NotApplicable: c.status = BSQZ_CHECK_NOT_APPLICABLE; break;
        case bsqz::CheckStatus::NoneFound: c.status = BSQZ_CHECK_NONE_FOUND; break;
    }
    return c;
}

bsqz_basis* wrap_basis(bsqz::CompressionBasis b) {
    auto* out = new bsqz_basis;
    out->method = bsqz::to_string(b.method);
    out->b = std::move(b);
    return out;
}

}  // namespace

extern "C" {

const char* bsqz_version(void) { return "1.0.0"; }

const char* bsqz_last_error(void) { return g_last_error.c_str(); }

const char* bsqz_status_name(bsqz_status s) {
    switch (s) {
        case BSQZ_OK: return "ok";
        case BSQZ_ERR_INVALID_ARGUMENT: return "invalid-argument";
        case BSQZ_ERR_INVALID_MODEL: return "invalid-model";
        case BSQZ_ERR_PARSE: return "parse-error";
        case BSQZ_ERR_IO: return "io-error";
        case BSQZ_ERR_FORMAT: return "format-error";
        case BSQZ_ERR_NUMERICAL: return "numerical-error";
        case BSQZ_ERR_IMPOSSIBLE_OBSERVATION: return "impossible-observation";
        case BSQZ_ERR_INTERNAL: return "internal-error";
    }
    return "unknown";
}

void bsqz_set_threads(unsigned n) { bsqz::parallel::set_thread_count(n); }

// ---- models

bsqz_status bsqz_model_load(const char* path, bsqz_model** out) {
    return guarded([&] {
        need(path, "path");
        need(out, "out");
        *out = new bsqz_model{bsqz::load_pomdp(path)};
    });
}

bsqz_status bsqz_model_parse(const char* text, bsqz_model** out) {
    return guarded([&] {
        need(text, "text");
        need(out, "out");
        *out = new bsqz_model{bsqz::parse_pomdp_string(text)};
    });
}

bsqz_status bsqz_model_synth_lowrank(size_t k, size_t n, uint64_t seed, bsqz_model** out) {
    return guarded([&] {
        need(out, "out");
        *out = new bsqz_model{bsqz::synth_lowrank_pomdp(k, n, seed)};
    });
}

bsqz_status bsqz_model_save(const bsqz_model* m, const char* path) {
    return guarded([&] {
        need(m, "model");
        need(path, "path");
        bsqz::save_artifact(path, m->m);
    });
}

void bsqz_model_free(bsqz_model* m) { delete m; }

bsqz_status bsqz_model_dims(const bsqz_model* m, size_t* n_states, size_t* n_actions, size_t* n_obs, double* discount) {
    return guarded([&] {
        need(m, "model");
        if (n_states) *n_states = m->m.n_states;
        if (n_actions) *n_actions = m->m.n_actions;
        if (n_obs) *n_obs = m->m.n_obs;
        if (discount) *discount = m->m.discount;
    });
}

bsqz_status bsqz_model_reward(const bsqz_model* m, double* out) {
    return guarded([&] {
        need(m, "model");
        need(out, "out");
        copy_out(m->m.reward, out);
    });
}

bsqz_status bsqz_model_initial_belief(const bsqz_model* m, double* out) {
    return guarded([&] {
        need(m, "model");
        need(out, "out");
        copy_out(m->m.start(), out);
    });
}

bsqz_status bsqz_belief_update(const bsqz_model* m, const double* b, size_t a, size_t z, double* out) {
    return guarded([&] {
        need(m, "model");
        need(b, "belief");
        need(out, "out");
        if (a >= m->m.n_actions || z >= m->m.n_obs) throw bsqz::InvalidArgument("action or observation out of range");
        const auto n = static_cast<Eigen::Index>(m->m.n_states);
        copy_out(bsqz::belief_update(m->m, Eigen::Map<const bsqz::Vector>(b, n), a, z), out);
    });
}

// ---- beliefs

bsqz_status bsqz_sample_beliefs(const bsqz_model* m, size_t count, uint64_t seed, size_t horizon_cap, bsqz_beliefs** out) {
    return guarded([&] {
        need(m, "model");
        need(out, "out");
        *out = new bsqz_beliefs{bsqz::sample_beliefs(m->m, count, seed, horizon_cap)};
    });
}

bsqz_status bsqz_beliefs_from_matrix(const double* data, size_t n, size_t count, bsqz_beliefs** out) {
    return guarded([&] {
        need(data, "data");
        need(out, "out");
        bsqz::BeliefMatrix b;
        b.columns = Eigen::Map<const bsqz::Matrix>(data, static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(count));
        *out = new bsqz_beliefs{std::move(b)};
    });
}

bsqz_status bsqz_beliefs_head(const bsqz_beliefs* b, size_t count, bsqz_beliefs** out) {
    return guarded([&] {
        need(b, "beliefs");
        need(out, "out");
        bsqz::BeliefMatrix h = b->b;
        const auto keep = std::min<Eigen::Index>(static_cast<Eigen::Index>(count), h.columns.cols());
        h.columns = bsqz::Matrix(h.columns.leftCols(keep));
        *out = new bsqz_beliefs{std::move(h)};
    });
}

bsqz_status bsqz_beliefs_dims(const bsqz_beliefs* b, size_t* n, size_t* count) {
    return guarded([&] {
        need(b, "beliefs");
        if (n) *n = b->b.dim();
        if (count) *count = b->b.size();
    });
}

bsqz_status bsqz_beliefs_copy(const bsqz_beliefs* b, double* out) {
    return guarded([&] {
        need(b, "beliefs");
        need(out, "out");
        copy_out(b->b.columns, out);
    });
}

bsqz_status bsqz_beliefs_save(const bsqz_beliefs* b, const char* path) {
    return guarded([&] {
        need(b, "beliefs");
        need(path, "path");
        bsqz::save_artifact(path, b->b);
    });
}

bsqz_status bsqz_beliefs_load(const char* path, bsqz_beliefs** out) {
    return guarded([&] {
        need(path, "path");
        need(out, "out");
        *out = new bsqz_beliefs{bsqz::load_belief_matrix(path)};
    });
}

void bsqz_beliefs_free(bsqz_beliefs* b) { delete b; }

// ---- compression

void bsqz_vdc_options_default(bsqz_vdc_options* o) {
    if (!o) return;
    const bsqz::VdcConfig d;
    o->mode = BSQZ_VDC_LOSSLESS_RANK;
    o->tau = d.tau;
    o->k = d.k;
}

void bsqz_nmf_options_default(bsqz_nmf_options* o) {
    if (!o) return;
    const bsqz::NmfConfig d;
    o->variant = BSQZ_NMF_PNMF;
    o->k = d.k;
    o->lambda = d.lambda;
    o->lambda_auto = d.lambda_auto ? 1 : 0;
    o->max_iters = d.max_iters;
    o->tol = d.tol;
    o->seed = d.seed;
    o->delta = d.delta;
    o->knn_k = d.knn_k;
    o->locality_weight = d.locality_weight;
    o->accelerate = d.accelerate ? 1 : 0;
    o->restarts = d.restarts;
}

bsqz_status bsqz_compress_vdc(const bsqz_model* m, const bsqz_vdc_options* o, bsqz_basis** out) {
    return guarded([&] {
        need(m, "model");
        need(o, "options");
        need(out, "out");
        bsqz::VdcConfig cfg;
        switch (o->mode) {
            case BSQZ_VDC_LOSSLESS_RANK: cfg.mode = bsqz::VdcMode::LosslessRank; break;
            case BSQZ_VDC_LOSSLESS_RESIDUAL: cfg.mode = bsqz::VdcMode::LosslessResidual; break;
            case BSQZ_VDC_LOSSY: cfg.mode = bsqz::VdcMode::LossyGreedy; break;
            default: throw bsqz::InvalidArgument("unknown VDC mode");
        }
        cfg.tau = o->tau;
        cfg.k = o->k;
        cfg.validate();
        auto kb = bsqz::krylov_basis(m->m, cfg);
        std::vector<double> residuals;
        for (const auto& s : kb.steps) residuals.push_back(s.residual);
        auto b = bsqz::vdc_basis(m->m, cfg, std::move(kb));
        auto* h = wrap_basis(std::move(b));
        h->trace = std::move(residuals);
        *out = h;
    });
}

bsqz_status bsqz_compress_nmf(const bsqz_model* m, const bsqz_beliefs* b, const bsqz_nmf_options* o, bsqz_basis** out) {
    return guarded([&] {
        need(m, "model");
        need(b, "beliefs");
        need(o, "options");
        need(out, "out");
        bsqz::NmfConfig cfg;
        switch (o->variant) {
            case BSQZ_NMF_PNMF: cfg.variant = bsqz::NmfVariant::Pnmf; break;
            case BSQZ_NMF_ONMF: cfg.variant = bsqz::NmfVariant::Onmf; break;
            case BSQZ_NMF_LPNMF: cfg.variant = bsqz::NmfVariant::Lpnmf; break;
            default: throw bsqz::InvalidArgument("unknown NMF variant");
        }
        cfg.k = o->k;
        cfg.lambda = o->lambda;
        cfg.lambda_auto = o->lambda_auto != 0;
        cfg.max_iters = o->max_iters;
        cfg.tol = o->tol;
        cfg.seed = o->seed;
        cfg.delta = o->delta;
        cfg.knn_k = o->knn_k;
        cfg.locality_weight = o->locality_weight;
        cfg.accelerate = o->accelerate != 0;
        cfg.restarts = o->restarts;
        cfg.discount = m->m.discount;
        cfg.validate();
        if (b->b.dim() != m->m.n_states) throw bsqz::InvalidArgument("beliefs do not match the model");
        auto r = bsqz::nmf_compress(b->b, cfg);
        auto* h = wrap_basis(std::move(r.basis));
        h->trace = std::move(r.trace.objective);
        h->stop_reason = bsqz::to_string(r.trace.stop_reason);
        h->lambda = r.lambda;
        *out = h;
    });
}

bsqz_status bsqz_basis_from_matrix(const double* F, size_t n, size_t k, bsqz_basis** out) {
    return guarded([&] {
        need(F, "F");
        need(out, "out");
        if (n == 0 || k == 0 || k > n) throw bsqz::InvalidArgument("basis needs 1 <= k <= n");
        bsqz::Matrix f = Eigen::Map<const bsqz::Matrix>(F, static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
        *out = wrap_basis(bsqz::transpose_basis(std::move(f), bsqz::CompressionMethod::Identity));
    });
}

bsqz_status bsqz_basis_dims(const bsqz_basis* b, size_t* n, size_t* k) {
    return guarded([&] {
        need(b, "basis");
        if (n) *n = b->b.n();
        if (k) *k = b->b.k();
    });
}

bsqz_status bsqz_basis_copy(const bsqz_basis* b, double* F, double* F_dag) {
    return guarded([&] {
        need(b, "basis");
        if (F) copy_out(b->b.F, F);
        if (F_dag) copy_out(b->b.F_dag, F_dag);
    });
}

const char* bsqz_basis_method(const bsqz_basis* b) { return b ? b->method.c_str() : ""; }
const char* bsqz_basis_provenance(const bsqz_basis* b) { return b ? b->b.provenance.c_str() : ""; }
int bsqz_basis_nonnegative(const bsqz_basis* b) { return b && b->b.nonnegative ? 1 : 0; }

bsqz_status bsqz_basis_trace(const bsqz_basis* b, size_t* len, const double** values) {
    return guarded([&] {
        need(b, "basis");
        if (len) *len = b->trace.size();
        if (values) *values = b->trace.data();
    });
}

const char* bsqz_basis_stop_reason(const bsqz_basis* b) { return b ? b->stop_reason.c_str() : ""; }
double bsqz_basis_lambda(const bsqz_basis* b) { return b ? b->lambda : 0.0; }

bsqz_status bsqz_basis_save(const bsqz_basis* b, const char* path) {
    return guarded([&] {
        need(b, "basis");
        need(path, "path");
        bsqz::save_artifact(path, b->b);
    });
}

bsqz_status bsqz_basis_load(const char* path, bsqz_basis** out) {
    return guarded([&] {
        need(path, "path");
        need(out, "out");
        *out = wrap_basis(bsqz::load_basis(path));
    });
}

void bsqz_basis_free(bsqz_basis* b) { delete b; }

bsqz_status bsqz_basis_residual(const bsqz_basis* f, const bsqz_beliefs* b, double* out) {
    return guarded([&] {
        need(f, "basis");
        need(b, "beliefs");
        need(out, "out");
        if (b->b.dim() != f->b.n()) throw bsqz::InvalidArgument("beliefs do not match the basis");
        const auto& B = b->b.columns;
        *out = (B - f->b.F * (f->b.F_dag * B)).norm();
    });
}

bsqz_status bsqz_error_report_compute(const bsqz_model* m, const bsqz_basis* b, bsqz_error_report* out) {
    return guarded([&] {
        need(m, "model");
        need(b, "basis");
        need(out, "out");
        const auto r = bsqz::error_report(m->m, b->b);
        out->eps_r = r.eps_r;
        out->eps_t = r.eps_t;
        out->a_inf = r.a_inf;
        out->i_minus_a_inf = r.i_minus_a_inf;
        out->contraction_margin = r.contraction_margin;
        out->has_value_bound = r.value_bound ? 1 : 0;
        out->value_bound = r.value_bound.value_or(0.0);
        out->v_sup = r.v_sup;
    });
}

bsqz_status bsqz_build_compressed(const bsqz_model* m, const bsqz_basis* b, bsqz_compressed** out) {
    return guarded([&] {
        need(m, "model");
        need(b, "basis");
        need(out, "out");
        *out = new bsqz_compressed{bsqz::build_compressed(m->m, b->b)};
    });
}

bsqz_status bsqz_compressed_save(const bsqz_compressed* c, const char* path) {
    return guarded([&] {
        need(c, "compressed");
        need(path, "path");
        bsqz::save_artifact(path, c->c);
    });
}

bsqz_status bsqz_compressed_load(const char* path, bsqz_compressed** out) {
    return guarded([&] {
        need(path, "path");
        need(out, "out");
        *out = new bsqz_compressed{bsqz::load_compressed(path)};
    });
}

bsqz_status bsqz_compressed_dims(const bsqz_compressed* c, size_t* k) {
    return guarded([&] {
        need(c, "compressed");
        if (k) *k = c->c.k();
    });
}

void bsqz_compressed_free(bsqz_compressed* c) { delete c; }

// ---- solving

void bsqz_solver_options_default(bsqz_solver_options* o) {
    if (!o) return;
    const bsqz::SolverConfig d;
    o->max_stages = d.max_stages;
    o->seed = d.seed;
    o->value_floor_init = d.value_floor_init ? 1 : 0;
    o->prune = d.prune ? 1 : 0;
    o->tol = d.tol;
    o->synchronous = d.synchronous ? 1 : 0;
}

bsqz_status bsqz_solve(const bsqz_model* m, const bsqz_compressed* c, const bsqz_beliefs* points,
                       const bsqz_solver_options* o, bsqz_solution** out) {
    return guarded([&] {
        need(m, "model");
        need(points, "points");
        need(o, "options");
        need(out, "out");
        bsqz::SolverConfig cfg;
        cfg.max_stages = o->max_stages;
        cfg.seed = o->seed;
        cfg.value_floor_init = o->value_floor_init != 0;
        cfg.prune = o->prune != 0;
        cfg.tol = o->tol;
        cfg.synchronous = o->synchronous != 0;
        if (!cfg.value_floor_init) throw bsqz::InvalidArgument("the C interface always starts from the value floor");
        const auto proc = c ? bsqz::make_process(m->m, c->c, points->b.columns) : bsqz::make_process(m->m, points->b.columns);
        auto r = bsqz::perseus_solve(proc, bsqz::ValueFunction{}, cfg);
        auto* s = new bsqz_solution;
        s->value.v = std::move(r.value);
        s->trace = std::move(r.trace);
        s->status = bsqz::to_string(s->trace.status);
        *out = s;
    });
}

void bsqz_solution_free(bsqz_solution* s) { delete s; }

size_t bsqz_solution_stages(const bsqz_solution* s) { return s ? s->trace.stages() : 0; }

bsqz_status bsqz_solution_trace(const bsqz_solution* s, double* expected_value, size_t* n_vectors, double* max_change) {
    return guarded([&] {
        need(s, "solution");
        const auto& t = s->trace;
        for (std::size_t i = 0; i < t.stages(); ++i) {
            if (expected_value) expected_value[i] = t.expected_value[i];
            if (n_vectors) n_vectors[i] = t.n_vectors[i];
            if (max_change) max_change[i] = t.max_change[i];
        }
    });
}

bsqz_verdict bsqz_solution_verdict(const bsqz_solution* s) {
    switch (bsqz::divergence_verdict(s->trace)) {
        case bsqz::Verdict::Converged: return BSQZ_CONVERGED;
        case bsqz::Verdict::Plateaued: return BSQZ_PLATEAUED;
        case bsqz::Verdict::Diverged: return BSQZ_DIVERGED;
    }
    return BSQZ_DIVERGED;
}

const char* bsqz_solution_status(const bsqz_solution* s) { return s ? s->status.c_str() : ""; }
double bsqz_solution_ceiling(const bsqz_solution* s) { return s ? s->trace.ceiling() : 0.0; }
int bsqz_solution_heuristic_floor(const bsqz_solution* s) { return s && s->trace.heuristic_floor ? 1 : 0; }
const bsqz_value* bsqz_solution_value(const bsqz_solution* s) { return s ? &s->value : nullptr; }

bsqz_status bsqz_value_dims(const bsqz_value* v, size_t* count, size_t* dim) {
    return guarded([&] {
        need(v, "value");
        if (count) *count = v->v.size();
        if (dim) *dim = v->v.dim();
    });
}

bsqz_status bsqz_value_copy(const bsqz_value* v, double* alphas, size_t* actions) {
    return guarded([&] {
        need(v, "value");
        const auto d = v->v.dim();
        for (std::size_t i = 0; i < v->v.size(); ++i) {
            if (alphas) std::memcpy(alphas + i * d, v->v.vectors[i].values.data(), d * sizeof(double));
            if (actions) actions[i] = v->v.vectors[i].action;
        }
    });
}

const char* bsqz_value_space(const bsqz_value* v) { return v ? v->v.space.c_str() : ""; }

bsqz_status bsqz_value_at(const bsqz_value* v, const double* x, double* value, size_t* action) {
    return guarded([&] {
        need(v, "value");
        need(x, "point");
        const bsqz::Vector p = Eigen::Map<const bsqz::Vector>(x, static_cast<Eigen::Index>(v->v.dim()));
        const auto i = v->v.best_index(p);
        if (value) *value = p.dot(v->v.vectors[i].values);
        if (action) *action = v->v.vectors[i].action;
    });
}

bsqz_status bsqz_value_save(const bsqz_value* v, const char* path) {
    return guarded([&] {
        need(v, "value");
        need(path, "path");
        bsqz::save_artifact(path, v->v);
    });
}

bsqz_status bsqz_value_load(const char* path, bsqz_value** out) {
    return guarded([&] {
        need(path, "path");
        need(out, "out");
        *out = new bsqz_value{bsqz::load_value_function(path)};
    });
}

void bsqz_value_free(bsqz_value* v) { delete v; }

bsqz_status bsqz_value_lift(const bsqz_basis* f, const bsqz_value* compressed, bsqz_value** out) {
    return guarded([&] {
        need(f, "basis");
        need(compressed, "value");
        need(out, "out");
        *out = new bsqz_value{bsqz::lift(f->b, compressed->v)};
    });
}

// ---- evaluation

void bsqz_eval_protocol_default(bsqz_eval_protocol* p) {
    if (!p) return;
    const bsqz::EvalProtocol d;
    p->n_trajectories = d.n_trajectories;
    p->horizon = d.horizon;
    p->n_repeats = d.n_repeats;
    p->seed = d.seed;
    p->discounted = d.discounted ? 1 : 0;
}

bsqz_status bsqz_evaluate(const bsqz_model* m, const bsqz_value* v, const bsqz_basis* basis,
                          const bsqz_eval_protocol* p, double* mean, double* std, double* per_repeat) {
    return guarded([&] {
        need(m, "model");
        need(v, "value");
        need(p, "protocol");
        bsqz::EvalProtocol proto;
        proto.n_trajectories = p->n_trajectories;
        proto.horizon = p->horizon;
        proto.n_repeats = p->n_repeats;
        proto.seed = p->seed;
        proto.discounted = p->discounted != 0;
        const auto r = basis ? bsqz::simulate_policy(m->m, v->v, basis->b, proto) : bsqz::simulate_policy(m->m, v->v, proto);
        if (mean) *mean = r.mean;
        if (std) *std = r.std;
        if (per_repeat) std::copy(r.per_repeat.begin(), r.per_repeat.end(), per_repeat);
    });
}

// ---- diagnostics

bsqz_status bsqz_lemma4(const bsqz_basis* f, const bsqz_beliefs* b, size_t draws, uint64_t seed, bsqz_check* out) {
    return guarded([&] {
        need(f, "basis");
        need(b, "beliefs");
        need(out, "out");
        *out = to_check(bsqz::lemma4_detector(f->b, b->b.columns, {draws, seed}));
    });
}

bsqz_status bsqz_value_gap(const bsqz_model* m, const bsqz_basis* f, const bsqz_value* v, const bsqz_value* v_c,
                          const bsqz_beliefs* b, bsqz_check* out, double* measured, double* bound) {
    return guarded([&] {
        need(m, "model");
        need(f, "basis");
        need(v, "value");
        need(v_c, "compressed value");
        need(b, "beliefs");
        need(out, "out");
        const auto r = bsqz::value_gap_check(m->m, f->b, v->v, v_c->v, b->b.columns);
        *out = to_check(r);
        const auto err = bsqz::error_report(m->m, f->b);
        if (bound) *bound = err.value_bound.value_or(-1.0);
        if (measured) *measured = err.value_bound ? *err.value_bound - r.margin : -1.0;
    });
}

bsqz_status bsqz_lemma1(const bsqz_model* m, const bsqz_basis* f, const bsqz_value* v_bar, const bsqz_beliefs* b,
                        size_t* passed, size_t* failed, size_t* not_applicable) {
    return guarded([&] {
        need(m, "model");
        need(f, "basis");
        need(v_bar, "value");
        need(b, "beliefs");
        const bsqz::Matrix A = f->b.projection();
        std::size_t p = 0, fl = 0, na = 0;
        for (Eigen::Index j = 0; j < b->b.columns.cols(); ++j) {
            const auto r = bsqz::lemma1_check(m->m, A, v_bar->v, b->b.columns.col(j));
            if (r.status == bsqz::CheckStatus::NotApplicable) ++na;
            else if (r.pass()) ++p;
            else ++fl;
        }
        if (passed) *passed = p;
        if (failed) *failed = fl;
        if (not_applicable) *not_applicable = na;
    });
}

bsqz_status bsqz_value_loss(const bsqz_model* m, const bsqz_basis* f, const bsqz_value* v, const bsqz_value* v_c,
                            const bsqz_beliefs* b, double* lhs, double* rhs, int* premise, double* max_residual,
                            size_t* premise_failures) {
    return guarded([&] {
        need(m, "model");
        need(f, "basis");
        need(v, "value");
        need(v_c, "compressed value");
        need(b, "beliefs");
        const auto t = bsqz::value_loss_decomposition(m->m, f->b, v->v, v_c->v, b->b.columns);
        for (std::size_t i = 0; i < t.rows.size(); ++i) {
            if (lhs) lhs[i] = t.rows[i].lhs;
            if (rhs) rhs[i] = t.rows[i].rhs;
            if (premise) premise[i] = t.rows[i].premise ? 1 : 0;
        }
        if (max_residual) *max_residual = t.max_residual;
        if (premise_failures) *premise_failures = t.premise_failures;
    });
}

}  // extern "C"
