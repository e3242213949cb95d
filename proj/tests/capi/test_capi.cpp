#include <bsqz/bsqz.h>

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

extern "C" int bsqz_header_check(void);

namespace fs = std::filesystem;

namespace {

const char* const kTwoState = "discount: 0.9\nvalues: reward\nstates: 2\nactions: 2\nobservations: 2\n"
                              "T: 0 identity\nT: 1 uniform\nO: * \n0.85 0.15\n0.15 0.85\n"
                              "R: 0 : * : * : * -1\nR: 1 : 0 : * : * 10\nR: 1 : 1 : * : * -100\n";

std::string tmp(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "bsqz-test-capi";
    fs::create_directories(dir);
    return (dir / name).string();
}

template <class T, void (*Free)(T*)>
struct Handle {
    T* p = nullptr;
    ~Handle() { Free(p); }
    T** out() { return &p; }
    operator T*() const { return p; }
};

using Model = Handle<bsqz_model, bsqz_model_free>;
using Beliefs = Handle<bsqz_beliefs, bsqz_beliefs_free>;
using Basis = Handle<bsqz_basis, bsqz_basis_free>;
using Compressed = Handle<bsqz_compressed, bsqz_compressed_free>;
using Solution = Handle<bsqz_solution, bsqz_solution_free>;
using Value = Handle<bsqz_value, bsqz_value_free>;

}  // namespace

TEST_CASE("header compiles as C and the library reports a version") {
    CHECK(bsqz_header_check() >= 1);
    CHECK(std::string(bsqz_version()) == "1.0.0");
    CHECK(std::string(bsqz_status_name(BSQZ_ERR_PARSE)) != std::string(bsqz_status_name(BSQZ_OK)));
}

TEST_CASE("parsed model accessors and belief update") {
    Model m;
    REQUIRE(bsqz_model_parse(kTwoState, m.out()) == BSQZ_OK);
    size_t n = 0, a = 0, z = 0;
    double discount = 0;
    REQUIRE(bsqz_model_dims(m, &n, &a, &z, &discount) == BSQZ_OK);
    CHECK(n == 2);
    CHECK(a == 2);
    CHECK(z == 2);
    CHECK(discount == 0.9);
    std::vector<double> r(4);
    REQUIRE(bsqz_model_reward(m, r.data()) == BSQZ_OK);
    CHECK(r[0] == -1.0);
    CHECK(r[2] == 10.0);
    CHECK(r[3] == -100.0);
    const double b[2] = {0.5, 0.5};
    double out[2];
    REQUIRE(bsqz_belief_update(m, b, 0, 0, out) == BSQZ_OK);
    CHECK(out[0] == doctest::Approx(0.85).epsilon(1e-15));
    CHECK(bsqz_belief_update(m, b, 5, 0, out) == BSQZ_ERR_INVALID_ARGUMENT);
}

TEST_CASE("errors carry a status and a message") {
    Model m;
    CHECK(bsqz_model_parse("discount: 1.0\nstates: 2\n", m.out()) == BSQZ_ERR_PARSE);
    CHECK(std::string(bsqz_last_error()).find("line 1") != std::string::npos);
    CHECK(m.p == nullptr);
    CHECK(bsqz_model_load("/nonexistent/model.POMDP", m.out()) == BSQZ_ERR_IO);
    CHECK(bsqz_model_synth_lowrank(5, 3, 0, m.out()) == BSQZ_ERR_INVALID_ARGUMENT);
    CHECK(bsqz_model_dims(nullptr, nullptr, nullptr, nullptr, nullptr) == BSQZ_ERR_INVALID_ARGUMENT);
    CHECK(std::strlen(bsqz_last_error()) > 0);
    Basis f;
    const double F[4] = {1, 0, 0, 1};
    CHECK(bsqz_basis_from_matrix(F, 2, 0, f.out()) == BSQZ_ERR_INVALID_ARGUMENT);

    std::vector<char> junk(64, 'x');
    const auto p = tmp("junk.bin");
    FILE* fp = std::fopen(p.c_str(), "wb");
    std::fwrite(junk.data(), 1, junk.size(), fp);
    std::fclose(fp);
    CHECK(bsqz_basis_load(p.c_str(), f.out()) == BSQZ_ERR_FORMAT);
}

TEST_CASE("pipeline through the C interface") {
    Model m;
    REQUIRE(bsqz_model_synth_lowrank(3, 12, 2, m.out()) == BSQZ_OK);
    Beliefs b;
    REQUIRE(bsqz_sample_beliefs(m, 200, 5, 250, b.out()) == BSQZ_OK);
    size_t n = 0, count = 0;
    REQUIRE(bsqz_beliefs_dims(b, &n, &count) == BSQZ_OK);
    CHECK(n == 12);
    CHECK(count == 200);

    bsqz_nmf_options o;
    bsqz_nmf_options_default(&o);
    o.k = 3;
    o.restarts = 3;
    Basis f;
    REQUIRE(bsqz_compress_nmf(m, b, &o, f.out()) == BSQZ_OK);
    CHECK(std::string(bsqz_basis_method(f)) == "pnmf");
    CHECK(bsqz_basis_nonnegative(f) == 1);
    double residual = 1;
    REQUIRE(bsqz_basis_residual(f, b, &residual) == BSQZ_OK);
    CHECK(residual <= 1e-4);
    size_t len = 0;
    const double* trace = nullptr;
    REQUIRE(bsqz_basis_trace(f, &len, &trace) == BSQZ_OK);
    CHECK(len > 1);
    CHECK(trace[len - 1] <= trace[0]);

    bsqz_error_report rep;
    REQUIRE(bsqz_error_report_compute(m, f, &rep) == BSQZ_OK);
    CHECK(rep.eps_t <= 1e-4);

    Compressed c;
    REQUIRE(bsqz_build_compressed(m, f, c.out()) == BSQZ_OK);
    size_t k = 0;
    REQUIRE(bsqz_compressed_dims(c, &k) == BSQZ_OK);
    CHECK(k == 3);

    bsqz_solver_options so;
    bsqz_solver_options_default(&so);
    CHECK(so.max_stages == 500);
    CHECK(so.tol == 1e-4);
    Solution orig, comp;
    REQUIRE(bsqz_solve(m, nullptr, b, &so, orig.out()) == BSQZ_OK);
    REQUIRE(bsqz_solve(m, c, b, &so, comp.out()) == BSQZ_OK);
    CHECK(bsqz_solution_verdict(orig) == BSQZ_CONVERGED);
    CHECK(std::string(bsqz_solution_status(orig)) == "converged");
    CHECK(bsqz_solution_heuristic_floor(comp) == 1);
    const size_t stages = bsqz_solution_stages(orig);
    std::vector<double> ev(stages), mc(stages);
    std::vector<size_t> nv(stages);
    REQUIRE(bsqz_solution_trace(orig, ev.data(), nv.data(), mc.data()) == BSQZ_OK);
    CHECK(mc.back() < 1e-4);
    CHECK(std::abs(ev.back()) <= bsqz_solution_ceiling(orig));

    const bsqz_value* v = bsqz_solution_value(orig);
    const bsqz_value* vc = bsqz_solution_value(comp);
    size_t nvec = 0, dim = 0;
    REQUIRE(bsqz_value_dims(v, &nvec, &dim) == BSQZ_OK);
    CHECK(dim == 12);
    std::vector<double> alphas(nvec * dim);
    std::vector<size_t> actions(nvec);
    REQUIRE(bsqz_value_copy(v, alphas.data(), actions.data()) == BSQZ_OK);
    std::vector<double> b0(12);
    REQUIRE(bsqz_model_initial_belief(m, b0.data()) == BSQZ_OK);
    double best = -1e300;
    for (size_t i = 0; i < nvec; ++i) {
        double s = 0;
        for (size_t j = 0; j < dim; ++j) s += alphas[i * dim + j] * b0[j];
        best = std::max(best, s);
    }
    double at = 0;
    size_t act = 0;
    REQUIRE(bsqz_value_at(v, b0.data(), &at, &act) == BSQZ_OK);
    CHECK(at == doctest::Approx(best).epsilon(1e-12));
    CHECK(std::string(bsqz_value_space(vc)).rfind("compressed", 0) == 0);

    bsqz_eval_protocol p;
    bsqz_eval_protocol_default(&p);
    CHECK(p.n_trajectories == 1000);
    CHECK(p.horizon == 251);
    CHECK(p.n_repeats == 5);
    p.n_trajectories = 100;
    p.horizon = 60;
    double mean = 0, sd = 0, per[5];
    REQUIRE(bsqz_evaluate(m, v, nullptr, &p, &mean, &sd, per) == BSQZ_OK);
    double mean_c = 0, sd_c = 0;
    REQUIRE(bsqz_evaluate(m, vc, f, &p, &mean_c, &sd_c, nullptr) == BSQZ_OK);
    CHECK(std::isfinite(mean_c));
    CHECK(mean == doctest::Approx((per[0] + per[1] + per[2] + per[3] + per[4]) / 5.0));
    CHECK(bsqz_evaluate(m, vc, nullptr, &p, &mean, &sd, nullptr) == BSQZ_ERR_INVALID_ARGUMENT);

    bsqz_check chk;
    REQUIRE(bsqz_lemma4(f, b, 1000, 1, &chk) == BSQZ_OK);
    CHECK(chk.status == BSQZ_CHECK_PASS);
    double measured = -1, bound = -1;
    REQUIRE(bsqz_value_gap(m, f, v, vc, b, &chk, &measured, &bound) == BSQZ_OK);
    CHECK(measured >= 0);
    Value lifted;
    REQUIRE(bsqz_value_lift(f, vc, lifted.out()) == BSQZ_OK);
    size_t passed = 0, failed = 0, na = 0;
    REQUIRE(bsqz_lemma1(m, f, lifted, b, &passed, &failed, &na) == BSQZ_OK);
    CHECK(passed + failed + na == 200);
    CHECK(failed == 0);
    std::vector<double> lhs(200), rhs(200);
    std::vector<int> premise(200);
    double max_res = -1;
    size_t pf = 0;
    REQUIRE(bsqz_value_loss(m, f, v, vc, b, lhs.data(), rhs.data(), premise.data(), &max_res, &pf) == BSQZ_OK);
    CHECK(max_res >= 0);
    CHECK(bsqz_value_lift(f, v, lifted.out()) == BSQZ_ERR_INVALID_ARGUMENT);
}

TEST_CASE("artifacts round trip through files") {
    Model m;
    REQUIRE(bsqz_model_synth_lowrank(2, 6, 1, m.out()) == BSQZ_OK);
    Beliefs b;
    REQUIRE(bsqz_sample_beliefs(m, 30, 2, 250, b.out()) == BSQZ_OK);
    REQUIRE(bsqz_beliefs_save(b, tmp("b.bin").c_str()) == BSQZ_OK);
    Beliefs b2;
    REQUIRE(bsqz_beliefs_load(tmp("b.bin").c_str(), b2.out()) == BSQZ_OK);
    std::vector<double> x(6 * 30), y(6 * 30);
    bsqz_beliefs_copy(b, x.data());
    bsqz_beliefs_copy(b2, y.data());
    CHECK(x == y);
    Beliefs head;
    REQUIRE(bsqz_beliefs_head(b, 10, head.out()) == BSQZ_OK);
    size_t n = 0, cnt = 0;
    bsqz_beliefs_dims(head, &n, &cnt);
    CHECK(cnt == 10);

    bsqz_vdc_options vo;
    bsqz_vdc_options_default(&vo);
    Basis f;
    REQUIRE(bsqz_compress_vdc(m, &vo, f.out()) == BSQZ_OK);
    CHECK(std::string(bsqz_basis_method(f)) == "vdc");
    REQUIRE(bsqz_basis_save(f, tmp("f.bin").c_str()) == BSQZ_OK);
    Basis f2;
    REQUIRE(bsqz_basis_load(tmp("f.bin").c_str(), f2.out()) == BSQZ_OK);
    size_t fn = 0, fk = 0;
    bsqz_basis_dims(f2, &fn, &fk);
    std::vector<double> F1(fn * fk), D1(fn * fk), F2(fn * fk), D2(fn * fk);
    bsqz_basis_copy(f, F1.data(), D1.data());
    bsqz_basis_copy(f2, F2.data(), D2.data());
    CHECK(F1 == F2);
    CHECK(D1 == D2);
    CHECK(std::string(bsqz_basis_provenance(f2)) == bsqz_basis_provenance(f));

    Compressed c;
    REQUIRE(bsqz_build_compressed(m, f, c.out()) == BSQZ_OK);
    REQUIRE(bsqz_compressed_save(c, tmp("c.bin").c_str()) == BSQZ_OK);
    Compressed c2;
    REQUIRE(bsqz_compressed_load(tmp("c.bin").c_str(), c2.out()) == BSQZ_OK);

    bsqz_solver_options so;
    bsqz_solver_options_default(&so);
    Solution s;
    REQUIRE(bsqz_solve(m, nullptr, b, &so, s.out()) == BSQZ_OK);
    REQUIRE(bsqz_value_save(bsqz_solution_value(s), tmp("v.bin").c_str()) == BSQZ_OK);
    Value v;
    REQUIRE(bsqz_value_load(tmp("v.bin").c_str(), v.out()) == BSQZ_OK);
    size_t c1 = 0, d1 = 0, c2n = 0, d2 = 0;
    bsqz_value_dims(bsqz_solution_value(s), &c1, &d1);
    bsqz_value_dims(v, &c2n, &d2);
    CHECK(c1 == c2n);
    CHECK(d1 == d2);

    REQUIRE(bsqz_model_save(m, tmp("m.bin").c_str()) == BSQZ_OK);
    Model m2;
    REQUIRE(bsqz_model_load(tmp("m.bin").c_str(), m2.out()) == BSQZ_OK);
    size_t ns = 0, na = 0;
    bsqz_model_dims(m, &ns, &na, nullptr, nullptr);
    std::vector<double> r1(ns * na), r2(ns * na);
    bsqz_model_reward(m, r1.data());
    bsqz_model_reward(m2, r2.data());
    CHECK(r1 == r2);
}

TEST_CASE("thread count does not change results") {
    Model m;
    REQUIRE(bsqz_model_synth_lowrank(3, 9, 4, m.out()) == BSQZ_OK);
    Beliefs a, b;
    bsqz_set_threads(1);
    REQUIRE(bsqz_sample_beliefs(m, 300, 9, 250, a.out()) == BSQZ_OK);
    bsqz_set_threads(6);
    REQUIRE(bsqz_sample_beliefs(m, 300, 9, 250, b.out()) == BSQZ_OK);
    bsqz_set_threads(0);
    std::vector<double> x(9 * 300), y(9 * 300);
    bsqz_beliefs_copy(a, x.data());
    bsqz_beliefs_copy(b, y.data());
    CHECK(x == y);
}
