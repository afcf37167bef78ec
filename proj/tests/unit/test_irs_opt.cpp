#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <vector>

#include "ssirs/irs_opt.hpp"

using namespace ssirs;

namespace {

ScenarioConfig desk_cfg(int M, int N, int K, int b = 1) {
    ScenarioConfig cfg;
    cfg.M = M;
    cfg.N = N;
    cfg.K = K;
    cfg.b = b;
    return cfg;
}

struct Instance {
    ScenarioConfig cfg;
    ChannelRealization ch;
    PrecoderSet pre;
};

// MRT on the direct links at full power, split evenly across users.
PrecoderSet mrt_precoders(const ChannelRealization& ch, const ScenarioConfig& cfg) {
    const int M = static_cast<int>(ch.h_d.rows());
    const int K = static_cast<int>(ch.h_d.cols());
    Eigen::MatrixXcd W(M, K);
    for (int k = 0; k < K; ++k)
        W.col(k) = std::sqrt(cfg.p_max_w() / K) * ch.h_d.col(k).normalized();
    return PrecoderSet::from_columns(W);
}

Instance make_instance(int M, int N, int K, int b, std::uint64_t seed,
                       double p_irs_dbm = 1.0) {
    Instance inst{desk_cfg(M, N, K, b), {}, {}};
    inst.cfg.p_irs_dbm = p_irs_dbm;
    Rng rng(seed);
    inst.ch = sample_channels(inst.cfg, rng);
    inst.pre = mrt_precoders(inst.ch, inst.cfg);
    return inst;
}

double coupling_residual(const Sp2State& st, const Sp2ModeSet& modes) {
    double worst = 0.0;
    for (int n = 0; n < st.v.size(); ++n) {
        cd acc(0.0, 0.0);
        for (int i = 0; i < modes.rows(); ++i)
            acc += st.S(i, n) * std::conj(modes.values[i]);
        worst = std::max(worst, std::abs(acc - st.v(n)));
    }
    return worst;
}

}  // namespace

TEST_CASE("interference tangent slope matches finite differences") {
    // d/di [-log2(s2 + i)] against a central difference of the function.
    for (double s2 : {1.99626e-8, 1.0}) {
        for (double iota : {0.0, 1e-6, 1e-3}) {
            const double h = 1e-5 * (s2 + iota);
            auto d2 = [s2](double i) { return -std::log2(s2 + i); };
            const double fd = (d2(iota + h) - d2(iota - h)) / (2.0 * h);
            REQUIRE(grad_D2(iota, s2) == Catch::Approx(fd).epsilon(1e-6));
        }
    }
}

TEST_CASE("signal cap is anchored at its expansion point") {
    const Instance inst = make_instance(2, 3, 2, 2, 11);
    const Sp2Coefficients co = sp2_coefficients(inst.ch, inst.pre, inst.cfg);
    const Sp2ModeSet modes = Sp2ModeSet::full(inst.cfg.b);

    Eigen::MatrixXd S0 = harvest_seed(modes, 3);
    S0.col(1).setZero();
    S0(2, 1) = 1.0;  // one reflecting element so v != 0
    Sp2State st = sp2_initial_state(co, modes, inst.cfg, S0, true);

    const Sp2Problem sp =
        build_schedule_problem(st, co, modes, inst.cfg, 0.0, true);
    Eigen::VectorXd x = sp2_pack(st, sp.layout);

    for (int k = 0; k < 2; ++k) {
        // The linearized cap at (v_t, xi) must equal xi - |c + v_t^H u|^2
        // exactly (scaled by the noise power).
        const Eigen::MatrixXcd Lk = cascade_matrix(inst.ch, k);
        const cd c = inst.ch.h_d.col(k).dot(inst.pre.w(k));
        const Eigen::VectorXcd u = Lk * inst.pre.w(k);
        const double sig_pow = std::norm(c + st.v.dot(u));

        const double xi_probe = 0.37 * sig_pow;
        x(sp.layout.xi_index[k]) = xi_probe / co.sigma2(k);

        const convex::Constraint* cap = nullptr;
        for (const auto& con : sp.problem.ineq)
            if (con.name == "signal-cap-" + std::to_string(k)) cap = &con;
        REQUIRE(cap != nullptr);
        Eigen::VectorXd xs(cap->support.size());
        for (size_t a = 0; a < cap->support.size(); ++a) xs(a) = x(cap->support[a]);

        const double expect = (xi_probe - sig_pow) / co.sigma2(k);
        REQUIRE(cap->value(xs) == Catch::Approx(expect).margin(1e-12 * std::abs(expect)));
    }
}

TEST_CASE("zero transmit power leaves only the noise floor and the penalty") {
    const Instance base = make_instance(2, 3, 2, 1, 7);
    const PrecoderSet zero =
        PrecoderSet::from_columns(Eigen::MatrixXcd::Zero(2, 2));
    const Sp2Coefficients co = sp2_coefficients(base.ch, zero, base.cfg);
    REQUIRE(co.num_active == 0);

    const Sp2ModeSet modes = Sp2ModeSet::full(base.cfg.b);
    const Sp2State st =
        sp2_initial_state(co, modes, base.cfg, harvest_seed(modes, 3), false);
    const double lambda = 0.7;
    const Sp2Problem sp =
        build_schedule_problem(st, co, modes, base.cfg, lambda, false);

    // No slack coordinates exist without transmit signal.
    for (int k = 0; k < 2; ++k) {
        REQUIRE(sp.layout.xi_index[k] == -1);
        REQUIRE(sp.layout.iota_index[k] == -1);
    }

    double expect = 0.0;
    for (int k = 0; k < 2; ++k) expect -= std::log2(base.ch.sigma_k2(k));
    double pen = 0.0;  // at the expansion point the linearization is exact
    for (int n = 0; n < st.S.cols(); ++n)
        for (int i = 0; i < st.S.rows(); ++i)
            pen += lambda * (st.S(i, n) - st.S(i, n) * st.S(i, n));
    REQUIRE(pen > 0.0);  // softened weights are fractional
    const double got = sp.problem.obj.value(sp2_pack(st, sp.layout));
    REQUIRE(got == Catch::Approx(expect + pen).epsilon(1e-12));

    // The same penalty vanishes on a binary matrix.
    double pen_bin = 0.0;
    const Eigen::MatrixXd Sb = harvest_seed(modes, 3);
    for (int n = 0; n < Sb.cols(); ++n)
        for (int i = 0; i < Sb.rows(); ++i)
            pen_bin += Sb(i, n) - Sb(i, n) * Sb(i, n);
    REQUIRE(pen_bin == 0.0);
}

TEST_CASE("covariances that are not rank-one are rejected") {
    const Instance inst = make_instance(2, 3, 2, 1, 13);
    const Sp2Coefficients co = sp2_coefficients(inst.ch, inst.pre, inst.cfg);
    const Sp2ModeSet modes = Sp2ModeSet::full(inst.cfg.b);
    const Sp2State st =
        sp2_initial_state(co, modes, inst.cfg, harvest_seed(modes, 3), true);

    std::vector<Eigen::MatrixXcd> lifted(2);
    lifted[0] = inst.pre.w(0) * inst.pre.w(0).adjoint();
    lifted[1] = Eigen::MatrixXcd::Identity(2, 2);  // rank two
    REQUIRE_THROWS_AS(build_sp2(st, inst.ch, lifted, inst.cfg, 0.1),
                      std::invalid_argument);

    lifted[1] = inst.pre.w(1) * inst.pre.w(1).adjoint();
    REQUIRE_NOTHROW(build_sp2(st, inst.ch, lifted, inst.cfg, 0.1));
}

TEST_CASE("relaxed iterates keep the coupling and a monotone objective") {
    const Instance inst = make_instance(2, 4, 2, 1, 21, /*p_irs_dbm=*/-80.0);

    Alg2Params params;
    params.penalty_enabled = false;
    double worst_coupling = 0.0;
    int hook_calls = 0;
    const Sp2ModeSet modes = Sp2ModeSet::full(inst.cfg.b);
    params.iterate_hook = [&](const Sp2State& st) {
        worst_coupling = std::max(worst_coupling, coupling_residual(st, modes));
        REQUIRE(st.xi.minCoeff() >= 0.0);
        REQUIRE(st.iota.minCoeff() >= 0.0);
        ++hook_calls;
    };

    const Alg2Result out = run_algorithm2(
        inst.ch, inst.pre, harvest_seed(modes, 4), inst.cfg, params);
    INFO(out.message);
    REQUIRE(out.message.empty());
    REQUIRE(hook_calls >= 2);
    REQUIRE(worst_coupling <= 1e-9);
    const auto& trace = out.state.objective_trace;
    REQUIRE(trace.size() >= 2);
    for (size_t i = 1; i < trace.size(); ++i)
        REQUIRE(trace[i] <= trace[i - 1] + 1e-6);
}

TEST_CASE("interference floor is tight at the relaxed optimum") {
    const Instance inst = make_instance(2, 4, 2, 1, 33, /*p_irs_dbm=*/-80.0);
    Alg2Params params;
    params.penalty_enabled = false;
    params.solver.tol = 1e-9;
    const Sp2ModeSet modes = Sp2ModeSet::full(inst.cfg.b);
    const Alg2Result out = run_algorithm2(
        inst.ch, inst.pre, harvest_seed(modes, 4), inst.cfg, params);
    REQUIRE(out.message.empty());

    const Sp2State& st = out.state;
    for (int k = 0; k < 2; ++k) {
        const Eigen::MatrixXcd Lk = cascade_matrix(inst.ch, k);
        const cd c_self = inst.ch.h_d.col(k).dot(inst.pre.w(k));
        const Eigen::VectorXcd u_self = Lk * inst.pre.w(k);
        const double sig = std::norm(c_self + st.v.dot(u_self));
        // The signal slack never exceeds the true received signal power.
        REQUIRE(st.xi(k) <= sig * (1.0 + 1e-9));

        const int j = 1 - k;
        const cd c_x = inst.ch.h_d.col(k).dot(inst.pre.w(j));
        const double interf = std::norm(c_x + st.v.dot(Lk * inst.pre.w(j)));
        REQUIRE(st.iota(k) >= interf * (1.0 - 1e-9));
        REQUIRE(st.iota(k) == Catch::Approx(interf).epsilon(1e-6));
    }
}

TEST_CASE("penalty escalation yields near-binary weights and a feasible schedule") {
    const Instance inst = make_instance(2, 4, 2, 1, 5, /*p_irs_dbm=*/-80.0);
    const Sp2ModeSet modes = Sp2ModeSet::full(inst.cfg.b);
    const Alg2Result out = run_algorithm2(
        inst.ch, inst.pre, harvest_seed(modes, 4), inst.cfg, {});
    REQUIRE(out.message.empty());
    REQUIRE(out.state.penalty_weight > 0.0);

    double dist = 0.0;
    for (int n = 0; n < out.state.S.cols(); ++n)
        for (int i = 0; i < out.state.S.rows(); ++i)
            dist = std::max(dist,
                            std::abs(out.state.S(i, n) - std::round(out.state.S(i, n))));
    if (out.converged) REQUIRE(dist < 1e-2);

    const FeasibilityReport rep =
        check_feasibility(inst.ch, out.schedule, inst.pre, inst.cfg);
    REQUIRE(rep.binary_ok);
    REQUIRE(rep.phase_in_set);
    REQUIRE(rep.c3_slack >= -1e-9);
    REQUIRE(out.rate == Catch::Approx(sum_rate(inst.ch, out.schedule, inst.pre)));
}

TEST_CASE("small instances match the exhaustive schedule oracle") {
    int hits = 0;
    const int trials = 50;
    for (int t = 0; t < trials; ++t) {
        const Instance inst =
            make_instance(2, 2, 1, 1, 100 + t, /*p_irs_dbm=*/-80.0);

        // Exhaustive oracle over all 3^2 binary schedules.
        double best = 0.0;
        for (int i0 = 0; i0 < 3; ++i0)
            for (int i1 = 0; i1 < 3; ++i1) {
                const IrsSchedule cand = IrsSchedule::binary(1, {i0, i1});
                if (irs_consumption(cand, inst.cfg) >
                    harvested_power(inst.ch, cand, inst.pre, inst.cfg) + 1e-15)
                    continue;
                best = std::max(best, sum_rate(inst.ch, cand, inst.pre));
            }

        const Sp2ModeSet modes = Sp2ModeSet::full(1);
        const Alg2Result out = run_algorithm2(
            inst.ch, inst.pre, harvest_seed(modes, 2), inst.cfg, {});
        REQUIRE(out.rate <= best + 1e-9);  // the oracle covers every option
        if (out.rate >= best - 1e-3) ++hits;
    }
    REQUIRE(hits >= 45);
}

TEST_CASE("rounding is idempotent and breaks ties toward harvesting") {
    const Instance inst = make_instance(2, 4, 2, 1, 17, /*p_irs_dbm=*/-80.0);

    // Already-binary weights come back unchanged.
    const std::vector<int> idx = {1, 2, 0, 1};
    const IrsSchedule bin = IrsSchedule::binary(1, idx);
    const IrsSchedule re =
        round_schedule(bin.S(), inst.ch, inst.pre, inst.cfg);
    for (int n = 0; n < 4; ++n) REQUIRE(re.mode_index(n) == idx[n]);

    // Plurality column keeps the harvesting row; exact ties also prefer it,
    // and ties among phases pick the lowest index.
    Eigen::MatrixXd S(3, 4);
    S.col(0) << 0.4, 0.35, 0.25;
    S.col(1) << 0.4, 0.4, 0.2;
    S.col(2) << 0.2, 0.4, 0.4;
    S.col(3) << 1.0, 0.0, 0.0;
    const IrsSchedule tied = round_schedule(S, inst.ch, inst.pre, inst.cfg);
    REQUIRE(tied.mode_index(0) == 0);
    REQUIRE(tied.mode_index(1) == 0);
    REQUIRE(tied.mode_index(2) == 1);
    REQUIRE(tied.mode_index(3) == 0);
}

TEST_CASE("rounding repair restores the power balance") {
    // A watt-level per-element draw dwarfs any harvest at desk scale, so a
    // schedule with every element reflecting must be repaired all the way
    // back to harvesting.
    const Instance inst = make_instance(2, 4, 2, 1, 19, /*p_irs_dbm=*/30.0);
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(3, 4);
    S.row(1).setOnes();

    int flips = 0;
    const IrsSchedule fixed =
        round_schedule_generic(S, inst.ch, inst.pre, inst.cfg,
                               Sp2ModeSet::full(1), true, &flips);
    REQUIRE(flips == 4);
    for (int n = 0; n < 4; ++n) REQUIRE(fixed.mode_index(n) == 0);
    const FeasibilityReport rep =
        check_feasibility(inst.ch, fixed, inst.pre, inst.cfg);
    REQUIRE(rep.feasible);
}

TEST_CASE("zero transmit power returns the idle schedule") {
    const Instance base = make_instance(2, 4, 2, 1, 23);
    const PrecoderSet zero =
        PrecoderSet::from_columns(Eigen::MatrixXcd::Zero(2, 2));
    const Sp2ModeSet modes = Sp2ModeSet::full(base.cfg.b);
    const Alg2Result out = run_algorithm2(
        base.ch, zero, harvest_seed(modes, 4), base.cfg, {});
    REQUIRE(out.converged);
    REQUIRE(out.rate == 0.0);
    REQUIRE_FALSE(out.message.empty());
    for (int n = 0; n < 4; ++n) REQUIRE(out.schedule.mode_index(n) == 0);
    REQUIRE(out.state.S.row(0).minCoeff() == 1.0);
}

TEST_CASE("state packing round-trips through the subproblem coordinates") {
    const Instance inst = make_instance(2, 3, 2, 2, 29);
    const Sp2Coefficients co = sp2_coefficients(inst.ch, inst.pre, inst.cfg);
    const Sp2ModeSet modes = Sp2ModeSet::full(inst.cfg.b);
    const Sp2State st =
        sp2_initial_state(co, modes, inst.cfg, harvest_seed(modes, 3), true);
    const Sp2Problem sp =
        build_schedule_problem(st, co, modes, inst.cfg, 0.3, true);

    const Eigen::VectorXd x = sp2_pack(st, sp.layout);
    REQUIRE(sp.layout.tau_index >= 0);
    REQUIRE(x(sp.layout.tau_index) ==
            Catch::Approx(sp.layout.tau_coeffs.dot(st.S.row(0).transpose())));

    const Sp2State rt = sp2_unpack(x, sp.layout);
    REQUIRE((rt.S - st.S).cwiseAbs().maxCoeff() == 0.0);
    REQUIRE((rt.v - st.v).cwiseAbs().maxCoeff() == 0.0);
    REQUIRE((rt.xi - st.xi).cwiseAbs().maxCoeff() <= 1e-18);
    REQUIRE((rt.iota - st.iota).cwiseAbs().maxCoeff() <= 1e-18);
}

TEST_CASE("continuous reflection relaxation stays in the unit discs") {
    const Instance inst = make_instance(2, 4, 2, 1, 31);
    const ReflectRelaxResult out =
        run_reflect_relaxation(inst.ch, inst.pre, inst.cfg);
    REQUIRE(out.message.empty());
    REQUIRE(out.converged);
    for (int n = 0; n < 4; ++n) REQUIRE(std::abs(out.v(n)) <= 1.0 + 1e-9);
    const auto& trace = out.objective_trace;
    REQUIRE(trace.size() >= 2);
    for (size_t i = 1; i < trace.size(); ++i)
        REQUIRE(trace[i] <= trace[i - 1] + 1e-6);
    REQUIRE(out.relaxed_rate > 0.0);
}
