#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"

using namespace tdvsa;

namespace {

void check_invariants(const PVCurve& c) {
    REQUIRE(c.nose_found());
    REQUIRE(!c.samples.empty());
    CHECK(c.samples.front().lambda == 0.0);
    double top = 0.0;
    for (std::size_t k = 1; k < c.samples.size(); ++k) {
        if (k <= c.nose_index)
            CHECK(c.samples[k].lambda > c.samples[k - 1].lambda);
        else
            CHECK(c.samples[k].lambda <= c.samples[k - 1].lambda);
    }
    for (const auto& s : c.samples) top = std::max(top, s.lambda);
    CHECK(c.lambda_max == top);
    CHECK(c.samples[c.nose_index].lambda == c.lambda_max);
}

}  // namespace

TEST_CASE("2-bus nose matches maximum power transfer") {
    const auto net = oracle::two_bus(0.1, 1.0);
    const auto c = trace_pv(net, LoadDirection::proportional(net), 2);
    check_invariants(c);
    CHECK(c.lambda_max == doctest::Approx(4.0).epsilon(2.5e-4));
    CHECK(std::abs(c.samples[c.nose_index].v_monitored - 1.0 / std::sqrt(2.0)) < 1e-3);
    CHECK(c.monitored_bus == 2);
    CHECK(c.samples.size() == c.nose_index + 1 + 5);
}

TEST_CASE("2-bus family over substation voltage") {
    for (double x : {0.05, 0.1, 0.2})
        for (double vb : {0.7, 0.8, 0.9, 1.0, 1.1}) {
            const auto net = oracle::two_bus(x, 1.0);
            const double expect = oracle::two_bus_lambda_max(vb, x);
            if (expect <= 0.0) continue;
            const auto c = trace_pv(net, LoadDirection::proportional(net), 2, {}, vb);
            CHECK(std::abs(c.lambda_max - expect) < 1e-3);
            CHECK(std::abs(c.samples[c.nose_index].v_monitored - vb / std::sqrt(2.0)) < 1e-3);
        }
}

TEST_CASE("9-bus T-VSA at bus 5") {
    const auto net = load_network(oracle::data("cases/ieee9.json"));
    // the scenarios grow every load and generator by 1.5 x base per unit lambda
    const auto c = trace_pv(net, LoadDirection::proportional(net, 1.5), 5);
    check_invariants(c);
    CHECK(c.lambda_max == doctest::Approx(0.99).epsilon(0.02));
    // with dS = S0 the same nose sits 1.5 times further out
    const auto c1 = trace_pv(net, LoadDirection::proportional(net, 1.0), 5);
    CHECK(c1.lambda_max == doctest::Approx(1.5 * c.lambda_max).epsilon(1e-6));
    // monotone voltage on the upper branch
    const auto up = c.upper_branch();
    for (std::size_t k = 1; k < up.size(); ++k) CHECK(up[k].v_monitored <= up[k - 1].v_monitored);
}

TEST_CASE("tangent predictor") {
    const double x = 0.1;
    const auto net = oracle::two_bus(x, 1.0);
    const PowerFlowProblem prob(net, LoadDirection::proportional(net));
    const auto base = solve(prob, 0.0);
    const ContinuationPoint p0{prob.state_from(base.voltages), 0.0};
    const Parameterization lam{prob.dim()};

    const auto t = tangent_predictor(prob, p0, lam);
    REQUIRE(t);
    CHECK(t->dlambda > 0.0);
    CHECK(t->dx.squaredNorm() + t->dlambda * t->dlambda == doctest::Approx(1.0));

    // dV2/dlambda at lambda = 0 against consecutive solves
    const auto vi = *prob.magnitude_index(1);
    const double h = 1e-4;
    const double fd = (solve(prob, h).voltages.vm[1] - solve(prob, -h).voltages.vm[1]) / (2 * h);
    CHECK(t->dx[vi] / t->dlambda == doctest::Approx(fd).epsilon(0.05));

    // at the analytic nose dlambda vanishes relative to the voltage components
    const double p_nose = 5.0;
    BusVoltages nose{{1.0, oracle::two_bus_v2(1.0, x, p_nose)}, {0.0, oracle::two_bus_angle(1.0, x, p_nose)}};
    const ContinuationPoint pn{prob.state_from(nose), 4.0};
    const auto tn = tangent_predictor(prob, pn, Parameterization{vi});
    REQUIRE(tn);
    CHECK(std::abs(tn->dlambda) < 1e-3 * std::abs(tn->dx[vi]));

    // sign continuity with a previous tangent
    Tangent flipped{-t->dx, -t->dlambda};
    const auto t2 = tangent_predictor(prob, p0, lam, &flipped);
    REQUIRE(t2);
    CHECK(t2->dlambda < 0.0);
}

TEST_CASE("corrector") {
    const double x = 0.1;
    const auto net = oracle::two_bus(x, 1.0);
    const PowerFlowProblem prob(net, LoadDirection::proportional(net));
    const auto vi = *prob.magnitude_index(1);
    const Parameterization lam{prob.dim()};

    SUBCASE("a solved point is a fixed point") {
        const ContinuationPoint p{prob.state_from(solve(prob, 1.0).voltages), 1.0};
        const auto r = corrector(prob, p, lam, 1e-8);
        REQUIRE(r.converged);
        CHECK(r.iterations == 0);
        CHECK((r.point.x - p.x).norm() == 0.0);
    }

    SUBCASE("near the nose: lambda pinned fails, voltage pinned converges") {
        // predicted point just beyond the analytic nose (lambda = 4)
        const double p_near = 4.98;
        BusVoltages near{{1.0, oracle::two_bus_v2(1.0, x, p_near)}, {0.0, oracle::two_bus_angle(1.0, x, p_near)}};
        ContinuationPoint pred{prob.state_from(near), 4.02};
        CHECK_FALSE(corrector(prob, pred, lam, 1e-8).converged);
        const auto r = corrector(prob, pred, Parameterization{vi}, 1e-8);
        REQUIRE(r.converged);
        CHECK(r.point.lambda < 4.0);
        CHECK(mismatch(prob, r.point.x, r.point.lambda).lpNorm<Eigen::Infinity>() <= 1e-8);
        CHECK(r.point.x[vi] == doctest::Approx(pred.x[vi]));
    }
}

TEST_CASE("substation voltage raises feeder loadability") {
    const auto f = build_feeder(FeederTemplate::D1, oracle::shipped_feeder_config("case_a.json"));
    const auto dir = LoadDirection::proportional(f, 1.5);
    const auto hi = trace_pv(f, dir, 4, {}, 1.0);
    const auto lo = trace_pv(f, dir, 4, {}, 0.95);
    check_invariants(hi);
    check_invariants(lo);
    CHECK(hi.lambda_max > lo.lambda_max);
}

TEST_CASE("step-size robustness on every shipped case") {
    const auto t = build_ieee9();
    std::vector<std::tuple<NetworkModel, int, std::optional<double>>> cases{{t, 5, std::nullopt}};
    for (const char* sc : {"case_a.json", "case_b.json"}) {
        const auto s = oracle::shipped_scenario(sc);
        const auto f = build_feeder(s.feeder->templ, s.feeder->config);
        cases.emplace_back(f, 4, 1.0);
        cases.emplace_back(compose_td(t, 5, f, s.feeder->copies), 5, std::nullopt);
    }
    for (const auto& [net, bus, vb] : cases) {
        const auto dir = LoadDirection::proportional(net, 1.5);
        const CpfOptions base;
        const auto a = trace_pv(net, dir, bus, base, vb);
        const auto b = trace_pv(net, dir, bus, base.halved(), vb);
        auto finer_floor = base;
        finer_floor.min_step /= 2.0;
        const auto c = trace_pv(net, dir, bus, finer_floor, vb);
        INFO(net.name);
        CHECK(std::abs(a.lambda_max - b.lambda_max) < 1e-4);
        CHECK(std::abs(a.lambda_max - c.lambda_max) < 1e-4);
        // turning-point certificate: the nose is a local maximum of the trace
        REQUIRE(a.nose_index > 0);
        REQUIRE(a.nose_index + 1 < a.samples.size());
        CHECK(a.samples[a.nose_index - 1].lambda < a.lambda_max);
        CHECK(a.samples[a.nose_index + 1].lambda <= a.lambda_max);
    }
}

TEST_CASE("deterministic traces") {
    const auto net = build_ieee9();
    const auto dir = LoadDirection::proportional(net, 1.5);
    CHECK(trace_pv(net, dir, 5).to_csv() == trace_pv(net, dir, 5).to_csv());
}

TEST_CASE("csv layout") {
    const auto net = oracle::two_bus(0.1);
    const auto csv = trace_pv(net, LoadDirection::proportional(net), 2).to_csv();
    CHECK(csv.rfind("step,lambda,v_monitored,flag\n", 0) == 0);
    CHECK(csv.find(",nose") != std::string::npos);
    CHECK(csv.find("end_nose_passed") != std::string::npos);
}

TEST_CASE("termination and errors") {
    const auto net = oracle::two_bus(0.1, 1.0);
    const auto dir = LoadDirection::proportional(net);
    CpfOptions few;
    few.max_steps = 2;
    const auto c = trace_pv(net, dir, 2, few);
    CHECK(c.termination == Termination::MaxSteps);
    CHECK_FALSE(c.nose_found());

    // base load beyond the transfer limit: no base case
    const auto heavy = oracle::two_bus(0.1, 6.0);
    CHECK_THROWS_AS(trace_pv(heavy, LoadDirection::proportional(heavy), 2), InfeasibleError);

    CpfOptions bad;
    bad.min_step = 1.0;
    CHECK_THROWS_AS(bad.check(), std::invalid_argument);
    CHECK_THROWS_AS(trace_pv(net, dir, 2, bad), std::invalid_argument);
}
