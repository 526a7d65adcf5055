#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"

using namespace tdvsa;

namespace {

struct Setup {
    NetworkModel t, f, td;
    ScenarioConfig s;
};

Setup setup(const char* scenario) {
    Setup x;
    x.s = oracle::shipped_scenario(scenario);
    x.t = build_ieee9();
    x.f = build_feeder(x.s.feeder->templ, x.s.feeder->config);
    x.td = compose_td(x.t, 5, x.f, x.s.feeder->copies);
    return x;
}

Classification classify(const Setup& x, double vb_step, const CpfOptions& cpf) {
    const PowerFlowProblem tp(x.t, LoadDirection::proportional(x.t, 1.5));
    const auto curve = trace_pv(tp, 5, cpf);
    HypersurfaceOptions ho;
    ho.v_b_grid = HypersurfaceOptions::uniform_grid(0.5, 1.1, vb_step);
    ho.cpf = cpf;
    const auto h = trace_hypersurface(x.f, LoadDirection::proportional(x.f, 1.5), ho);
    return superimpose(curve, h, transmission_voltage_fn(tp, curve, 5));
}

}  // namespace

TEST_CASE("superimpose classifies the shipped cases") {
    const auto a = setup("case_a.json");
    const auto ca = classify(a, 0.01, {});
    CHECK(ca.label == CaseLabel::A);
    REQUIRE(ca.lambda_cut);
    REQUIRE(ca.v_cut);
    CHECK(*ca.lambda_cut < ca.lambda_t_max);
    // at the cut the T-PV voltage sits on the surface
    const auto td = td_vsa(a.td, LoadDirection::proportional(a.td, 1.5));
    auto full = ca;
    full.lambda_td_max = td.lambda_td_max;
    CHECK(full.consistent());
    CHECK(td.lambda_td_max < *ca.lambda_cut);

    const auto b = setup("case_b.json");
    const auto cb = classify(b, 0.01, {});
    CHECK(cb.label == CaseLabel::B);
    CHECK_FALSE(cb.lambda_cut);
    auto fb = cb;
    fb.lambda_td_max = td_vsa(b.td, LoadDirection::proportional(b.td, 1.5)).lambda_td_max;
    CHECK(fb.consistent());
}

TEST_CASE("classification is stable under grid doubling and halved steps") {
    for (const char* sc : {"case_a.json", "case_b.json"}) {
        const auto x = setup(sc);
        const auto base = classify(x, 0.01, {});
        const auto fine = classify(x, 0.005, CpfOptions{}.halved());
        CHECK(base.label == fine.label);
        if (base.lambda_cut) CHECK(std::abs(*base.lambda_cut - *fine.lambda_cut) < 2e-3);
    }
}

TEST_CASE("superimpose with synthetic surfaces") {
    const auto t = build_ieee9();
    const auto curve = trace_pv(t, LoadDirection::proportional(t, 1.5), 5);

    SUBCASE("surface well below the curve") {
        Hypersurface h;
        h.samples = {{0.3, 0.0}, {0.5, 5.0}};
        const auto c = superimpose(curve, h);
        CHECK(c.label == CaseLabel::B);
        CHECK(c.lambda_t_max == curve.lambda_max);
    }
    SUBCASE("base case below the surface") {
        Hypersurface h;
        h.samples = {{0.99, 0.0}, {1.2, 5.0}};
        CHECK_THROWS_AS(superimpose(curve, h), InfeasibleError);
    }
    SUBCASE("linear surface: crossing found by bisection") {
        // v_req(lambda) = 0.8 + 0.1 lambda; compare against a dense scan of the interpolated T-PV curve
        Hypersurface h;
        h.samples = {{0.8, 0.0}, {1.0, 2.0}};
        const auto c = superimpose(curve, h);
        REQUIRE(c.label == CaseLabel::A);
        const auto up = curve.upper_branch();
        double scan = -1.0;
        for (std::size_t k = 1; k < up.size() && scan < 0; ++k)
            for (int s = 0; s <= 2000; ++s) {
                const double w = s / 2000.0;
                const double l = up[k - 1].lambda + w * (up[k].lambda - up[k - 1].lambda);
                const double v = up[k - 1].v_monitored + w * (up[k].v_monitored - up[k - 1].v_monitored);
                if (v < 0.8 + 0.1 * l) {
                    scan = l;
                    break;
                }
            }
        CHECK(*c.lambda_cut == doctest::Approx(scan).epsilon(1e-3));
        CHECK(*c.v_cut == doctest::Approx(0.8 + 0.1 * *c.lambda_cut).epsilon(1e-4));
    }
}

TEST_CASE("near-lossless feeders reproduce the transmission margin") {
    const auto t = build_ieee9();
    FeederConfig c;
    c.segment_lengths_mi = {1e-6, 1e-6, 1e-6};
    c.load_mw = 9.0;
    c.load_mvar = 3.0;
    const auto td = compose_td(t, 5, build_feeder(FeederTemplate::D1, c), 10);
    const auto r = td_vsa(td, LoadDirection::proportional(td, 1.5));
    const auto tc = trace_pv(t, LoadDirection::proportional(t, 1.5), 5);
    CHECK(std::abs(r.lambda_td_max - tc.lambda_max) < 5e-3);
    CHECK(r.base_flow.entries.at(0).p_mw == doctest::Approx(90.0).epsilon(1e-4));
    CHECK_THROWS_AS(td_vsa(t, LoadDirection::proportional(t)), ModelError);
}

TEST_CASE("MW conversion") {
    const auto x = setup("case_a.json");
    CHECK(boundary_direction_mw(x.td, LoadDirection::proportional(x.td, 1.5), 5) == doctest::Approx(135.0));
    CHECK(boundary_direction_mw(x.t, LoadDirection::proportional(x.t, 1.0), 5) == doctest::Approx(90.0));

    const auto r = margin_report({{"T-VSA", 0.99}, {"TD-VSA", 0.35}, {"zero", 0.0}}, 135.0, {"base"}, "note");
    CHECK(r.find("T-VSA")->mw == doctest::Approx(133.65));
    CHECK(r.find("TD-VSA")->mw == doctest::Approx(47.25));
    CHECK(r.find("zero")->mw == 0.0);
    CHECK(r.find("D-VSA") == nullptr);
    CHECK(r.mw_base_note == "note");
    CHECK_THROWS_AS(margin_report({{"bad", std::nan("")}}, 1.0), std::invalid_argument);
    const auto j = to_json(r);
    CHECK(j.at("mw_base").get<double>() == 135.0);
}

TEST_CASE("load shedding") {
    const auto x = setup("case_a.json");
    const auto region = ShedRegion::feeders_at(x.td, 5);
    CHECK(region.bus_ids.size() == 30);

    SUBCASE("zero shed is the identity") { CHECK(to_json(apply_load_shed(x.td, region, 0.0)) == to_json(x.td)); }
    SUBCASE("pro-rata at constant power factor") {
        const auto s = apply_load_shed(x.td, region, 15.0);
        CHECK(s.total_load_mw() == doctest::Approx(x.td.total_load_mw() - 15.0));
        for (std::size_t i = 0; i < s.size(); ++i) {
            const auto& before = x.td.buses[i];
            const auto& after = s.buses[i];
            if (before.p_load == 0.0) continue;
            if (x.td.region_of(i) == Region::Slave) {
                CHECK(after.p_load == doctest::Approx(before.p_load * 75.0 / 90.0));
                CHECK(after.q_load / after.p_load == doctest::Approx(before.q_load / before.p_load));
            } else {
                CHECK(after.p_load == before.p_load);
            }
        }
    }
    SUBCASE("cannot shed more than the region carries") {
        CHECK_THROWS_AS(apply_load_shed(x.td, region, 91.0), ModelError);
        CHECK_THROWS_AS(apply_load_shed(x.td, region, -1.0), ModelError);
        CHECK_THROWS_AS(ShedRegion::feeders_at(x.td, 7), ModelError);
    }
}

TEST_CASE("DER at unity power factor") {
    const auto x = setup("case_b.json");
    CHECK(to_json(apply_der(x.td, 0.0)) == to_json(x.td));
    const auto d = apply_der(x.td, 0.3);
    double der = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        CHECK(d.buses[i].q_load == x.td.buses[i].q_load);
        CHECK(d.buses[i].p_load == x.td.buses[i].p_load);
        if (x.td.region_of(i) == Region::Slave)
            CHECK(d.buses[i].p_der == doctest::Approx(0.3 * x.td.buses[i].p_load));
        else
            CHECK(d.buses[i].p_der == 0.0);
        der += d.buses[i].p_der;
    }
    CHECK(der == doctest::Approx(27.0));

    // net boundary power factor drops: P falls, Q barely moves
    const PowerFlowProblem p0(x.td, LoadDirection::proportional(x.td, 1.5));
    const PowerFlowProblem p1(d, LoadDirection::proportional(d, 1.5));
    const auto f0 = boundary_flows(p0, solve(p0, 0.0)).entries.at(0);
    const auto f1 = boundary_flows(p1, solve(p1, 0.0)).entries.at(0);
    const auto pf = [](const BoundaryFlowEntry& e) { return e.p_mw / std::hypot(e.p_mw, e.q_mvar); };
    CHECK(pf(f1) < pf(f0));

    CHECK_THROWS_AS(apply_der(x.td, 1.5), ModelError);
    CHECK_THROWS_AS(apply_der(x.t, 0.1), ModelError);
    CHECK(parse_der_mode("unity_pf") == DerMode::UnityPf);
    CHECK_THROWS_AS(parse_der_mode("volt_var"), ModelError);
}

TEST_CASE("DER sweep structure") {
    const auto x = setup("case_a.json");
    DerSweepOptions o;
    o.direction_scale = 1.5;
    const auto reps = der_sweep(x.td, {0.0, 0.25}, o);
    REQUIRE(reps.size() == 2);
    for (const auto& r : reps) {
        REQUIRE(r.find("T-VSA"));
        REQUIRE(r.find("TD-VSA"));
        CHECK(r.mw_base == doctest::Approx(135.0));
    }
    CHECK(reps[1].scenario.der_mw == doctest::Approx(22.5));
    CHECK(reps[0].find("TD-VSA")->lambda ==
          doctest::Approx(td_vsa(x.td, LoadDirection::proportional(x.td, 1.5)).lambda_td_max));
    o.threads = 2;
    const auto par = der_sweep(x.td, {0.0, 0.25}, o);
    CHECK(to_json(par[1]) == to_json(reps[1]));
    CHECK_THROWS_AS(der_sweep(x.td, {0.2, 0.1}, o), std::invalid_argument);
}

TEST_CASE("feeder length calibration") {
    FeederConfig c;
    c.load_mw = 9.0;
    c.load_mvar = 3.0;
    const auto r = calibrate_feeder_length(FeederTemplate::D1, c, 13.0, 1.5);
    CHECK(r.d_vsa_mw == doctest::Approx(13.0).epsilon(1e-5));
    c.segment_lengths_mi.assign(3, r.segment_length_mi);
    const auto f = build_feeder(FeederTemplate::D1, c);
    CHECK(d_vsa_margin(f, LoadDirection::proportional(f, 1.5)).mw == doctest::Approx(13.0).epsilon(1e-5));
    // the shipped scenario carries this length
    CHECK(oracle::shipped_feeder_config("case_a.json").segment_lengths_mi[0] ==
          doctest::Approx(r.segment_length_mi).epsilon(1e-5));
    CHECK_THROWS_AS(calibrate_feeder_length(FeederTemplate::D1, c, -1.0, 1.5), std::invalid_argument);
}
