#include "tdvsa/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <set>
#include <thread>

#include <fmt/format.h>

namespace tdvsa {

std::string_view to_string(CaseLabel label) { return label == CaseLabel::A ? "A" : "B"; }

bool Classification::consistent() const {
    if (label == CaseLabel::A) {
        if (!lambda_cut || !(*lambda_cut < lambda_t_max)) return false;
        return !lambda_td_max || *lambda_td_max < *lambda_cut;
    }
    return !lambda_td_max || *lambda_td_max <= lambda_t_max;
}

BoundaryVoltageFn transmission_voltage_fn(const PowerFlowProblem& transmission, const PVCurve& t_curve, int bus_id) {
    const auto bus = transmission.network().index_of(bus_id);
    auto upper = t_curve.upper_branch();
    return [&transmission, upper = std::move(upper), bus](double lambda) -> std::optional<double> {
        if (upper.empty()) return std::nullopt;
        // Warm start from the last upper-branch sample below lambda.
        auto it = std::upper_bound(upper.begin(), upper.end(), lambda,
                                   [](double l, const PvSample& s) { return l < s.lambda; });
        if (it != upper.begin()) --it;
        SolveOptions opts;
        opts.initial = it->voltages;
        const auto sol = solve(transmission, lambda, opts);
        if (!sol.converged) return std::nullopt;
        return sol.voltages.vm[bus];
    };
}

namespace {

double interpolate_upper(const std::vector<PvSample>& upper, double lambda) {
    if (lambda <= upper.front().lambda) return upper.front().v_monitored;
    for (std::size_t i = 1; i < upper.size(); ++i)
        if (lambda <= upper[i].lambda) {
            const auto& a = upper[i - 1];
            const auto& b = upper[i];
            const double w = (lambda - a.lambda) / (b.lambda - a.lambda);
            return a.v_monitored + w * (b.v_monitored - a.v_monitored);
        }
    return upper.back().v_monitored;
}

}  // namespace

Classification superimpose(const PVCurve& t_curve, const Hypersurface& h, const BoundaryVoltageFn& exact,
                           double tol) {
    const auto upper = t_curve.upper_branch();
    if (upper.empty()) throw std::invalid_argument("empty T-PV curve");
    if (h.samples.empty()) throw std::invalid_argument("empty hypersurface");

    Classification c;
    c.lambda_t_max = t_curve.lambda_max;

    auto v_t = [&](double lambda) {
        if (exact)
            if (auto v = exact(lambda)) return *v;
        return interpolate_upper(upper, lambda);
    };
    // Signed distance of the T-PV point above the surface; negative means infeasible.
    auto margin = [&](double lambda, double v) {
        try {
            return v - min_required_vb(h, lambda);
        } catch (const BeyondSurfaceError&) {
            return -std::numeric_limits<double>::infinity();
        } catch (const std::out_of_range&) {
            // Below the sampled lambda range the requirement is at most the
            // lowest sampled v_B.
            if (v >= h.samples.front().v_b) return v - h.samples.front().v_b;
            throw std::runtime_error(
                fmt::format("T-PV voltage {:.4f} at lambda = {:.4f} is below the sampled hypersurface; extend the "
                            "v_B grid downwards",
                            v, lambda));
        }
    };

    if (margin(upper.front().lambda, upper.front().v_monitored) < 0.0)
        throw InfeasibleError(fmt::format("infeasible base case: boundary voltage {:.4f} pu is below the feeder's "
                                          "minimum substation voltage",
                                          upper.front().v_monitored));

    for (std::size_t i = 1; i < upper.size(); ++i) {
        if (margin(upper[i].lambda, upper[i].v_monitored) >= 0.0) continue;
        double lo = upper[i - 1].lambda;
        double hi = upper[i].lambda;
        while (hi - lo > tol) {
            const double mid = 0.5 * (lo + hi);
            if (margin(mid, v_t(mid)) >= 0.0)
                lo = mid;
            else
                hi = mid;
        }
        c.label = CaseLabel::A;
        c.lambda_cut = 0.5 * (lo + hi);
        c.v_cut = v_t(*c.lambda_cut);
        return c;
    }
    c.label = CaseLabel::B;
    return c;
}

TdVsaResult td_vsa(const NetworkModel& integrated, const LoadDirection& direction, const CpfOptions& options) {
    if (!integrated.is_integrated()) throw ModelError("td_vsa needs an integrated network");
    const auto boundaries = boundary_buses(integrated);
    if (boundaries.empty()) throw ModelError("integrated network has no boundary bus");
    const PowerFlowProblem problem(integrated, direction);
    TdVsaResult out;
    out.curve = trace_pv(problem, integrated.buses[boundaries.front()].id, options);
    out.lambda_td_max = out.curve.lambda_max;
    PowerFlowSolution base;
    base.lambda = 0.0;
    base.converged = true;
    base.voltages = out.curve.samples.front().voltages;
    out.base_flow = boundary_flows(problem, base);
    return out;
}

double boundary_direction_mw(const NetworkModel& net, const LoadDirection& direction, int boundary_id) {
    std::vector<std::size_t> region = slave_buses_of(net, boundary_id);
    region.push_back(net.index_of(boundary_id));
    return direction.load_mw(region);
}

const MarginEntry* MarginReport::find(std::string_view method) const {
    for (const auto& e : entries)
        if (e.method == method) return &e;
    return nullptr;
}

MarginReport margin_report(const std::vector<std::pair<std::string, double>>& lambdas, double mw_base,
                           ScenarioDescriptor scenario, std::string mw_base_note) {
    MarginReport r;
    r.mw_base = mw_base;
    r.mw_base_note = std::move(mw_base_note);
    r.scenario = std::move(scenario);
    for (const auto& [method, lambda] : lambdas) {
        if (!std::isfinite(lambda)) throw std::invalid_argument(fmt::format("{}: non-finite lambda", method));
        r.entries.push_back({method, lambda, lambda * mw_base});
    }
    return r;
}

ShedRegion ShedRegion::feeders_at(const NetworkModel& net, int boundary_id) {
    ShedRegion r;
    for (auto i : slave_buses_of(net, boundary_id)) r.bus_ids.push_back(net.buses[i].id);
    if (r.bus_ids.empty()) throw ModelError(fmt::format("no feeders attached to bus {}", boundary_id));
    return r;
}

NetworkModel apply_load_shed(const NetworkModel& net, const ShedRegion& region, double mw) {
    if (!(mw >= 0.0)) throw ModelError("shed amount must be non-negative");
    NetworkModel out = net;
    if (mw == 0.0) return out;
    double total = 0.0;
    std::vector<std::size_t> targets;
    for (int id : region.bus_ids) {
        const auto i = net.index_of(id);
        if (net.buses[i].scalable && net.buses[i].p_load > 0.0) {
            targets.push_back(i);
            total += net.buses[i].p_load;
        }
    }
    if (mw > total * (1.0 + 1e-12))
        throw ModelError(fmt::format("cannot shed {:.3f} MW from a region carrying {:.3f} MW", mw, total));
    const double keep = 1.0 - mw / total;
    for (auto i : targets) {
        out.buses[i].p_load *= keep;
        out.buses[i].q_load *= keep;
    }
    return out;
}

DerMode parse_der_mode(std::string_view text) {
    if (text == "unity_pf") return DerMode::UnityPf;
    throw ModelError(fmt::format("unsupported DER mode '{}'", text));
}

NetworkModel apply_der(const NetworkModel& net, double penetration, DerMode mode) {
    if (mode != DerMode::UnityPf) throw ModelError("unsupported DER mode");
    if (!(penetration >= 0.0 && penetration <= 1.0)) throw ModelError("DER penetration must be within [0, 1]");
    if (net.kind == NetworkKind::Transmission) throw ModelError("DER applies to distribution or integrated networks");
    NetworkModel out = net;
    for (std::size_t i = 0; i < out.size(); ++i) {
        auto& b = out.buses[i];
        const bool feeder_bus = net.kind == NetworkKind::Distribution || net.region[i] == Region::Slave;
        if (feeder_bus && b.kind == BusKind::Load && b.p_load > 0.0) b.p_der += penetration * b.p_load;
    }
    return out;
}

std::vector<MarginReport> der_sweep(const NetworkModel& integrated, const std::vector<double>& penetrations,
                                    const DerSweepOptions& options) {
    if (!integrated.is_integrated()) throw ModelError("der_sweep needs an integrated network");
    if (!std::is_sorted(penetrations.begin(), penetrations.end()))
        throw std::invalid_argument("DER penetrations must be sorted ascending");
    const auto boundaries = boundary_buses(integrated);
    if (boundaries.empty()) throw ModelError("integrated network has no boundary bus");
    const int boundary_id = integrated.buses[boundaries.front()].id;

    std::vector<MarginReport> reports(penetrations.size());
    std::vector<std::exception_ptr> errors(penetrations.size());
    auto run_level = [&](std::size_t k) {
        try {
            const auto net = apply_der(integrated, penetrations[k]);
            const auto dir = LoadDirection::proportional(net, options.direction_scale);
            const auto td = td_vsa(net, dir, options.cpf);
            const auto agg = aggregate_equivalent(net);
            const auto t = trace_pv(agg, LoadDirection::proportional(agg, options.direction_scale), boundary_id,
                                    options.cpf);
            double der_mw = 0.0;
            for (const auto& b : net.buses) der_mw += b.p_der;
            ScenarioDescriptor sc{fmt::format("der_{:.0f}", penetrations[k] * 100.0), penetrations[k], der_mw, 0.0};
            reports[k] = margin_report({{"T-VSA", t.lambda_max}, {"TD-VSA", td.lambda_td_max}},
                                       boundary_direction_mw(net, dir, boundary_id), sc,
                                       "gross boundary load growth per unit lambda");
        } catch (...) {
            errors[k] = std::current_exception();
        }
    };
    const auto threads = static_cast<std::size_t>(std::max(1, options.threads));
    for (std::size_t start = 0; start < penetrations.size(); start += threads) {
        std::vector<std::thread> pool;
        const auto stop = std::min(penetrations.size(), start + threads);
        if (threads == 1) {
            run_level(start);
            continue;
        }
        for (auto k = start; k < stop; ++k) pool.emplace_back(run_level, k);
        for (auto& th : pool) th.join();
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    return reports;
}

CalibrationResult calibrate_feeder_length(FeederTemplate feeder, FeederConfig config, double target_mw,
                                          double direction_scale, double v_b, const CpfOptions& cpf,
                                          double rel_tol) {
    if (!(target_mw > 0.0)) throw std::invalid_argument("calibration target must be positive");
    auto cpf_fast = cpf;
    cpf_fast.samples_past_nose = 0;
    const auto n_seg = config.segment_lengths_mi.size();
    auto margin_at = [&](double length) {
        config.segment_lengths_mi.assign(n_seg, length);
        const auto net = build_feeder(feeder, config);
        return d_vsa_margin(net, LoadDirection::proportional(net, direction_scale), v_b, cpf_fast).mw;
    };
    // Margin falls as the feeder gets longer.
    double lo = 1e-4;
    double hi = 100.0;
    CalibrationResult res;
    for (; res.iterations < 200 && hi / lo - 1.0 > rel_tol; ++res.iterations) {
        const double mid = std::sqrt(lo * hi);
        double m = 0.0;
        try {
            m = margin_at(mid);
        } catch (const InfeasibleError&) {
            m = -1.0;
        }
        if (m > target_mw)
            lo = mid;
        else
            hi = mid;
    }
    res.segment_length_mi = std::sqrt(lo * hi);
    res.d_vsa_mw = margin_at(res.segment_length_mi);
    return res;
}

nlohmann::json to_json(const Classification& c) {
    nlohmann::json j;
    j["case"] = std::string(to_string(c.label));
    j["lambda_t_max"] = c.lambda_t_max;
    j["lambda_cut"] = c.lambda_cut ? nlohmann::json(*c.lambda_cut) : nlohmann::json(nullptr);
    j["v_cut"] = c.v_cut ? nlohmann::json(*c.v_cut) : nlohmann::json(nullptr);
    j["lambda_td_max"] = c.lambda_td_max ? nlohmann::json(*c.lambda_td_max) : nlohmann::json(nullptr);
    j["consistent"] = c.consistent();
    return j;
}

nlohmann::json to_json(const MarginReport& r) {
    nlohmann::json j;
    j["mw_base"] = r.mw_base;
    j["mw_base_note"] = r.mw_base_note;
    j["scenario"] = {{"name", r.scenario.name},
                     {"der_fraction", r.scenario.der_fraction},
                     {"der_mw", r.scenario.der_mw},
                     {"shed_mw", r.scenario.shed_mw}};
    auto& entries = j["margins"] = nlohmann::json::array();
    for (const auto& e : r.entries) entries.push_back({{"method", e.method}, {"lambda", e.lambda}, {"mw", e.mw}});
    return j;
}

}  // namespace tdvsa
