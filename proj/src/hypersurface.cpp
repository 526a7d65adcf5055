#include "tdvsa/hypersurface.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

#include <fmt/format.h>

namespace tdvsa {

namespace {

void require_distribution(const NetworkModel& feeder) {
    if (feeder.kind != NetworkKind::Distribution)
        throw ModelError(fmt::format("'{}' is not a distribution feeder", feeder.name));
}

// Flat start scaled to the substation voltage.
CpfOptions with_scaled_start(const PowerFlowProblem& problem, CpfOptions options) {
    auto v = problem.flat_voltages();
    const double vb = problem.substation_vm().value_or(1.0);
    for (auto& m : v.vm) m = vb;
    options.base_solve.initial = v;
    return options;
}

bool base_feasible(const NetworkModel& feeder, const LoadDirection& direction, double v_b,
                   const std::optional<BusVoltages>& warm) {
    const PowerFlowProblem problem(feeder, direction, v_b);
    SolveOptions opts;
    if (warm) {
        opts.initial = warm;
    } else {
        auto v = problem.flat_voltages();
        for (auto& m : v.vm) m = v_b;
        opts.initial = v;
    }
    return solve(problem, 0.0, opts).converged;
}

}  // namespace

double Hypersurface::lambda_at(double v_b) const {
    if (samples.empty()) return 0.0;
    if (v_b <= samples.front().v_b) return samples.front().lambda_max;
    if (v_b >= samples.back().v_b) return samples.back().lambda_max;
    const auto hi = std::upper_bound(samples.begin(), samples.end(), v_b,
                                     [](double v, const HypersurfaceSample& s) { return v < s.v_b; });
    const auto lo = hi - 1;
    const double w = (v_b - lo->v_b) / (hi->v_b - lo->v_b);
    return lo->lambda_max + w * (hi->lambda_max - lo->lambda_max);
}

std::string Hypersurface::to_csv() const {
    std::string out = "v_b,lambda_max\n";
    for (const auto& s : samples) out += fmt::format("{:.10g},{:.10g}\n", s.v_b, s.lambda_max);
    return out;
}

std::vector<double> HypersurfaceOptions::uniform_grid(double lo, double hi, double step) {
    if (!(step > 0.0) || !(hi >= lo) || !(lo > 0.0)) throw std::invalid_argument("bad v_B grid bounds");
    std::vector<double> grid;
    const auto count = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
    for (long k = 0; k <= count; ++k) grid.push_back(lo + static_cast<double>(k) * step);
    return grid;
}

double min_feasible_vb(const NetworkModel& feeder, const LoadDirection& direction, double lo, double hi,
                       double tol) {
    require_distribution(feeder);
    if (!base_feasible(feeder, direction, hi, std::nullopt))
        throw InfeasibleError(fmt::format("feeder '{}' is infeasible at v_B = {}", feeder.name, hi));
    if (base_feasible(feeder, direction, lo, std::nullopt)) return lo;
    // Warm-start each feasible probe from the last feasible solution.
    const PowerFlowProblem top(feeder, direction, hi);
    std::optional<BusVoltages> warm = solve(top, 0.0).voltages;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        const PowerFlowProblem problem(feeder, direction, mid);
        SolveOptions opts;
        opts.initial = warm;
        const auto sol = solve(problem, 0.0, opts);
        if (sol.converged) {
            hi = mid;
            warm = sol.voltages;
        } else {
            lo = mid;
        }
    }
    return hi;
}

Hypersurface trace_hypersurface(const NetworkModel& feeder, const LoadDirection& direction,
                                const HypersurfaceOptions& options) {
    require_distribution(feeder);
    auto grid = options.v_b_grid.empty() ? HypersurfaceOptions::uniform_grid(0.5, 1.1, 0.01) : options.v_b_grid;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        if (!(grid[k] > 0.0)) throw std::invalid_argument("v_B grid values must be positive");
        if (k > 0 && !(grid[k] > grid[k - 1])) throw std::invalid_argument("v_B grid must be strictly increasing");
    }
    if (grid.empty()) throw std::invalid_argument("empty v_B grid");

    CpfOptions cpf = options.cpf;
    cpf.samples_past_nose = 0;
    cpf.check();

    enum class Outcome { Pending, Feasible, Infeasible };
    struct Result {
        Outcome outcome = Outcome::Pending;
        double lambda_max = 0.0;
        std::exception_ptr error;
    };
    std::vector<Result> results(grid.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k = next++; k < grid.size(); k = next++) {
            try {
                const PowerFlowProblem problem(feeder, direction, grid[k]);
                const auto curve = trace_pv(problem, feeder.buses.back().id, with_scaled_start(problem, cpf));
                if (!curve.nose_found())
                    throw StallError(fmt::format("hypersurface trace at v_B = {} stopped before the nose ({})",
                                                 grid[k], to_string(curve.termination)));
                results[k].lambda_max = curve.lambda_max;
                results[k].outcome = Outcome::Feasible;
            } catch (const InfeasibleError&) {
                results[k].outcome = Outcome::Infeasible;
            } catch (...) {
                results[k].error = std::current_exception();
            }
        }
    };
    const int threads = std::max(1, std::min<int>(options.threads, static_cast<int>(grid.size())));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    for (const auto& r : results)
        if (r.error) std::rethrow_exception(r.error);

    Hypersurface h;
    h.feeder = feeder.name;
    h.v_b_min = grid.front();
    h.v_b_max = grid.back();
    std::optional<std::size_t> first_feasible;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        if (results[k].outcome == Outcome::Infeasible) {
            if (first_feasible)
                throw std::runtime_error(fmt::format(
                    "feeder '{}' infeasible at v_B = {} above a feasible grid point", feeder.name, grid[k]));
            h.infeasible_v_b.push_back(grid[k]);
            continue;
        }
        if (!first_feasible) first_feasible = k;
        h.samples.push_back({grid[k], results[k].lambda_max});
    }
    if (h.samples.empty())
        throw InfeasibleError(fmt::format("feeder '{}' is infeasible on the whole v_B grid", feeder.name));

    if (options.refine_feasibility_edge && !h.infeasible_v_b.empty()) {
        const double edge = min_feasible_vb(feeder, direction, h.infeasible_v_b.back(), h.samples.front().v_b,
                                            options.edge_tol);
        if (edge < h.samples.front().v_b) h.samples.insert(h.samples.begin(), {edge, 0.0});
    }

    for (std::size_t k = 1; k < h.samples.size(); ++k)
        if (h.samples[k].lambda_max < h.samples[k - 1].lambda_max - options.monotone_tol)
            throw std::runtime_error(fmt::format(
                "hypersurface of '{}' is not monotone between v_B = {} and {} ({} > {})", feeder.name,
                h.samples[k - 1].v_b, h.samples[k].v_b, h.samples[k - 1].lambda_max, h.samples[k].lambda_max));
    return h;
}

double min_required_vb(const Hypersurface& h, double lambda) {
    if (h.samples.empty()) throw std::out_of_range("empty hypersurface");
    if (lambda > h.lambda_top())
        throw BeyondSurfaceError(
            fmt::format("lambda = {} is beyond the sampled surface (max {})", lambda, h.lambda_top()));
    const auto& s = h.samples;
    if (lambda < s.front().lambda_max)
        throw std::out_of_range(
            fmt::format("lambda = {} is below the sampled surface (min {})", lambda, s.front().lambda_max));
    for (std::size_t k = 0; k < s.size(); ++k) {
        if (s[k].lambda_max < lambda) continue;
        if (k == 0 || s[k].lambda_max == lambda) return s[k].v_b;
        const double span = s[k].lambda_max - s[k - 1].lambda_max;
        const double w = span > 0.0 ? (lambda - s[k - 1].lambda_max) / span : 0.0;
        return s[k - 1].v_b + w * (s[k].v_b - s[k - 1].v_b);
    }
    return s.back().v_b;
}

DistributionMargin d_vsa_margin(const NetworkModel& feeder, const LoadDirection& direction, double v_b,
                                const CpfOptions& options) {
    require_distribution(feeder);
    const PowerFlowProblem problem(feeder, direction, v_b);
    DistributionMargin out;
    out.curve = trace_pv(problem, feeder.buses.back().id, with_scaled_start(problem, options));
    out.lambda_max = out.curve.lambda_max;
    std::vector<std::size_t> all(feeder.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    out.mw_base = direction.load_mw(all);
    out.mw = out.lambda_max * out.mw_base;
    return out;
}

}  // namespace tdvsa
