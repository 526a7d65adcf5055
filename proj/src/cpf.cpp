#include "tdvsa/cpf.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/SparseLU>
#include <fmt/format.h>

namespace tdvsa {

namespace {

SparseMatrix augmented(const PowerFlowProblem& problem, const Vector& x, double lambda, Eigen::Index pinned) {
    const auto n = problem.dim();
    const SparseMatrix jac = problem.jacobian(x, lambda);
    const Vector gl = problem.lambda_derivative();
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<std::size_t>(jac.nonZeros() + n + 1));
    for (Eigen::Index c = 0; c < jac.outerSize(); ++c)
        for (SparseMatrix::InnerIterator it(jac, c); it; ++it) trips.emplace_back(it.row(), it.col(), it.value());
    for (Eigen::Index r = 0; r < n; ++r)
        if (gl[r] != 0.0) trips.emplace_back(r, n, gl[r]);
    trips.emplace_back(n, pinned, 1.0);
    SparseMatrix aug(n + 1, n + 1);
    aug.setFromTriplets(trips.begin(), trips.end());
    aug.makeCompressed();
    return aug;
}

double component(const Tangent& t, Eigen::Index k) {
    return k == t.dx.size() ? t.dlambda : t.dx[k];
}

bool voltages_positive(const PowerFlowProblem& problem, const Vector& x) {
    for (Eigen::Index k = problem.magnitude_offset(); k < x.size(); ++k)
        if (!(x[k] > 0.0) || !std::isfinite(x[k])) return false;
    return x.allFinite();
}

// Fastest-changing voltage magnitude of the tangent; falls back to lambda
// when the network has no PQ buses.
Eigen::Index fastest_magnitude(const PowerFlowProblem& problem, const Tangent& t) {
    const auto n = problem.dim();
    Eigen::Index best = n;
    double best_abs = -1.0;
    for (Eigen::Index k = problem.magnitude_offset(); k < n; ++k)
        if (std::abs(t.dx[k]) > best_abs) {
            best_abs = std::abs(t.dx[k]);
            best = k;
        }
    return best;
}

Parameterization choose(const PowerFlowProblem& problem, const Tangent& t, double threshold) {
    if (std::abs(t.dlambda) >= threshold) return {problem.dim()};
    return {fastest_magnitude(problem, t)};
}

std::optional<Tangent> robust_tangent(const PowerFlowProblem& problem, const ContinuationPoint& p,
                                      Parameterization param, const Tangent* previous) {
    if (auto t = tangent_predictor(problem, p, param, previous)) return t;
    const auto n = problem.dim();
    Parameterization alt{n};
    if (param.is_lambda(n)) {
        if (!previous) return std::nullopt;
        alt.index = fastest_magnitude(problem, *previous);
        if (alt.index == n) return std::nullopt;
    }
    return tangent_predictor(problem, p, alt, previous);
}

PvSample make_sample(const PowerFlowProblem& problem, const ContinuationPoint& p, std::size_t monitored) {
    PvSample s;
    s.lambda = p.lambda;
    s.voltages = problem.voltages_from(p.x);
    s.v_monitored = s.voltages.vm[monitored];
    return s;
}

}  // namespace

void CpfOptions::check() const {
    if (!(min_step > 0.0) || !(min_step <= initial_step) || !(initial_step <= max_step))
        throw std::invalid_argument("CPF steps must satisfy 0 < min <= initial <= max");
    if (!(growth >= 1.0) || !(shrink > 0.0 && shrink < 1.0))
        throw std::invalid_argument("CPF growth must be >= 1 and shrink in (0, 1)");
    if (!(corrector_tol > 0.0)) throw std::invalid_argument("CPF corrector tolerance must be positive");
    if (!(switch_threshold > 0.0 && switch_threshold < 1.0))
        throw std::invalid_argument("CPF switch threshold must be in (0, 1)");
    if (max_steps < 1 || samples_past_nose < 0) throw std::invalid_argument("CPF step counts out of range");
}

CpfOptions CpfOptions::halved() const {
    CpfOptions o = *this;
    o.initial_step /= 2.0;
    o.min_step /= 2.0;
    o.max_step /= 2.0;
    o.max_steps *= 2;
    return o;
}

std::optional<Tangent> tangent_predictor(const PowerFlowProblem& problem, const ContinuationPoint& point,
                                         Parameterization param, const Tangent* previous) {
    const auto n = problem.dim();
    if (point.x.size() != n) throw std::invalid_argument("continuation point has the wrong dimension");
    if (param.index < 0 || param.index > n) throw std::invalid_argument("parameter index out of range");
    Eigen::SparseLU<SparseMatrix> lu;
    lu.compute(augmented(problem, point.x, point.lambda, param.index));
    if (lu.info() != Eigen::Success) return std::nullopt;
    Vector rhs = Vector::Zero(n + 1);
    rhs[n] = 1.0;
    const Vector t = lu.solve(rhs);
    if (!t.allFinite()) return std::nullopt;
    const double norm = t.norm();
    if (!(norm > 0.0)) return std::nullopt;

    Tangent out{t.head(n) / norm, t[n] / norm};
    double sign = 1.0;
    if (previous) {
        // The pinned component keeps its direction of travel; fall back to
        // the inner product if it was stationary.
        const double prev_k = component(*previous, param.index);
        if (prev_k != 0.0)
            sign = prev_k > 0.0 ? 1.0 : -1.0;
        else
            sign = (out.dx.dot(previous->dx) + out.dlambda * previous->dlambda) >= 0.0 ? 1.0 : -1.0;
        // component(out, k) is positive by construction of the right-hand side.
    } else {
        sign = out.dlambda >= 0.0 ? 1.0 : -1.0;
    }
    out.dx *= sign;
    out.dlambda *= sign;
    return out;
}

CorrectorResult corrector(const PowerFlowProblem& problem, const ContinuationPoint& predicted,
                          Parameterization param, double tol, int max_iter) {
    const auto n = problem.dim();
    if (predicted.x.size() != n) throw std::invalid_argument("continuation point has the wrong dimension");
    CorrectorResult res;
    res.point = predicted;
    const double target = param.index == n ? predicted.lambda : predicted.x[param.index];
    Eigen::SparseLU<SparseMatrix> lu;
    for (int iter = 0;; ++iter) {
        const Vector g = problem.residual(res.point.x, res.point.lambda);
        res.mismatch_norm = g.size() ? g.lpNorm<Eigen::Infinity>() : 0.0;
        res.iterations = iter;
        if (!std::isfinite(res.mismatch_norm)) return res;
        if (res.mismatch_norm <= tol) {
            res.converged = voltages_positive(problem, res.point.x);
            return res;
        }
        if (iter >= max_iter) return res;
        Vector f(n + 1);
        f.head(n) = g;
        const double current = param.index == n ? res.point.lambda : res.point.x[param.index];
        f[n] = current - target;
        lu.compute(augmented(problem, res.point.x, res.point.lambda, param.index));
        if (lu.info() != Eigen::Success) return res;
        const Vector dy = lu.solve(-f);
        if (!dy.allFinite()) return res;
        res.point.x += dy.head(n);
        res.point.lambda += dy[n];
        if (!voltages_positive(problem, res.point.x)) return res;
    }
}

std::string_view to_string(Termination t) {
    switch (t) {
        case Termination::NosePassed: return "nose_passed";
        case Termination::StepFloor: return "step_floor";
        case Termination::SolverFailure: return "solver_failure";
        case Termination::MaxSteps: return "max_steps";
    }
    return "?";
}

std::vector<PvSample> PVCurve::upper_branch() const {
    if (samples.empty()) return {};
    return {samples.begin(), samples.begin() + static_cast<std::ptrdiff_t>(nose_index) + 1};
}

std::string PVCurve::to_csv() const {
    std::string out = "step,lambda,v_monitored,flag\n";
    for (std::size_t i = 0; i < samples.size(); ++i) {
        std::string flag;
        if (i == nose_index && nose_found()) flag = "nose";
        if (i + 1 == samples.size()) {
            if (!flag.empty()) flag += '|';
            flag += fmt::format("end_{}", to_string(termination));
        }
        out += fmt::format("{},{:.10g},{:.10g},{}\n", i, samples[i].lambda, samples[i].v_monitored, flag);
    }
    return out;
}

PVCurve trace_pv(const PowerFlowProblem& problem, int monitored_bus, const CpfOptions& options) {
    options.check();
    const auto& net = problem.network();
    const auto monitored = net.index_of(monitored_bus);
    const auto n = problem.dim();

    const auto base = solve(problem, 0.0, options.base_solve);
    if (!base.converged)
        throw InfeasibleError(fmt::format("base case of '{}' has no power-flow solution ({})", net.name,
                                          base.diagnostic.empty() ? to_string(base.status) : base.diagnostic));

    PVCurve curve;
    curve.monitored_bus = monitored_bus;
    ContinuationPoint y{problem.state_from(base.voltages), 0.0};
    curve.samples.push_back(make_sample(problem, y, monitored));

    auto finish = [&](Termination why) {
        curve.termination = why;
        if (why != Termination::NosePassed) {
            std::size_t best = 0;
            for (std::size_t i = 1; i < curve.samples.size(); ++i)
                if (curve.samples[i].lambda > curve.samples[best].lambda) best = i;
            curve.nose_index = best;
        }
        curve.lambda_max = curve.samples[curve.nose_index].lambda;
        return curve;
    };

    auto first = robust_tangent(problem, y, Parameterization{n}, nullptr);
    if (!first) return finish(Termination::SolverFailure);
    Tangent t = *first;
    double step = options.initial_step;
    bool past_nose = false;
    int after_nose = 0;

    for (int s = 0; s < options.max_steps; ++s) {
        const auto param = choose(problem, t, options.switch_threshold);
        const ContinuationPoint predicted{y.x + step * t.dx, y.lambda + step * t.dlambda};
        const auto corr = corrector(problem, predicted, param, options.corrector_tol, options.corrector_max_iter);
        std::optional<Tangent> next;
        if (corr.converged) next = robust_tangent(problem, corr.point, param, &t);
        bool ok = corr.converged && next.has_value();
        // Upper branch: lambda must still grow while the tangent points up.
        if (ok && !past_nose && next->dlambda > 0.0 && corr.point.lambda <= y.lambda) ok = false;
        if (!ok) {
            step *= options.shrink;
            if (step < options.min_step) return finish(past_nose ? Termination::NosePassed : Termination::StepFloor);
            continue;
        }

        if (!past_nose && next->dlambda < 0.0) {
            // Turning point between y and corr.point: bisect on the arc with a
            // pinned voltage until the bracket is below nose_arc_tol.
            const Parameterization pin{fastest_magnitude(problem, t)};
            double lo = 0.0;
            double hi = step;
            ContinuationPoint best = corr.point.lambda > y.lambda ? corr.point : y;
            while (hi - lo > options.nose_arc_tol && !pin.is_lambda(n)) {
                const double mid = 0.5 * (lo + hi);
                const ContinuationPoint guess{y.x + mid * t.dx, y.lambda + mid * t.dlambda};
                const auto c = corrector(problem, guess, pin, options.corrector_tol, options.corrector_max_iter);
                if (!c.converged) break;
                const auto tm = tangent_predictor(problem, c.point, pin, &t);
                if (!tm) break;
                if (c.point.lambda > best.lambda) best = c.point;
                if (tm->dlambda > 0.0)
                    lo = mid;
                else
                    hi = mid;
            }
            if (best.lambda > curve.samples.back().lambda) curve.samples.push_back(make_sample(problem, best, monitored));
            curve.nose_index = curve.samples.size() - 1;
            past_nose = true;
            if (options.samples_past_nose == 0) return finish(Termination::NosePassed);
        }

        if (past_nose) {
            // Lower branch: stop on a second fold or once lambda turns negative.
            if (corr.point.lambda > curve.samples.back().lambda || corr.point.lambda < 0.0)
                return finish(Termination::NosePassed);
            curve.samples.push_back(make_sample(problem, corr.point, monitored));
            if (++after_nose >= options.samples_past_nose) return finish(Termination::NosePassed);
        } else {
            curve.samples.push_back(make_sample(problem, corr.point, monitored));
        }
        y = corr.point;
        t = *next;
        if (corr.iterations <= options.fast_iterations) step = std::min(step * options.growth, options.max_step);
    }
    return finish(past_nose ? Termination::NosePassed : Termination::MaxSteps);
}

PVCurve trace_pv(const NetworkModel& net, const LoadDirection& direction, int monitored_bus,
                 const CpfOptions& options, std::optional<double> substation_vm) {
    const PowerFlowProblem problem(net, direction, substation_vm);
    return trace_pv(problem, monitored_bus, options);
}

}  // namespace tdvsa
