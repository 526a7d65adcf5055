#include "tdvsa/powerflow.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/SparseLU>
#include <fmt/format.h>

namespace tdvsa {

using cd = std::complex<double>;

PowerFlowProblem::PowerFlowProblem(const NetworkModel& net, LoadDirection direction,
                                   std::optional<double> substation_vm)
    : net_(net), dir_(std::move(direction)), vb_(substation_vm) {
    validate(net_);
    const auto n = net_.size();
    if (dir_.dp_load.size() != n || dir_.dq_load.size() != n || dir_.dp_gen.size() != n)
        throw std::invalid_argument("load direction does not match the network size");
    if (vb_ && !(*vb_ > 0.0)) throw std::invalid_argument("substation voltage must be positive");
    y_ = build_ybus(net_);
    slack_ = net_.slack_index();
    angle_pos_.assign(n, -1);
    mag_pos_.assign(n, -1);
    for (std::size_t i = 0; i < n; ++i) {
        if (i == slack_) continue;
        angle_pos_[i] = static_cast<Eigen::Index>(angle_bus_.size());
        angle_bus_.push_back(i);
    }
    for (std::size_t i = 0; i < n; ++i) {
        const auto kind = net_.buses[i].kind;
        if (kind == BusKind::Load || kind == BusKind::Boundary) {
            mag_pos_[i] = static_cast<Eigen::Index>(angle_bus_.size() + mag_bus_.size());
            mag_bus_.push_back(i);
        }
    }
}

BusVoltages PowerFlowProblem::flat_voltages() const {
    BusVoltages v;
    const auto n = net_.size();
    v.vm.assign(n, 1.0);
    v.va.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto kind = net_.buses[i].kind;
        if (kind == BusKind::Slack || kind == BusKind::Generator) v.vm[i] = net_.buses[i].v_setpoint;
    }
    if (vb_) v.vm[slack_] = *vb_;
    return v;
}

Vector PowerFlowProblem::state_from(const BusVoltages& v) const {
    if (v.vm.size() != net_.size() || v.va.size() != net_.size())
        throw std::invalid_argument("voltage vector does not match the network size");
    Vector x(dim());
    for (std::size_t k = 0; k < angle_bus_.size(); ++k) x[static_cast<Eigen::Index>(k)] = v.va[angle_bus_[k]];
    for (std::size_t k = 0; k < mag_bus_.size(); ++k)
        x[static_cast<Eigen::Index>(angle_bus_.size() + k)] = v.vm[mag_bus_[k]];
    return x;
}

BusVoltages PowerFlowProblem::voltages_from(const Vector& x) const {
    if (x.size() != dim())
        throw std::invalid_argument(fmt::format("state has dimension {}, expected {}", x.size(), dim()));
    BusVoltages v = flat_voltages();
    for (std::size_t k = 0; k < angle_bus_.size(); ++k) v.va[angle_bus_[k]] = x[static_cast<Eigen::Index>(k)];
    for (std::size_t k = 0; k < mag_bus_.size(); ++k)
        v.vm[mag_bus_[k]] = x[static_cast<Eigen::Index>(angle_bus_.size() + k)];
    return v;
}

std::optional<Eigen::Index> PowerFlowProblem::magnitude_index(std::size_t bus) const {
    if (bus >= mag_pos_.size() || mag_pos_[bus] < 0) return std::nullopt;
    return mag_pos_[bus];
}

cd PowerFlowProblem::scheduled(std::size_t i, double lambda) const {
    const auto& b = net_.buses[i];
    const double p = (b.p_gen + lambda * dir_.dp_gen[i]) - (b.p_load + lambda * dir_.dp_load[i]) + b.p_der;
    const double q = -(b.q_load + lambda * dir_.dq_load[i]);
    return cd(p, q) / net_.base_mva;
}

std::vector<cd> PowerFlowProblem::injections(const BusVoltages& v) const {
    const auto n = net_.size();
    std::vector<cd> volt(n);
    for (std::size_t i = 0; i < n; ++i) volt[i] = std::polar(v.vm[i], v.va[i]);
    std::vector<cd> current(n, cd(0.0, 0.0));
    for (Eigen::Index j = 0; j < y_.outerSize(); ++j)
        for (ComplexSparse::InnerIterator it(y_, j); it; ++it)
            current[static_cast<std::size_t>(it.row())] += it.value() * volt[static_cast<std::size_t>(j)];
    std::vector<cd> s(n);
    for (std::size_t i = 0; i < n; ++i) s[i] = volt[i] * std::conj(current[i]);
    return s;
}

Vector PowerFlowProblem::residual(const Vector& x, double lambda) const {
    const auto v = voltages_from(x);
    const auto s = injections(v);
    Vector g(dim());
    for (std::size_t k = 0; k < angle_bus_.size(); ++k) {
        const auto i = angle_bus_[k];
        g[static_cast<Eigen::Index>(k)] = (scheduled(i, lambda) - s[i]).real();
    }
    for (std::size_t k = 0; k < mag_bus_.size(); ++k) {
        const auto i = mag_bus_[k];
        g[static_cast<Eigen::Index>(angle_bus_.size() + k)] = (scheduled(i, lambda) - s[i]).imag();
    }
    return g;
}

SparseMatrix PowerFlowProblem::jacobian(const Vector& x, double /*lambda*/) const {
    const auto v = voltages_from(x);
    const auto n = net_.size();
    std::vector<cd> volt(n), unit(n);
    for (std::size_t i = 0; i < n; ++i) {
        volt[i] = std::polar(v.vm[i], v.va[i]);
        unit[i] = std::polar(1.0, v.va[i]);
    }
    std::vector<cd> current(n, cd(0.0, 0.0));
    for (Eigen::Index j = 0; j < y_.outerSize(); ++j)
        for (ComplexSparse::InnerIterator it(y_, j); it; ++it)
            current[static_cast<std::size_t>(it.row())] += it.value() * volt[static_cast<std::size_t>(j)];

    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<std::size_t>(y_.nonZeros()) * 4 + n * 4);
    // G = S_sched - S_calc, so every entry carries a minus sign.
    auto emit = [&](std::size_t i, std::size_t j, cd ds_dva, cd ds_dvm) {
        const auto pa = angle_pos_[i];
        const auto qm = mag_pos_[i];
        const auto ca = angle_pos_[j];
        const auto cm = mag_pos_[j];
        if (pa >= 0 && ca >= 0) trips.emplace_back(pa, ca, -ds_dva.real());
        if (pa >= 0 && cm >= 0) trips.emplace_back(pa, cm, -ds_dvm.real());
        if (qm >= 0 && ca >= 0) trips.emplace_back(qm, ca, -ds_dva.imag());
        if (qm >= 0 && cm >= 0) trips.emplace_back(qm, cm, -ds_dvm.imag());
    };
    const cd j1(0.0, 1.0);
    for (Eigen::Index jj = 0; jj < y_.outerSize(); ++jj)
        for (ComplexSparse::InnerIterator it(y_, jj); it; ++it) {
            const auto i = static_cast<std::size_t>(it.row());
            const auto j = static_cast<std::size_t>(jj);
            const cd yij = it.value();
            const cd ds_dva = -j1 * volt[i] * std::conj(yij * volt[j]);
            const cd ds_dvm = volt[i] * std::conj(yij * unit[j]);
            emit(i, j, ds_dva, ds_dvm);
        }
    for (std::size_t i = 0; i < n; ++i) {
        const cd ds_dva = j1 * volt[i] * std::conj(current[i]);
        const cd ds_dvm = std::conj(current[i]) * unit[i];
        emit(i, i, ds_dva, ds_dvm);
    }
    SparseMatrix jac(dim(), dim());
    jac.setFromTriplets(trips.begin(), trips.end());
    jac.makeCompressed();
    return jac;
}

Vector PowerFlowProblem::lambda_derivative() const {
    Vector d(dim());
    for (std::size_t k = 0; k < angle_bus_.size(); ++k) {
        const auto i = angle_bus_[k];
        d[static_cast<Eigen::Index>(k)] = (dir_.dp_gen[i] - dir_.dp_load[i]) / net_.base_mva;
    }
    for (std::size_t k = 0; k < mag_bus_.size(); ++k) {
        const auto i = mag_bus_[k];
        d[static_cast<Eigen::Index>(angle_bus_.size() + k)] = -dir_.dq_load[i] / net_.base_mva;
    }
    return d;
}

Vector mismatch(const PowerFlowProblem& problem, const Vector& x, double lambda) {
    return problem.residual(x, lambda);
}

SparseMatrix jacobian(const PowerFlowProblem& problem, const Vector& x, double lambda) {
    return problem.jacobian(x, lambda);
}

std::string_view to_string(SolveStatus status) {
    switch (status) {
        case SolveStatus::Converged: return "converged";
        case SolveStatus::MaxIterations: return "max_iterations";
        case SolveStatus::Singular: return "singular_jacobian";
        case SolveStatus::Diverged: return "diverged";
    }
    return "?";
}

PowerFlowSolution solve(const PowerFlowProblem& problem, double lambda, const SolveOptions& options) {
    if (!(options.tol > 0.0)) throw std::invalid_argument("solver tolerance must be positive");
    PowerFlowSolution sol;
    sol.lambda = lambda;
    sol.substation_vm = problem.substation_vm();

    BusVoltages start = options.initial ? *options.initial : problem.flat_voltages();
    // Fixed magnitudes always come from the problem, not the warm start.
    const auto flat = problem.flat_voltages();
    for (std::size_t i = 0; i < flat.vm.size(); ++i)
        if (!problem.magnitude_index(i)) start.vm[i] = flat.vm[i];
    const auto slack = problem.network().slack_index();
    start.va[slack] = flat.va[slack];

    Vector x = problem.state_from(start);
    Eigen::SparseLU<SparseMatrix> lu;
    for (int iter = 0;; ++iter) {
        const Vector g = problem.residual(x, lambda);
        sol.mismatch_norm = g.size() ? g.lpNorm<Eigen::Infinity>() : 0.0;
        sol.iterations = iter;
        if (!std::isfinite(sol.mismatch_norm)) {
            sol.status = SolveStatus::Diverged;
            sol.diagnostic = "non-finite mismatch";
            break;
        }
        if (sol.mismatch_norm <= options.tol) {
            sol.status = SolveStatus::Converged;
            sol.converged = true;
            break;
        }
        if (iter >= options.max_iter) {
            sol.status = SolveStatus::MaxIterations;
            sol.diagnostic = fmt::format("no convergence after {} iterations (mismatch {:.3e} pu)", iter,
                                         sol.mismatch_norm);
            break;
        }
        const SparseMatrix jac = problem.jacobian(x, lambda);
        lu.compute(jac);
        if (lu.info() != Eigen::Success) {
            sol.status = SolveStatus::Singular;
            sol.diagnostic = "singular Jacobian: operating point near collapse or infeasible";
            break;
        }
        const Vector dx = lu.solve(-g);
        if (!dx.allFinite()) {
            sol.status = SolveStatus::Singular;
            sol.diagnostic = "singular Jacobian: operating point near collapse or infeasible";
            break;
        }
        x += dx;
        const auto v = problem.voltages_from(x);
        bool bad = false;
        for (double m : v.vm) bad = bad || !(m > 0.0) || !std::isfinite(m);
        if (bad) {
            sol.status = SolveStatus::Diverged;
            sol.diagnostic = "voltage magnitude left the positive range";
            sol.iterations = iter + 1;
            break;
        }
    }
    sol.voltages = problem.voltages_from(x);
    return sol;
}

PowerFlowSolution solve(const NetworkModel& net, double lambda, const SolveOptions& options,
                        std::optional<double> substation_vm, double direction_scale) {
    const PowerFlowProblem problem(net, LoadDirection::proportional(net, direction_scale), substation_vm);
    return solve(problem, lambda, options);
}

std::pair<cd, cd> branch_flow(const NetworkModel& net, std::size_t k, const BusVoltages& v) {
    const auto& br = net.branches.at(k);
    const auto f = net.index_of(br.from);
    const auto t = net.index_of(br.to);
    const cd vf = std::polar(v.vm[f], v.va[f]);
    const cd vt = std::polar(v.vm[t], v.va[t]);
    const cd ys = 1.0 / cd(br.r, br.x);
    const cd ysh(0.0, br.b / 2.0);
    const cd i_from = (ys + ysh) / (br.tap * br.tap) * vf - ys / br.tap * vt;
    const cd i_to = (ys + ysh) * vt - ys / br.tap * vf;
    return {vf * std::conj(i_from), vt * std::conj(i_to)};
}

double total_losses_mw(const NetworkModel& net, const BusVoltages& v) {
    double loss = 0.0;
    for (std::size_t k = 0; k < net.branches.size(); ++k) {
        const auto [sf, st] = branch_flow(net, k, v);
        loss += (sf + st).real();
    }
    return loss * net.base_mva;
}

BoundaryFlow boundary_flows(const PowerFlowProblem& problem, const PowerFlowSolution& solution) {
    const auto& net = problem.network();
    if (!net.is_integrated()) throw ModelError("boundary flows need an integrated network");
    if (!solution.converged) throw std::invalid_argument("boundary flows need a converged solution");
    BoundaryFlow out;
    for (auto b : boundary_buses(net)) {
        BoundaryFlowEntry e;
        e.bus_id = net.buses[b].id;
        cd s_bs(0.0, 0.0);
        for (std::size_t k = 0; k < net.branches.size(); ++k) {
            const auto& br = net.branches[k];
            const auto f = net.index_of(br.from);
            const auto t = net.index_of(br.to);
            const auto [sf, st] = branch_flow(net, k, solution.voltages);
            if (f == b && net.region[t] == Region::Slave) s_bs += sf;
            if (t == b && net.region[f] == Region::Slave) s_bs += st;
        }
        for (auto s : slave_buses_of(net, e.bus_id)) {
            const auto sched = -problem.scheduled(s, solution.lambda) * net.base_mva;
            e.feeder_load_mw += sched.real();
            e.feeder_load_mvar += sched.imag();
        }
        e.p_mw = s_bs.real() * net.base_mva;
        e.q_mvar = s_bs.imag() * net.base_mva;
        e.losses_mw = e.p_mw - e.feeder_load_mw;
        out.entries.push_back(e);
    }
    return out;
}

nlohmann::json to_json(const PowerFlowSolution& solution, const NetworkModel& net) {
    nlohmann::json j;
    j["lambda"] = solution.lambda;
    if (solution.substation_vm) j["v_b"] = *solution.substation_vm;
    j["converged"] = solution.converged;
    j["status"] = std::string(to_string(solution.status));
    j["iterations"] = solution.iterations;
    j["mismatch"] = solution.mismatch_norm;
    auto& buses = j["buses"] = nlohmann::json::array();
    for (std::size_t i = 0; i < net.size(); ++i)
        buses.push_back({{"id", net.buses[i].id}, {"vm", solution.voltages.vm[i]}, {"va", solution.voltages.va[i]}});
    return j;
}

}  // namespace tdvsa
