// Independent reference computations for the tests. Nothing here calls the
// library's Y-bus assembly or Newton solver.
#pragma once

#include <cmath>
#include <complex>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tdvsa/scenario.hpp"

namespace oracle {

using cd = std::complex<double>;
using tdvsa::BusKind;
using tdvsa::NetworkModel;

inline std::string data(const std::string& rel) { return std::string(TDVSA_DATA_DIR) + "/" + rel; }

// Slack bus 1 feeding a unity-PF load of p0 (pu) over a lossless reactance x.
inline NetworkModel two_bus(double x, double p0 = 1.0, tdvsa::NetworkKind kind = tdvsa::NetworkKind::Distribution) {
    NetworkModel n;
    n.name = "two_bus";
    n.kind = kind;
    tdvsa::Bus s;
    s.id = 1;
    s.kind = BusKind::Slack;
    s.scalable = false;
    tdvsa::Bus l;
    l.id = 2;
    l.kind = BusKind::Load;
    l.p_load = p0 * n.base_mva;
    n.buses = {s, l};
    n.branches = {{1, 2, 0.0, x, 0.0, 1.0}};
    return n;
}

// Closed form of the family above: lambda_max = v^2 / (2 x p0) - 1, and on
// the upper branch V2 = v cos(d) with sin(2d) = 2 x P / v^2.
inline double two_bus_lambda_max(double v, double x, double p0 = 1.0) { return v * v / (2.0 * x * p0) - 1.0; }
inline double two_bus_v2(double v, double x, double p) {
    const double d = 0.5 * std::asin(2.0 * x * p / (v * v));
    return v * std::cos(d);
}
inline double two_bus_angle(double v, double x, double p) { return -0.5 * std::asin(2.0 * x * p / (v * v)); }

// Dense Y-bus from the branch list (pi model, tap on the from side).
inline Eigen::MatrixXcd dense_ybus(const NetworkModel& n) {
    const auto size = static_cast<Eigen::Index>(n.size());
    Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(size, size);
    auto pos = [&](int id) {
        for (std::size_t i = 0; i < n.size(); ++i)
            if (n.buses[i].id == id) return static_cast<Eigen::Index>(i);
        return Eigen::Index{-1};
    };
    for (const auto& br : n.branches) {
        const cd ys = 1.0 / cd(br.r, br.x);
        const cd sh(0.0, br.b / 2.0);
        const auto f = pos(br.from), t = pos(br.to);
        y(f, f) += (ys + sh) / (br.tap * br.tap);
        y(t, t) += ys + sh;
        y(f, t) -= ys / br.tap;
        y(t, f) -= ys / br.tap;
    }
    return y;
}

struct GsResult {
    std::vector<double> vm, va;
    bool converged = false;
};

// Gauss-Seidel with acceleration on the base case (lambda = 0). PV buses
// hold their magnitude; the slack sits at its set point and angle 0.
inline GsResult gauss_seidel(const NetworkModel& n, double tol = 1e-11, int max_iter = 200000) {
    const auto y = dense_ybus(n);
    const auto size = n.size();
    std::vector<cd> v(size);
    std::vector<cd> s(size);
    for (std::size_t i = 0; i < size; ++i) {
        const auto& b = n.buses[i];
        v[i] = b.kind == BusKind::Slack || b.kind == BusKind::Generator ? cd(b.v_setpoint, 0.0) : cd(1.0, 0.0);
        s[i] = cd((b.p_gen + b.p_der - b.p_load) / n.base_mva, -b.q_load / n.base_mva);
    }
    GsResult r;
    const double accel = 1.6;
    for (int it = 0; it < max_iter; ++it) {
        double change = 0.0;
        for (std::size_t i = 0; i < size; ++i) {
            const auto& b = n.buses[i];
            if (b.kind == BusKind::Slack) continue;
            const auto ii = static_cast<Eigen::Index>(i);
            cd sum = 0.0;
            for (std::size_t j = 0; j < size; ++j)
                if (j != i) sum += y(ii, static_cast<Eigen::Index>(j)) * v[j];
            cd si = s[i];
            if (b.kind == BusKind::Generator) {
                const double q = -std::imag(std::conj(v[i]) * (sum + y(ii, ii) * v[i]));
                si = cd(s[i].real(), q);
            }
            cd vn = (std::conj(si / v[i]) - sum) / y(ii, ii);
            if (b.kind == BusKind::Generator) {
                vn = std::polar(b.v_setpoint, std::arg(vn));
            } else {
                vn = v[i] + accel * (vn - v[i]);
            }
            change = std::max(change, std::abs(vn - v[i]));
            v[i] = vn;
        }
        if (change < tol) {
            r.converged = true;
            break;
        }
    }
    for (const auto& x : v) {
        r.vm.push_back(std::abs(x));
        r.va.push_back(std::arg(x));
    }
    return r;
}

// Central differences of the library residual, column by column.
inline Eigen::MatrixXd fd_jacobian(const tdvsa::PowerFlowProblem& p, const tdvsa::Vector& x, double lambda,
                                   double h = 1e-6) {
    Eigen::MatrixXd j(x.size(), x.size());
    for (Eigen::Index k = 0; k < x.size(); ++k) {
        tdvsa::Vector xp = x, xm = x;
        xp[k] += h;
        xm[k] -= h;
        j.col(k) = (tdvsa::mismatch(p, xp, lambda) - tdvsa::mismatch(p, xm, lambda)) / (2.0 * h);
    }
    return j;
}

// Random interior state: magnitudes in [0.85, 1.1], angles in [-0.3, 0.3].
inline tdvsa::Vector random_state(const tdvsa::PowerFlowProblem& p, std::mt19937& rng) {
    std::uniform_real_distribution<double> ang(-0.3, 0.3), mag(0.85, 1.1);
    tdvsa::Vector x(p.dim());
    for (Eigen::Index k = 0; k < x.size(); ++k) x[k] = k < p.magnitude_offset() ? ang(rng) : mag(rng);
    return x;
}

inline tdvsa::FeederConfig shipped_feeder_config(const std::string& scenario) {
    return tdvsa::load_scenario(data("scenarios/" + scenario)).feeder->config;
}

inline tdvsa::ScenarioConfig shipped_scenario(const std::string& scenario) {
    return tdvsa::load_scenario(data("scenarios/" + scenario));
}

}  // namespace oracle
