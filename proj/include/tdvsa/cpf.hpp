#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tdvsa/powerflow.hpp"

namespace tdvsa {

/// Step-size and parameterization controls of the predictor-corrector loop.
/// Step lengths are measured along the unit tangent in (x, lambda) space.
struct CpfOptions {
    double initial_step = 0.05;
    double min_step = 1e-5;
    double max_step = 0.2;
    double growth = 2.0;
    double shrink = 0.5;
    int fast_iterations = 3;  // grow the step when the corrector needs at most this many iterations
    double corrector_tol = 1e-8;
    int corrector_max_iter = 12;
    double switch_threshold = 0.2;  // |dlambda| of the unit tangent below which a voltage is pinned
    int max_steps = 2000;
    int samples_past_nose = 5;
    double nose_arc_tol = 1e-7;
    SolveOptions base_solve;

    void check() const;
    /// Copy with initial, minimum and maximum steps halved.
    [[nodiscard]] CpfOptions halved() const;
};

/// A point (x, lambda) on the solution curve.
struct ContinuationPoint {
    Vector x;
    double lambda = 0.0;
};

/// Unit tangent (dx, dlambda) along the solution curve.
struct Tangent {
    Vector dx;
    double dlambda = 0.0;
};

/// Index of the pinned component: `dim` means lambda, anything smaller is an
/// entry of x.
struct Parameterization {
    Eigen::Index index = 0;
    [[nodiscard]] bool is_lambda(Eigen::Index dim) const { return index == dim; }
};

/// Solves [dG/dx, dG/dlambda; e_k^T] t = e_last and normalizes t to unit
/// length. The sign keeps continuity with `previous` when given, otherwise
/// dlambda > 0. Returns nullopt when the augmented matrix is singular.
std::optional<Tangent> tangent_predictor(const PowerFlowProblem& problem, const ContinuationPoint& point,
                                         Parameterization param, const Tangent* previous = nullptr);

struct CorrectorResult {
    bool converged = false;
    ContinuationPoint point;
    int iterations = 0;
    double mismatch_norm = 0.0;
};

/// Newton on G(x, lambda) = 0 with the parameter component pinned at its
/// predicted value.
CorrectorResult corrector(const PowerFlowProblem& problem, const ContinuationPoint& predicted,
                          Parameterization param, double tol, int max_iter = 12);

enum class Termination { NosePassed, StepFloor, SolverFailure, MaxSteps };
std::string_view to_string(Termination t);

struct PvSample {
    double lambda = 0.0;
    BusVoltages voltages;
    double v_monitored = 0.0;
};

struct PVCurve {
    std::vector<PvSample> samples;
    std::size_t nose_index = 0;
    double lambda_max = 0.0;
    int monitored_bus = 0;
    Termination termination = Termination::NosePassed;

    [[nodiscard]] bool nose_found() const { return termination == Termination::NosePassed; }
    /// Samples up to and including the nose.
    [[nodiscard]] std::vector<PvSample> upper_branch() const;
    /// CSV with columns step,lambda,v_monitored,flag.
    [[nodiscard]] std::string to_csv() const;
};

/// Traces the PV curve of `problem` from lambda = 0 through the nose.
/// Throws InfeasibleError when the base case has no solution.
PVCurve trace_pv(const PowerFlowProblem& problem, int monitored_bus, const CpfOptions& options = {});

PVCurve trace_pv(const NetworkModel& net, const LoadDirection& direction, int monitored_bus,
                 const CpfOptions& options = {}, std::optional<double> substation_vm = {});

}  // namespace tdvsa
