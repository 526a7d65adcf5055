#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tdvsa/cpf.hpp"

namespace tdvsa {

/// Requested lambda lies beyond every sampled critical loading.
class BeyondSurfaceError : public std::out_of_range {
  public:
    using std::out_of_range::out_of_range;
};

struct HypersurfaceSample {
    double v_b = 0.0;
    double lambda_max = 0.0;
};

/// Sampled feasibility boundary {(v_B, lambda_D^max(v_B))} of a feeder.
/// Points above the curve (higher v_B at a given lambda) are feasible.
struct Hypersurface {
    std::string feeder;
    std::vector<HypersurfaceSample> samples;  // strictly increasing v_b
    std::vector<double> infeasible_v_b;       // grid points where the base case has no solution
    double v_b_min = 0.0;                     // sweep bounds
    double v_b_max = 0.0;

    /// Piecewise-linear lambda_D^max at v_B, clamped to the sampled range.
    [[nodiscard]] double lambda_at(double v_b) const;
    [[nodiscard]] double lambda_top() const { return samples.empty() ? 0.0 : samples.back().lambda_max; }
    [[nodiscard]] double lambda_bottom() const { return samples.empty() ? 0.0 : samples.front().lambda_max; }
    /// CSV with columns v_b,lambda_max.
    [[nodiscard]] std::string to_csv() const;
};

struct HypersurfaceOptions {
    std::vector<double> v_b_grid;  // empty: [0.5, 1.1] with step 0.01
    CpfOptions cpf;
    bool refine_feasibility_edge = true;
    double edge_tol = 1e-5;
    double monotone_tol = 1e-6;
    int threads = 1;

    static std::vector<double> uniform_grid(double lo, double hi, double step);
};

/// One CPF trace per grid point with the substation held at v_B. Throws
/// ModelError when the feeder is not a distribution network, InfeasibleError
/// when no grid point is feasible, and std::runtime_error when the sampled
/// boundary is not monotone.
Hypersurface trace_hypersurface(const NetworkModel& feeder, const LoadDirection& direction,
                                const HypersurfaceOptions& options = {});

/// Smallest v_B on the interpolated boundary with lambda_D^max(v_B) >= lambda.
/// Throws BeyondSurfaceError above the sampled range and std::out_of_range
/// below it.
double min_required_vb(const Hypersurface& h, double lambda);

struct DistributionMargin {
    double lambda_max = 0.0;
    double mw = 0.0;       // lambda_max * direction MW
    double mw_base = 0.0;  // sum of scalable dp_load of the feeder
    PVCurve curve;
};

/// D-VSA: single trace at a fixed substation voltage. Throws InfeasibleError
/// if the base case is infeasible at `v_b`.
DistributionMargin d_vsa_margin(const NetworkModel& feeder, const LoadDirection& direction, double v_b = 1.0,
                                const CpfOptions& options = {});

/// Lowest substation voltage at which the feeder still solves at lambda = 0
/// (bisection on base-case feasibility).
double min_feasible_vb(const NetworkModel& feeder, const LoadDirection& direction, double lo = 0.05,
                       double hi = 1.1, double tol = 1e-6);

}  // namespace tdvsa
