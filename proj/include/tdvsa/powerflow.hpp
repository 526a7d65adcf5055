#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "tdvsa/netmodel.hpp"

namespace tdvsa {

using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

/// Full bus voltage state in polar form, ordered like NetworkModel::buses.
struct BusVoltages {
    std::vector<double> vm;
    std::vector<double> va;  // rad
};

/// Parameterized power-flow equations G(x, lambda) = S(lambda) - S_calc(x).
///
/// The state x stacks angles of every non-slack bus, then magnitudes of every
/// PQ / boundary bus. Residual rows follow the same layout: P mismatch on
/// non-slack buses, Q mismatch on PQ / boundary buses. When `substation_vm` is
/// set, it overrides the slack magnitude; this is v_B for distribution feeders.
class PowerFlowProblem {
  public:
    PowerFlowProblem(const NetworkModel& net, LoadDirection direction, std::optional<double> substation_vm = {});

    [[nodiscard]] const NetworkModel& network() const { return net_; }
    [[nodiscard]] const LoadDirection& direction() const { return dir_; }
    [[nodiscard]] std::optional<double> substation_vm() const { return vb_; }
    [[nodiscard]] Eigen::Index dim() const { return static_cast<Eigen::Index>(angle_bus_.size() + mag_bus_.size()); }
    [[nodiscard]] const ComplexSparse& ybus() const { return y_; }

    /// Flat start: 1 pu / 0 rad, set points on generator buses.
    [[nodiscard]] BusVoltages flat_voltages() const;
    [[nodiscard]] Vector state_from(const BusVoltages& v) const;
    [[nodiscard]] BusVoltages voltages_from(const Vector& x) const;
    /// Position in x of the magnitude of bus position `bus`, if it is a state.
    [[nodiscard]] std::optional<Eigen::Index> magnitude_index(std::size_t bus) const;
    /// Entries of x from this index on are voltage magnitudes.
    [[nodiscard]] Eigen::Index magnitude_offset() const { return static_cast<Eigen::Index>(angle_bus_.size()); }

    [[nodiscard]] Vector residual(const Vector& x, double lambda) const;
    [[nodiscard]] SparseMatrix jacobian(const Vector& x, double lambda) const;
    /// dG/dlambda, constant for constant-power loads.
    [[nodiscard]] Vector lambda_derivative() const;

    /// Scheduled net injection (pu) at bus position i.
    [[nodiscard]] std::complex<double> scheduled(std::size_t i, double lambda) const;
    /// Computed injection S_i = V_i conj((Y V)_i) for every bus (pu).
    [[nodiscard]] std::vector<std::complex<double>> injections(const BusVoltages& v) const;

  private:
    NetworkModel net_;
    LoadDirection dir_;
    std::optional<double> vb_;
    ComplexSparse y_;
    std::size_t slack_ = 0;
    std::vector<std::size_t> angle_bus_;
    std::vector<std::size_t> mag_bus_;
    std::vector<Eigen::Index> angle_pos_;  // bus -> index in x, -1 when not a state
    std::vector<Eigen::Index> mag_pos_;
};

/// Residual G(x, lambda); throws std::invalid_argument on dimension mismatch.
Vector mismatch(const PowerFlowProblem& problem, const Vector& x, double lambda);
SparseMatrix jacobian(const PowerFlowProblem& problem, const Vector& x, double lambda);

enum class SolveStatus { Converged, MaxIterations, Singular, Diverged };
std::string_view to_string(SolveStatus status);

struct SolveOptions {
    double tol = 1e-8;
    int max_iter = 30;
    std::optional<BusVoltages> initial;
    // Reserved; reactive limits are not modeled.
    bool enforce_q_limits = false;
};

struct PowerFlowSolution {
    BusVoltages voltages;
    double lambda = 0.0;
    std::optional<double> substation_vm;
    bool converged = false;
    SolveStatus status = SolveStatus::MaxIterations;
    int iterations = 0;
    double mismatch_norm = 0.0;  // pu, infinity norm
    std::string diagnostic;
};

PowerFlowSolution solve(const PowerFlowProblem& problem, double lambda, const SolveOptions& options = {});

/// Convenience overload building the problem with a proportional direction.
PowerFlowSolution solve(const NetworkModel& net, double lambda, const SolveOptions& options = {},
                        std::optional<double> substation_vm = {}, double direction_scale = 1.0);

struct BoundaryFlowEntry {
    int bus_id = 0;
    double p_mw = 0.0;    // S_BS, real part
    double q_mvar = 0.0;  // S_BS, imaginary part
    double feeder_load_mw = 0.0;
    double feeder_load_mvar = 0.0;
    double losses_mw = 0.0;
};

struct BoundaryFlow {
    std::vector<BoundaryFlowEntry> entries;
};

/// Power leaving each boundary bus into its feeders. Throws ModelError on a
/// non-integrated network and std::invalid_argument on an unconverged solution.
BoundaryFlow boundary_flows(const PowerFlowProblem& problem, const PowerFlowSolution& solution);

/// Complex power entering branch k at its from / to end (pu).
std::pair<std::complex<double>, std::complex<double>> branch_flow(const NetworkModel& net, std::size_t k,
                                                                  const BusVoltages& v);

/// Sum of series and shunt losses over all branches (MW).
double total_losses_mw(const NetworkModel& net, const BusVoltages& v);

nlohmann::json to_json(const PowerFlowSolution& solution, const NetworkModel& net);

}  // namespace tdvsa
