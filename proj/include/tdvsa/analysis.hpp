#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tdvsa/hypersurface.hpp"

namespace tdvsa {

enum class CaseLabel { A, B };
std::string_view to_string(CaseLabel label);

/// Outcome of superimposing a feeder hypersurface on the T-PV curve of its
/// boundary bus. Case A: the surface cuts the upper branch at lambda_cut, so
/// the feeder limits loadability. Case B: no cut, the transmission side limits.
struct Classification {
    CaseLabel label = CaseLabel::B;
    std::optional<double> lambda_cut;
    std::optional<double> v_cut;
    double lambda_t_max = 0.0;
    std::optional<double> lambda_td_max;

    /// Case A: lambda_td_max < lambda_cut < lambda_t_max. Case B:
    /// lambda_td_max <= lambda_t_max. Vacuously true without lambda_td_max
    /// for the parts that need it.
    [[nodiscard]] bool consistent() const;
};

/// Boundary voltage on the upper T-PV branch at a given lambda, if solvable.
using BoundaryVoltageFn = std::function<std::optional<double>(double lambda)>;

/// Warm-started re-solve of the transmission power flow between samples of
/// `t_curve`, reading the magnitude at `bus_id`.
BoundaryVoltageFn transmission_voltage_fn(const PowerFlowProblem& transmission, const PVCurve& t_curve, int bus_id);

/// Finds the smallest lambda on the upper branch where v_B(lambda) drops
/// below min_required_vb(h, lambda). Between samples v_B comes from `exact`
/// when given, otherwise from linear interpolation. Throws InfeasibleError
/// when the base case already lies below the surface.
Classification superimpose(const PVCurve& t_curve, const Hypersurface& h, const BoundaryVoltageFn& exact = {},
                           double tol = 1e-5);

struct TdVsaResult {
    PVCurve curve;
    double lambda_td_max = 0.0;
    BoundaryFlow base_flow;  // at lambda = 0
};

/// CPF on the integrated network, monitored at its (first) boundary bus.
TdVsaResult td_vsa(const NetworkModel& integrated, const LoadDirection& direction, const CpfOptions& options = {});

/// Sum of dp_load on `boundary_id` and every slave bus attached to it. This
/// is the MW growth per unit lambda seen at the boundary, the conversion base
/// for bus margins.
double boundary_direction_mw(const NetworkModel& net, const LoadDirection& direction, int boundary_id);

struct MarginEntry {
    std::string method;  // "T-VSA", "D-VSA", "TD-VSA"
    double lambda = 0.0;
    double mw = 0.0;
};

struct ScenarioDescriptor {
    std::string name;
    double der_fraction = 0.0;
    double der_mw = 0.0;
    double shed_mw = 0.0;
};

struct MarginReport {
    std::vector<MarginEntry> entries;
    double mw_base = 0.0;
    std::string mw_base_note;
    ScenarioDescriptor scenario;

    [[nodiscard]] const MarginEntry* find(std::string_view method) const;
};

/// MW margin = lambda * mw_base for every entry.
MarginReport margin_report(const std::vector<std::pair<std::string, double>>& lambdas, double mw_base,
                           ScenarioDescriptor scenario = {}, std::string mw_base_note = {});

/// Buses whose scalable loads are shed.
struct ShedRegion {
    std::vector<int> bus_ids;
    /// Every slave bus attached to `boundary_id`.
    static ShedRegion feeders_at(const NetworkModel& net, int boundary_id);
};

/// Reduces scalable loads in `region` pro-rata by `mw` in total at constant
/// power factor. Throws ModelError when `mw` exceeds the region's load.
NetworkModel apply_load_shed(const NetworkModel& net, const ShedRegion& region, double mw);

enum class DerMode { UnityPf };
DerMode parse_der_mode(std::string_view text);

/// Adds a fixed real injection of `penetration` x base load at every feeder
/// load bus. Reactive schedules are untouched (unity power factor).
NetworkModel apply_der(const NetworkModel& net, double penetration, DerMode mode = DerMode::UnityPf);

struct DerSweepOptions {
    double direction_scale = 1.0;
    CpfOptions cpf;
    int threads = 1;
};

/// One TD-VSA on the integrated network and one T-VSA on its aggregated
/// equivalent per penetration level. Margins use the gross boundary
/// direction MW as base.
std::vector<MarginReport> der_sweep(const NetworkModel& integrated, const std::vector<double>& penetrations,
                                    const DerSweepOptions& options = {});

struct CalibrationResult {
    double segment_length_mi = 0.0;
    double d_vsa_mw = 0.0;
    int iterations = 0;
};

/// Finds the common segment length for which the feeder's D-VSA margin at
/// `v_b` equals `target_mw` (bisection on log length).
CalibrationResult calibrate_feeder_length(FeederTemplate feeder, FeederConfig config, double target_mw,
                                          double direction_scale, double v_b = 1.0, const CpfOptions& cpf = {},
                                          double rel_tol = 1e-6);

nlohmann::json to_json(const Classification& c);
nlohmann::json to_json(const MarginReport& r);

}  // namespace tdvsa
