#pragma once

#include <complex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/SparseCore>
#include <nlohmann/json.hpp>

#include "tdvsa/errors.hpp"

namespace tdvsa {

enum class BusKind { Slack, Generator, Load, Boundary };
enum class NetworkKind { Transmission, Distribution, Integrated };
enum class Region { Master, Boundary, Slave };

std::string_view to_string(BusKind kind);
std::string_view to_string(NetworkKind kind);
std::string_view to_string(Region region);
BusKind parse_bus_kind(std::string_view text);
NetworkKind parse_network_kind(std::string_view text);
Region parse_region(std::string_view text);

struct Bus {
    int id = 0;
    BusKind kind = BusKind::Load;
    double base_kv = 1.0;
    double p_load = 0.0;  // MW at lambda = 0
    double q_load = 0.0;  // MVAr at lambda = 0
    double p_gen = 0.0;   // MW, scheduled dispatch on generator buses
    double v_setpoint = 1.0;
    bool scalable = true;
    // Fixed real injection (MW) that does not follow lambda. Used for DER.
    double p_der = 0.0;
};

struct Branch {
    int from = 0;
    int to = 0;
    double r = 0.0;  // pu
    double x = 0.0;  // pu
    double b = 0.0;  // pu total line charging
    double tap = 1.0;
};

/// Bus network with optional master/boundary/slave partition.
///
/// For integrated networks `region` and `attach` are parallel to `buses`:
/// `attach[i]` is the boundary bus id feeding slave bus i (or the bus's own id
/// for boundary buses, -1 for master buses), `feeder_copy[i]` is the feeder
/// replica index (-1 outside slave regions).
struct NetworkModel {
    std::string name;
    double base_mva = 100.0;
    NetworkKind kind = NetworkKind::Transmission;
    std::vector<Bus> buses;
    std::vector<Branch> branches;

    std::vector<Region> region;
    std::vector<int> attach;
    std::vector<int> feeder_copy;
    std::string feeder_template;
    int copies = 0;

    [[nodiscard]] std::size_t size() const { return buses.size(); }
    /// Position of bus `id` in `buses`; throws ModelError when absent.
    [[nodiscard]] std::size_t index_of(int id) const;
    [[nodiscard]] std::optional<std::size_t> find(int id) const;
    [[nodiscard]] std::size_t slack_index() const;
    [[nodiscard]] bool is_integrated() const { return kind == NetworkKind::Integrated; }
    [[nodiscard]] Region region_of(std::size_t i) const;

    [[nodiscard]] double total_load_mw() const;
    [[nodiscard]] double total_load_mvar() const;
};

/// Checks every structural invariant; throws ModelError with the first
/// violation found.
void validate(const NetworkModel& net);

/// Per-bus change of scheduled injection per unit lambda, in MW / MVAr.
/// S(lambda) = S0 + lambda * dS.
struct LoadDirection {
    std::vector<double> dp_load;
    std::vector<double> dq_load;
    std::vector<double> dp_gen;

    /// dS = scale * S0 on scalable loads, generators follow with the same
    /// factor on their base dispatch. scale = 1 gives S(lambda) = (1+lambda) S0.
    static LoadDirection proportional(const NetworkModel& net, double scale = 1.0);

    /// Sum of dp_load over the given bus positions.
    [[nodiscard]] double load_mw(const std::vector<std::size_t>& positions) const;
};

using ComplexSparse = Eigen::SparseMatrix<std::complex<double>>;

/// Bus admittance matrix in pu on net.base_mva, rows in bus order.
ComplexSparse build_ybus(const NetworkModel& net);

/// Standard WSCC 9-bus, 3-machine case (345 kV, 100 MVA base).
NetworkModel build_ieee9();

enum class FeederTemplate { D1, D2 };
FeederTemplate parse_feeder_template(std::string_view text);
std::string_view to_string(FeederTemplate t);

/// Series impedance per segment in ohm/mile for lines 1-2, 2-3, 3-4.
std::vector<std::complex<double>> feeder_impedance_per_mile(FeederTemplate t);

struct FeederConfig {
    std::vector<double> segment_lengths_mi{1.0, 1.0, 1.0};
    double base_kv = 4.16;
    double load_mw = 1.0;
    double load_mvar = 0.0;
    // Fraction of the feeder load placed at buses 2, 3 and 4.
    std::vector<double> load_shares{0.0, 0.0, 1.0};
    double base_mva = 100.0;
};

/// Four-bus radial feeder; bus 1 is the substation (slack).
NetworkModel build_feeder(FeederTemplate t, const FeederConfig& config);

struct ComposeOptions {
    double tolerance = 0.01;  // relative mismatch allowed between feeder load and replaced load
    bool auto_scale = false;  // rescale feeder loads so that copies * load matches exactly
};

/// Removes the aggregated load at `load_bus` and hangs `copies` replicas of
/// `feeder` from it. The feeder's slack bus merges into the boundary bus.
NetworkModel compose_td(const NetworkModel& transmission, int load_bus, const NetworkModel& feeder,
                        int copies, const ComposeOptions& options = {});

/// Positions of the slave buses attached to boundary bus `boundary_id`.
std::vector<std::size_t> slave_buses_of(const NetworkModel& net, int boundary_id);
/// Positions of the boundary buses of an integrated network.
std::vector<std::size_t> boundary_buses(const NetworkModel& net);

/// Transmission-only equivalent of an integrated network: each boundary bus
/// carries the summed load and DER injection of its feeders.
NetworkModel aggregate_equivalent(const NetworkModel& integrated);

nlohmann::json to_json(const NetworkModel& net);
NetworkModel network_from_json(const nlohmann::json& j);
NetworkModel load_network(const std::string& path);
void save_network(const NetworkModel& net, const std::string& path);

}  // namespace tdvsa
