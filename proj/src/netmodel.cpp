#include "tdvsa/netmodel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numeric>
#include <queue>
#include <set>
#include <unordered_map>

#include <fmt/format.h>

namespace tdvsa {

namespace {

template <typename Enum, std::size_t N>
Enum parse_enum(std::string_view text, const std::array<std::pair<std::string_view, Enum>, N>& table,
                std::string_view what) {
    for (const auto& [name, value] : table)
        if (name == text) return value;
    throw ModelError(fmt::format("unknown {} '{}'", what, text));
}

constexpr std::array<std::pair<std::string_view, BusKind>, 4> kBusKinds{{
    {"slack", BusKind::Slack},
    {"pv", BusKind::Generator},
    {"pq", BusKind::Load},
    {"boundary", BusKind::Boundary},
}};
constexpr std::array<std::pair<std::string_view, NetworkKind>, 3> kNetworkKinds{{
    {"transmission", NetworkKind::Transmission},
    {"distribution", NetworkKind::Distribution},
    {"integrated", NetworkKind::Integrated},
}};
constexpr std::array<std::pair<std::string_view, Region>, 3> kRegions{{
    {"master", Region::Master},
    {"boundary", Region::Boundary},
    {"slave", Region::Slave},
}};

template <typename Enum, std::size_t N>
std::string_view name_of(Enum value, const std::array<std::pair<std::string_view, Enum>, N>& table) {
    for (const auto& [name, v] : table)
        if (v == value) return name;
    return "?";
}

}  // namespace

std::string_view to_string(BusKind kind) { return name_of(kind, kBusKinds); }
std::string_view to_string(NetworkKind kind) { return name_of(kind, kNetworkKinds); }
std::string_view to_string(Region region) { return name_of(region, kRegions); }
BusKind parse_bus_kind(std::string_view text) { return parse_enum(text, kBusKinds, "bus kind"); }
NetworkKind parse_network_kind(std::string_view text) { return parse_enum(text, kNetworkKinds, "network kind"); }
Region parse_region(std::string_view text) { return parse_enum(text, kRegions, "region"); }

std::optional<std::size_t> NetworkModel::find(int id) const {
    for (std::size_t i = 0; i < buses.size(); ++i)
        if (buses[i].id == id) return i;
    return std::nullopt;
}

std::size_t NetworkModel::index_of(int id) const {
    if (auto i = find(id)) return *i;
    throw ModelError(fmt::format("bus {} not found in network '{}'", id, name));
}

std::size_t NetworkModel::slack_index() const {
    for (std::size_t i = 0; i < buses.size(); ++i)
        if (buses[i].kind == BusKind::Slack) return i;
    throw ModelError(fmt::format("network '{}' has no slack bus", name));
}

Region NetworkModel::region_of(std::size_t i) const {
    if (region.empty()) return Region::Master;
    return region.at(i);
}

double NetworkModel::total_load_mw() const {
    return std::accumulate(buses.begin(), buses.end(), 0.0,
                           [](double acc, const Bus& b) { return acc + b.p_load; });
}

double NetworkModel::total_load_mvar() const {
    return std::accumulate(buses.begin(), buses.end(), 0.0,
                           [](double acc, const Bus& b) { return acc + b.q_load; });
}

void validate(const NetworkModel& net) {
    const auto n = net.buses.size();
    if (n == 0) throw ModelError(fmt::format("network '{}' has no buses", net.name));
    if (!(net.base_mva > 0.0)) throw ModelError("base_mva must be positive");

    std::set<int> ids;
    int slack_count = 0;
    for (const auto& bus : net.buses) {
        if (!ids.insert(bus.id).second) throw ModelError(fmt::format("duplicate bus id {}", bus.id));
        if (!(bus.base_kv > 0.0)) throw ModelError(fmt::format("bus {}: base_kv must be positive", bus.id));
        if (!std::isfinite(bus.p_load) || !std::isfinite(bus.q_load) || !std::isfinite(bus.p_gen) ||
            !std::isfinite(bus.p_der))
            throw ModelError(fmt::format("bus {}: non-finite injection", bus.id));
        if (!(bus.v_setpoint > 0.0)) throw ModelError(fmt::format("bus {}: v_setpoint must be positive", bus.id));
        if (bus.kind == BusKind::Slack) ++slack_count;
        if (bus.kind == BusKind::Boundary && !net.is_integrated())
            throw ModelError(fmt::format("bus {}: boundary buses only exist in integrated networks", bus.id));
    }
    if (slack_count != 1)
        throw ModelError(fmt::format("network '{}' must have exactly one slack bus, found {}", net.name, slack_count));

    std::vector<std::vector<std::size_t>> adj(n);
    for (const auto& br : net.branches) {
        if (br.from == br.to) throw ModelError(fmt::format("branch {}-{}: self loop", br.from, br.to));
        if (br.r < 0.0) throw ModelError(fmt::format("branch {}-{}: negative resistance", br.from, br.to));
        if (br.r == 0.0 && br.x == 0.0)
            throw ModelError(fmt::format("branch {}-{}: zero impedance", br.from, br.to));
        if (!(br.tap > 0.0)) throw ModelError(fmt::format("branch {}-{}: tap must be positive", br.from, br.to));
        const auto f = net.find(br.from);
        const auto t = net.find(br.to);
        if (!f || !t) throw ModelError(fmt::format("branch {}-{}: unknown bus", br.from, br.to));
        adj[*f].push_back(*t);
        adj[*t].push_back(*f);
    }

    std::vector<bool> seen(n, false);
    std::queue<std::size_t> queue;
    queue.push(net.slack_index());
    seen[net.slack_index()] = true;
    while (!queue.empty()) {
        const auto i = queue.front();
        queue.pop();
        for (auto j : adj[i])
            if (!seen[j]) {
                seen[j] = true;
                queue.push(j);
            }
    }
    for (std::size_t i = 0; i < n; ++i)
        if (!seen[i]) throw ModelError(fmt::format("bus {} is not reachable from the slack bus", net.buses[i].id));

    if (!net.is_integrated()) return;

    if (net.region.size() != n || net.attach.size() != n || net.feeder_copy.size() != n)
        throw ModelError("integrated network needs region/attach tags for every bus");
    for (std::size_t i = 0; i < n; ++i) {
        const bool boundary_kind = net.buses[i].kind == BusKind::Boundary;
        if (boundary_kind != (net.region[i] == Region::Boundary))
            throw ModelError(fmt::format("bus {}: boundary kind and region tag disagree", net.buses[i].id));
        if (net.region[i] == Region::Slave) {
            const auto b = net.find(net.attach[i]);
            if (!b || net.region[*b] != Region::Boundary)
                throw ModelError(fmt::format("slave bus {} is not attached to a boundary bus", net.buses[i].id));
        }
    }
    // Each slave component (slave buses connected through slave-slave
    // branches) touches exactly one boundary bus.
    std::vector<std::size_t> comp(n, n);
    std::size_t comp_count = 0;
    for (std::size_t s = 0; s < n; ++s) {
        if (net.region[s] != Region::Slave || comp[s] != n) continue;
        comp[s] = comp_count;
        queue.push(s);
        while (!queue.empty()) {
            const auto i = queue.front();
            queue.pop();
            for (auto j : adj[i])
                if (net.region[j] == Region::Slave && comp[j] == n) {
                    comp[j] = comp_count;
                    queue.push(j);
                }
        }
        ++comp_count;
    }
    std::vector<std::set<std::size_t>> touches(comp_count);
    for (const auto& br : net.branches) {
        const auto f = net.index_of(br.from);
        const auto t = net.index_of(br.to);
        const auto rf = net.region[f];
        const auto rt = net.region[t];
        if ((rf == Region::Slave && rt == Region::Master) || (rf == Region::Master && rt == Region::Slave))
            throw ModelError(fmt::format("branch {}-{} joins master and slave regions directly", br.from, br.to));
        if (rf == Region::Slave && rt == Region::Boundary) touches[comp[f]].insert(t);
        if (rt == Region::Slave && rf == Region::Boundary) touches[comp[t]].insert(f);
    }
    for (std::size_t c = 0; c < comp_count; ++c)
        if (touches[c].size() != 1)
            throw ModelError(fmt::format("slave component {} attaches to {} boundary buses", c, touches[c].size()));
}

LoadDirection LoadDirection::proportional(const NetworkModel& net, double scale) {
    LoadDirection dir;
    const auto n = net.size();
    dir.dp_load.assign(n, 0.0);
    dir.dq_load.assign(n, 0.0);
    dir.dp_gen.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& bus = net.buses[i];
        if (bus.scalable) {
            dir.dp_load[i] = scale * bus.p_load;
            dir.dq_load[i] = scale * bus.q_load;
        }
        if (bus.kind == BusKind::Generator) dir.dp_gen[i] = scale * bus.p_gen;
    }
    return dir;
}

double LoadDirection::load_mw(const std::vector<std::size_t>& positions) const {
    double total = 0.0;
    for (auto i : positions) total += dp_load.at(i);
    return total;
}

ComplexSparse build_ybus(const NetworkModel& net) {
    using cd = std::complex<double>;
    const auto n = static_cast<Eigen::Index>(net.size());
    std::unordered_map<int, Eigen::Index> pos;
    for (Eigen::Index i = 0; i < n; ++i) pos[net.buses[static_cast<std::size_t>(i)].id] = i;

    std::vector<Eigen::Triplet<cd>> triplets;
    triplets.reserve(net.branches.size() * 4);
    for (const auto& br : net.branches) {
        if (br.r == 0.0 && br.x == 0.0)
            throw ModelError(fmt::format("branch {}-{}: zero impedance cannot be inverted", br.from, br.to));
        const auto fi = pos.find(br.from);
        const auto ti = pos.find(br.to);
        if (fi == pos.end() || ti == pos.end())
            throw ModelError(fmt::format("branch {}-{}: unknown bus", br.from, br.to));
        const cd ys = 1.0 / cd(br.r, br.x);
        const cd ysh(0.0, br.b / 2.0);
        const double t = br.tap;
        triplets.emplace_back(fi->second, fi->second, (ys + ysh) / (t * t));
        triplets.emplace_back(ti->second, ti->second, ys + ysh);
        triplets.emplace_back(fi->second, ti->second, -ys / t);
        triplets.emplace_back(ti->second, fi->second, -ys / t);
    }
    ComplexSparse y(n, n);
    y.setFromTriplets(triplets.begin(), triplets.end());
    y.makeCompressed();
    return y;
}

NetworkModel build_ieee9() {
    NetworkModel net;
    net.name = "ieee9";
    net.base_mva = 100.0;
    net.kind = NetworkKind::Transmission;
    auto bus = [](int id, BusKind kind, double pd, double qd, double pg, double v) {
        return Bus{id, kind, 345.0, pd, qd, pg, v, true, 0.0};
    };
    net.buses = {
        bus(1, BusKind::Slack, 0, 0, 72.3, 1.0),   bus(2, BusKind::Generator, 0, 0, 163, 1.0),
        bus(3, BusKind::Generator, 0, 0, 85, 1.0), bus(4, BusKind::Load, 0, 0, 0, 1.0),
        bus(5, BusKind::Load, 90, 30, 0, 1.0),     bus(6, BusKind::Load, 0, 0, 0, 1.0),
        bus(7, BusKind::Load, 100, 35, 0, 1.0),    bus(8, BusKind::Load, 0, 0, 0, 1.0),
        bus(9, BusKind::Load, 125, 50, 0, 1.0),
    };
    net.branches = {
        {1, 4, 0.0, 0.0576, 0.0, 1.0},      {4, 5, 0.017, 0.092, 0.158, 1.0},  {5, 6, 0.039, 0.17, 0.358, 1.0},
        {3, 6, 0.0, 0.0586, 0.0, 1.0},      {6, 7, 0.0119, 0.1008, 0.209, 1.0}, {7, 8, 0.0085, 0.072, 0.149, 1.0},
        {8, 2, 0.0, 0.0625, 0.0, 1.0},      {8, 9, 0.032, 0.161, 0.306, 1.0},  {9, 4, 0.01, 0.085, 0.176, 1.0},
    };
    return net;
}

FeederTemplate parse_feeder_template(std::string_view text) {
    if (text == "D1" || text == "d1") return FeederTemplate::D1;
    if (text == "D2" || text == "d2") return FeederTemplate::D2;
    throw ModelError(fmt::format("unknown feeder template '{}'", text));
}

std::string_view to_string(FeederTemplate t) { return t == FeederTemplate::D1 ? "D1" : "D2"; }

std::vector<std::complex<double>> feeder_impedance_per_mile(FeederTemplate t) {
    if (t == FeederTemplate::D1) return {{0.45, 1.07}, {0.45, 1.07}, {0.45, 1.07}};
    return {{0.36, 0.53}, {0.36, 0.32}, {0.36, 0.64}};
}

NetworkModel build_feeder(FeederTemplate t, const FeederConfig& config) {
    const auto z_mile = feeder_impedance_per_mile(t);
    if (config.segment_lengths_mi.size() != z_mile.size())
        throw ModelError(fmt::format("feeder needs {} segment lengths", z_mile.size()));
    if (config.load_shares.size() != 3) throw ModelError("feeder needs 3 load shares (buses 2, 3, 4)");
    for (double len : config.segment_lengths_mi)
        if (!(len > 0.0)) throw ModelError("feeder segment lengths must be positive");
    if (!(config.base_kv > 0.0) || !(config.base_mva > 0.0)) throw ModelError("feeder bases must be positive");
    if (config.load_mw < 0.0) throw ModelError("feeder load must be non-negative");
    const double share_sum = std::accumulate(config.load_shares.begin(), config.load_shares.end(), 0.0);
    if (std::abs(share_sum - 1.0) > 1e-9) throw ModelError("feeder load shares must sum to 1");

    NetworkModel net;
    net.name = std::string(to_string(t));
    net.base_mva = config.base_mva;
    net.kind = NetworkKind::Distribution;
    const double z_base = config.base_kv * config.base_kv / config.base_mva;
    net.buses.push_back(Bus{1, BusKind::Slack, config.base_kv, 0, 0, 0, 1.0, false, 0.0});
    for (int k = 0; k < 3; ++k) {
        const double share = config.load_shares[static_cast<std::size_t>(k)];
        net.buses.push_back(
            Bus{k + 2, BusKind::Load, config.base_kv, share * config.load_mw, share * config.load_mvar, 0, 1.0, true, 0.0});
    }
    for (std::size_t k = 0; k < z_mile.size(); ++k) {
        const auto z = z_mile[k] * config.segment_lengths_mi[k] / z_base;
        net.branches.push_back(Branch{static_cast<int>(k) + 1, static_cast<int>(k) + 2, z.real(), z.imag(), 0.0, 1.0});
    }
    return net;
}

NetworkModel compose_td(const NetworkModel& transmission, int load_bus, const NetworkModel& feeder, int copies,
                        const ComposeOptions& options) {
    if (copies < 1) throw ModelError("copies must be at least 1");
    if (transmission.kind != NetworkKind::Transmission) throw ModelError("compose_td needs a transmission network");
    if (feeder.kind != NetworkKind::Distribution) throw ModelError("compose_td needs a distribution feeder");
    validate(transmission);
    validate(feeder);
    const auto lb = transmission.index_of(load_bus);
    if (transmission.buses[lb].kind != BusKind::Load)
        throw ModelError(fmt::format("bus {} is not a PQ load bus", load_bus));
    if (std::abs(feeder.base_mva - transmission.base_mva) > 1e-9)
        throw ModelError("feeder and transmission base_mva differ");

    const double replaced = transmission.buses[lb].p_load;
    const double feeder_load = feeder.total_load_mw() * copies;
    double scale = 1.0;
    if (std::abs(feeder_load - replaced) > options.tolerance * std::max(std::abs(replaced), 1e-9)) {
        if (!options.auto_scale || feeder_load <= 0.0)
            throw ModelError(fmt::format("copies x feeder load = {:.4f} MW does not match the {:.4f} MW load at bus {}",
                                         feeder_load, replaced, load_bus));
    }
    if (options.auto_scale && feeder_load > 0.0) scale = replaced / feeder_load;

    NetworkModel net = transmission;
    net.name = fmt::format("{}+{}x{}", transmission.name, copies, feeder.name);
    net.kind = NetworkKind::Integrated;
    net.feeder_template = feeder.name;
    net.copies = copies;
    const auto n_t = transmission.size();
    net.region.assign(n_t, Region::Master);
    net.attach.assign(n_t, -1);
    net.feeder_copy.assign(n_t, -1);
    auto& boundary = net.buses[lb];
    boundary.kind = BusKind::Boundary;
    boundary.p_load = 0.0;
    boundary.q_load = 0.0;
    net.region[lb] = Region::Boundary;
    net.attach[lb] = load_bus;

    int next_id = 0;
    for (const auto& b : transmission.buses) next_id = std::max(next_id, b.id);
    // Keep feeder ids readable: start at the next multiple of 100.
    next_id = (next_id / 100 + 1) * 100;

    const auto sub = feeder.slack_index();
    const int sub_id = feeder.buses[sub].id;
    for (int c = 0; c < copies; ++c) {
        std::unordered_map<int, int> remap;
        remap[sub_id] = load_bus;
        for (std::size_t i = 0; i < feeder.size(); ++i) {
            if (i == sub) continue;
            Bus b = feeder.buses[i];
            remap[b.id] = next_id;
            b.id = next_id++;
            b.p_load *= scale;
            b.q_load *= scale;
            if (b.kind == BusKind::Slack) throw ModelError("feeder has more than one slack bus");
            net.buses.push_back(b);
            net.region.push_back(Region::Slave);
            net.attach.push_back(load_bus);
            net.feeder_copy.push_back(c);
        }
        for (auto br : feeder.branches) {
            br.from = remap.at(br.from);
            br.to = remap.at(br.to);
            net.branches.push_back(br);
        }
    }
    validate(net);
    return net;
}

std::vector<std::size_t> slave_buses_of(const NetworkModel& net, int boundary_id) {
    std::vector<std::size_t> out;
    if (!net.is_integrated()) return out;
    for (std::size_t i = 0; i < net.size(); ++i)
        if (net.region[i] == Region::Slave && net.attach[i] == boundary_id) out.push_back(i);
    return out;
}

std::vector<std::size_t> boundary_buses(const NetworkModel& net) {
    std::vector<std::size_t> out;
    if (!net.is_integrated()) return out;
    for (std::size_t i = 0; i < net.size(); ++i)
        if (net.region[i] == Region::Boundary) out.push_back(i);
    return out;
}

NetworkModel aggregate_equivalent(const NetworkModel& integrated) {
    if (!integrated.is_integrated()) throw ModelError("aggregate_equivalent needs an integrated network");
    NetworkModel net;
    net.name = integrated.name + ":aggregated";
    net.base_mva = integrated.base_mva;
    net.kind = NetworkKind::Transmission;
    std::set<int> kept;
    for (std::size_t i = 0; i < integrated.size(); ++i) {
        if (integrated.region[i] == Region::Slave) continue;
        Bus b = integrated.buses[i];
        if (integrated.region[i] == Region::Boundary) {
            b.kind = BusKind::Load;
            for (auto s : slave_buses_of(integrated, b.id)) {
                const auto& sb = integrated.buses[s];
                b.p_load += sb.p_load;
                b.q_load += sb.q_load;
                b.p_der += sb.p_der;
            }
        }
        kept.insert(b.id);
        net.buses.push_back(b);
    }
    for (const auto& br : integrated.branches)
        if (kept.count(br.from) && kept.count(br.to)) net.branches.push_back(br);
    return net;
}

nlohmann::json to_json(const NetworkModel& net) {
    nlohmann::json j;
    j["base_mva"] = net.base_mva;
    j["kind"] = std::string(to_string(net.kind));
    if (!net.name.empty()) j["name"] = net.name;
    if (net.is_integrated()) {
        j["feeder_template"] = net.feeder_template;
        j["copies"] = net.copies;
    }
    auto& buses = j["buses"] = nlohmann::json::array();
    for (std::size_t i = 0; i < net.size(); ++i) {
        const auto& b = net.buses[i];
        nlohmann::json jb{{"id", b.id},         {"kind", std::string(to_string(b.kind))},
                          {"base_kv", b.base_kv}, {"p_load", b.p_load},
                          {"q_load", b.q_load},   {"p_gen", b.p_gen},
                          {"v_setpoint", b.v_setpoint}, {"scalable", b.scalable}};
        if (b.p_der != 0.0) jb["p_der"] = b.p_der;
        if (net.is_integrated()) {
            jb["region"] = std::string(to_string(net.region[i]));
            jb["attach"] = net.attach[i];
            jb["feeder"] = net.feeder_copy[i];
        }
        buses.push_back(std::move(jb));
    }
    auto& branches = j["branches"] = nlohmann::json::array();
    for (const auto& br : net.branches)
        branches.push_back({{"from", br.from}, {"to", br.to}, {"r", br.r}, {"x", br.x}, {"b", br.b}, {"tap", br.tap}});
    return j;
}

NetworkModel network_from_json(const nlohmann::json& j) {
    try {
        NetworkModel net;
        net.base_mva = j.at("base_mva").get<double>();
        net.kind = parse_network_kind(j.at("kind").get<std::string>());
        net.name = j.value("name", std::string{});
        net.feeder_template = j.value("feeder_template", std::string{});
        net.copies = j.value("copies", 0);
        for (const auto& jb : j.at("buses")) {
            Bus b;
            b.id = jb.at("id").get<int>();
            b.kind = parse_bus_kind(jb.at("kind").get<std::string>());
            b.base_kv = jb.at("base_kv").get<double>();
            b.p_load = jb.at("p_load").get<double>();
            b.q_load = jb.at("q_load").get<double>();
            b.p_gen = jb.at("p_gen").get<double>();
            b.v_setpoint = jb.at("v_setpoint").get<double>();
            b.scalable = jb.at("scalable").get<bool>();
            b.p_der = jb.value("p_der", 0.0);
            net.buses.push_back(b);
            if (net.is_integrated()) {
                net.region.push_back(parse_region(jb.at("region").get<std::string>()));
                net.attach.push_back(jb.at("attach").get<int>());
                net.feeder_copy.push_back(jb.at("feeder").get<int>());
            }
        }
        for (const auto& jb : j.at("branches")) {
            Branch br;
            br.from = jb.at("from").get<int>();
            br.to = jb.at("to").get<int>();
            br.r = jb.at("r").get<double>();
            br.x = jb.at("x").get<double>();
            br.b = jb.value("b", 0.0);
            br.tap = jb.value("tap", 1.0);
            net.branches.push_back(br);
        }
        validate(net);
        return net;
    } catch (const nlohmann::json::exception& e) {
        throw ModelError(fmt::format("invalid network case: {}", e.what()));
    }
}

NetworkModel load_network(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ModelError(fmt::format("cannot open network case '{}'", path));
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ModelError(fmt::format("{}: {}", path, e.what()));
    }
    auto net = network_from_json(j);
    if (net.name.empty()) net.name = path;
    return net;
}

void save_network(const NetworkModel& net, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ModelError(fmt::format("cannot write '{}'", path));
    out << to_json(net).dump(2) << '\n';
}

}  // namespace tdvsa
