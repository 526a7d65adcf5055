#include "tdvsa/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <fmt/format.h>

namespace tdvsa {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::set<std::string> kTopKeys{"schema",  "name",     "transmission_case", "boundary_bus", "feeder",
                                     "direction_scale", "analyses", "cpf", "hypersurface", "d_vsa_vb",
                                     "der_levels", "shed_mw", "output_dir"};
const std::set<std::string> kFeederKeys{"template", "segment_lengths_mi", "base_kv", "load_mw", "load_mvar",
                                        "load_shares", "copies", "auto_scale", "tolerance"};
const std::set<std::string> kCpfKeys{"initial_step",  "min_step",         "max_step",  "growth",
                                     "shrink",        "corrector_tol",    "switch_threshold",
                                     "max_steps",     "samples_past_nose"};
const std::set<std::string> kHyperKeys{"vb_min", "vb_max", "vb_step"};
const std::set<std::string> kNeedsFeeder{"d_vsa", "hypersurface", "td_vsa", "superimpose", "shed", "der_sweep"};

class Checker {
  public:
    std::vector<Diagnostic> diags;

    void add(std::string code, std::string message) { diags.push_back({std::move(code), std::move(message)}); }

    void keys(const json& obj, const std::set<std::string>& allowed, std::string_view where) {
        for (const auto& [key, _] : obj.items())
            if (!allowed.count(key)) add("unknown_field", fmt::format("{}: unknown field '{}'", where, key));
    }

    const json* field(const json& obj, const std::string& key, std::string_view where, bool required) {
        if (!obj.contains(key)) {
            if (required) add("missing_field", fmt::format("{}: missing required field '{}'", where, key));
            return nullptr;
        }
        return &obj.at(key);
    }

    std::optional<double> number(const json& obj, const std::string& key, std::string_view where, bool required,
                                 bool positive = false) {
        const auto* v = field(obj, key, where, required);
        if (!v) return std::nullopt;
        if (!v->is_number()) {
            add("type_error", fmt::format("{}.{}: expected a number", where, key));
            return std::nullopt;
        }
        const double d = v->get<double>();
        if (!std::isfinite(d) || (positive && !(d > 0.0))) {
            add("bad_value", fmt::format("{}.{}: expected a {}finite number", where, key, positive ? "positive " : ""));
            return std::nullopt;
        }
        return d;
    }

    std::optional<std::vector<double>> numbers(const json& obj, const std::string& key, std::string_view where,
                                               bool required) {
        const auto* v = field(obj, key, where, required);
        if (!v) return std::nullopt;
        if (!v->is_array()) {
            add("type_error", fmt::format("{}.{}: expected an array of numbers", where, key));
            return std::nullopt;
        }
        std::vector<double> out;
        for (const auto& e : *v) {
            if (!e.is_number()) {
                add("type_error", fmt::format("{}.{}: expected an array of numbers", where, key));
                return std::nullopt;
            }
            out.push_back(e.get<double>());
        }
        return out;
    }

    std::optional<std::string> string(const json& obj, const std::string& key, std::string_view where,
                                      bool required) {
        const auto* v = field(obj, key, where, required);
        if (!v) return std::nullopt;
        if (!v->is_string()) {
            add("type_error", fmt::format("{}.{}: expected a string", where, key));
            return std::nullopt;
        }
        return v->get<std::string>();
    }

    std::optional<long> integer(const json& obj, const std::string& key, std::string_view where, bool required) {
        const auto* v = field(obj, key, where, required);
        if (!v) return std::nullopt;
        if (!v->is_number_integer()) {
            add("type_error", fmt::format("{}.{}: expected an integer", where, key));
            return std::nullopt;
        }
        return v->get<long>();
    }

    std::optional<bool> boolean(const json& obj, const std::string& key, std::string_view where, bool required) {
        const auto* v = field(obj, key, where, required);
        if (!v) return std::nullopt;
        if (!v->is_boolean()) {
            add("type_error", fmt::format("{}.{}: expected true or false", where, key));
            return std::nullopt;
        }
        return v->get<bool>();
    }
};

// Parses into `cfg` while collecting diagnostics; `cfg` is only meaningful
// when no diagnostics were produced.
std::vector<Diagnostic> check(const json& j, const fs::path& base_dir, ScenarioConfig& cfg) {
    Checker c;
    if (!j.is_object()) {
        c.add("type_error", "scenario must be a JSON object");
        return c.diags;
    }
    c.keys(j, kTopKeys, "scenario");

    if (auto schema = c.integer(j, "schema", "scenario", true); schema && *schema != 1)
        c.add("schema_version", fmt::format("unsupported schema version {}; expected 1", *schema));
    if (auto name = c.string(j, "name", "scenario", true)) cfg.name = *name;
    if (auto scale = c.number(j, "direction_scale", "scenario", true, true)) cfg.direction_scale = *scale;
    if (auto vb = c.number(j, "d_vsa_vb", "scenario", false, true)) cfg.d_vsa_vb = *vb;
    if (auto out = c.string(j, "output_dir", "scenario", false)) cfg.output_dir = base_dir / *out;

    if (const auto* an = c.field(j, "analyses", "scenario", true)) {
        if (!an->is_array() || an->empty()) {
            c.add("type_error", "scenario.analyses: expected a non-empty array of analysis names");
        } else {
            for (const auto& a : *an) {
                if (!a.is_string()) {
                    c.add("type_error", "scenario.analyses: expected strings");
                    continue;
                }
                const auto name = a.get<std::string>();
                if (std::find(kAnalyses.begin(), kAnalyses.end(), name) == kAnalyses.end())
                    c.add("unknown_analysis", fmt::format("unknown analysis '{}'", name));
                else
                    cfg.analyses.push_back(name);
            }
        }
    }

    if (const auto* cp = c.field(j, "cpf", "scenario", false)) {
        if (!cp->is_object()) {
            c.add("type_error", "scenario.cpf: expected an object");
        } else {
            c.keys(*cp, kCpfKeys, "cpf");
            auto& o = cfg.cpf;
            if (auto v = c.number(*cp, "initial_step", "cpf", false, true)) o.initial_step = *v;
            if (auto v = c.number(*cp, "min_step", "cpf", false, true)) o.min_step = *v;
            if (auto v = c.number(*cp, "max_step", "cpf", false, true)) o.max_step = *v;
            if (auto v = c.number(*cp, "growth", "cpf", false, true)) o.growth = *v;
            if (auto v = c.number(*cp, "shrink", "cpf", false, true)) o.shrink = *v;
            if (auto v = c.number(*cp, "corrector_tol", "cpf", false, true)) o.corrector_tol = *v;
            if (auto v = c.number(*cp, "switch_threshold", "cpf", false, true)) o.switch_threshold = *v;
            if (auto v = c.integer(*cp, "max_steps", "cpf", false)) o.max_steps = static_cast<int>(*v);
            if (auto v = c.integer(*cp, "samples_past_nose", "cpf", false)) o.samples_past_nose = static_cast<int>(*v);
            try {
                o.check();
            } catch (const std::invalid_argument& e) {
                c.add("bad_value", fmt::format("cpf: {}", e.what()));
            }
        }
    }

    if (const auto* hs = c.field(j, "hypersurface", "scenario", false)) {
        if (!hs->is_object()) {
            c.add("type_error", "scenario.hypersurface: expected an object");
        } else {
            c.keys(*hs, kHyperKeys, "hypersurface");
            if (auto v = c.number(*hs, "vb_min", "hypersurface", false, true)) cfg.vb_min = *v;
            if (auto v = c.number(*hs, "vb_max", "hypersurface", false, true)) cfg.vb_max = *v;
            if (auto v = c.number(*hs, "vb_step", "hypersurface", false, true)) cfg.vb_step = *v;
            if (cfg.vb_max < cfg.vb_min) c.add("bad_value", "hypersurface: vb_max must not be below vb_min");
        }
    }

    if (auto levels = c.numbers(j, "der_levels", "scenario", false)) {
        cfg.der_levels = *levels;
        for (double p : *levels)
            if (!(p >= 0.0 && p <= 1.0)) c.add("bad_value", "der_levels: penetrations must be within [0, 1]");
        if (!std::is_sorted(levels->begin(), levels->end()))
            c.add("bad_value", "der_levels: penetrations must be sorted ascending");
    }
    if (auto shed = c.number(j, "shed_mw", "scenario", false)) {
        if (*shed < 0.0) c.add("bad_value", "shed_mw must be non-negative");
        cfg.shed_mw = *shed;
    }

    std::optional<NetworkModel> transmission;
    if (auto path = c.string(j, "transmission_case", "scenario", true)) {
        cfg.transmission_case = base_dir / *path;
        try {
            transmission = load_network(cfg.transmission_case.string());
            if (transmission->kind != NetworkKind::Transmission)
                c.add("bad_value", fmt::format("{} is not a transmission case", *path));
        } catch (const ModelError& e) {
            c.add("case_unreadable", e.what());
        }
    }
    if (auto bus = c.integer(j, "boundary_bus", "scenario", true)) {
        cfg.boundary_bus = static_cast<int>(*bus);
        if (transmission) {
            const auto pos = transmission->find(cfg.boundary_bus);
            if (!pos || transmission->buses[*pos].kind != BusKind::Load)
                c.add("bad_boundary_bus", fmt::format("bus {} is not a PQ bus of the transmission case", *bus));
        }
    }

    if (const auto* fd = c.field(j, "feeder", "scenario", false)) {
        if (!fd->is_object()) {
            c.add("type_error", "scenario.feeder: expected an object");
        } else {
            c.keys(*fd, kFeederKeys, "feeder");
            FeederSpec spec;
            if (auto t = c.string(*fd, "template", "feeder", true)) {
                try {
                    spec.templ = parse_feeder_template(*t);
                } catch (const ModelError& e) {
                    c.add("bad_value", e.what());
                }
            }
            if (auto v = c.numbers(*fd, "segment_lengths_mi", "feeder", true)) {
                spec.config.segment_lengths_mi = *v;
                if (v->size() != 3 || std::any_of(v->begin(), v->end(), [](double x) { return !(x > 0.0); }))
                    c.add("bad_value", "feeder.segment_lengths_mi: expected three positive lengths");
            }
            if (auto v = c.number(*fd, "base_kv", "feeder", true, true)) spec.config.base_kv = *v;
            if (auto v = c.number(*fd, "load_mw", "feeder", true, true)) spec.config.load_mw = *v;
            if (auto v = c.number(*fd, "load_mvar", "feeder", true)) spec.config.load_mvar = *v;
            if (auto v = c.numbers(*fd, "load_shares", "feeder", false)) {
                spec.config.load_shares = *v;
                double sum = 0.0;
                for (double x : *v) sum += x;
                if (v->size() != 3 || std::abs(sum - 1.0) > 1e-9)
                    c.add("bad_value", "feeder.load_shares: expected three shares summing to 1");
            }
            if (auto v = c.integer(*fd, "copies", "feeder", true)) {
                spec.copies = static_cast<int>(*v);
                if (*v < 1) c.add("bad_value", "feeder.copies must be at least 1");
            }
            if (auto v = c.boolean(*fd, "auto_scale", "feeder", false)) spec.compose.auto_scale = *v;
            if (auto v = c.number(*fd, "tolerance", "feeder", false, true)) spec.compose.tolerance = *v;
            if (transmission && c.diags.empty()) {
                const auto pos = transmission->find(cfg.boundary_bus);
                const double replaced = transmission->buses[*pos].p_load;
                const double supplied = spec.copies * spec.config.load_mw;
                if (!spec.compose.auto_scale &&
                    std::abs(supplied - replaced) > spec.compose.tolerance * std::max(replaced, 1e-9))
                    c.add("load_mismatch",
                          fmt::format("copies x feeder load = {} MW does not match the {} MW load at bus {} "
                                      "(tolerance {}, auto_scale off)",
                                      supplied, replaced, cfg.boundary_bus, spec.compose.tolerance));
            }
            cfg.feeder = spec;
        }
    }

    for (const auto& a : cfg.analyses) {
        if (kNeedsFeeder.count(a) && !j.contains("feeder"))
            c.add("missing_feeder", fmt::format("analysis '{}' needs a feeder section", a));
        if (a == "shed" && !cfg.shed_mw) c.add("missing_field", "analysis 'shed' needs shed_mw");
        if (a == "der_sweep" && cfg.der_levels.empty())
            c.add("missing_field", "analysis 'der_sweep' needs a non-empty der_levels list");
    }
    return c.diags;
}

json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ModelError(fmt::format("cannot read scenario '{}'", path.string()));
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ScenarioError({{"parse_error", fmt::format("{}: {}", path.string(), e.what())}});
    }
}

std::string join_diagnostics(const std::vector<Diagnostic>& d) {
    std::string s = "invalid scenario:";
    for (const auto& x : d) s += fmt::format(" [{}] {};", x.code, x.message);
    return s;
}

}  // namespace

bool ScenarioConfig::wants(std::string_view analysis) const {
    return std::find(analyses.begin(), analyses.end(), analysis) != analyses.end();
}

ScenarioError::ScenarioError(std::vector<Diagnostic> diagnostics)
    : ModelError(join_diagnostics(diagnostics)), diagnostics_(std::move(diagnostics)) {}

std::vector<Diagnostic> validate_scenario(const json& j, const fs::path& base_dir) {
    ScenarioConfig cfg;
    return check(j, base_dir, cfg);
}

std::vector<Diagnostic> validate_scenario(const fs::path& path) {
    try {
        return validate_scenario(read_json(path), path.parent_path());
    } catch (const ScenarioError& e) {
        return e.diagnostics();
    }
}

ScenarioConfig parse_scenario(const json& j, const fs::path& base_dir) {
    ScenarioConfig cfg;
    auto diags = check(j, base_dir, cfg);
    if (!diags.empty()) throw ScenarioError(std::move(diags));
    return cfg;
}

ScenarioConfig load_scenario(const fs::path& path) { return parse_scenario(read_json(path), path.parent_path()); }

double round_lambda(double v) { return std::round(v * 1e5) / 1e5; }
double round_mw(double v) { return std::round(v * 100.0) / 100.0; }

ScenarioResult run_scenario(const ScenarioConfig& config, const RunOptions& options) {
    ScenarioResult r;
    r.name = config.name;
    r.boundary_bus = config.boundary_bus;
    r.direction_scale = config.direction_scale;

    const auto transmission = load_network(config.transmission_case.string());
    const auto t_dir = LoadDirection::proportional(transmission, config.direction_scale);
    r.mw_base = t_dir.dp_load.at(transmission.index_of(config.boundary_bus));

    const bool need_t = config.wants("t_vsa") || config.wants("superimpose");
    std::optional<PowerFlowProblem> t_problem;
    if (need_t) {
        t_problem.emplace(transmission, t_dir);
        r.t_curve = trace_pv(*t_problem, config.boundary_bus, config.cpf);
        if (!r.t_curve->nose_found())
            throw StallError(fmt::format("T-VSA trace stopped before the nose ({})", to_string(r.t_curve->termination)));
    }
    if (!config.feeder) return r;

    const auto& spec = *config.feeder;
    const auto feeder = build_feeder(spec.templ, spec.config);
    const auto f_dir = LoadDirection::proportional(feeder, config.direction_scale);

    if (config.wants("d_vsa")) {
        r.d_vsa = d_vsa_margin(feeder, f_dir, config.d_vsa_vb, config.cpf);
        if (!r.d_vsa->curve.nose_found()) throw StallError("D-VSA trace stopped before the nose");
    }
    if (config.wants("hypersurface") || config.wants("superimpose")) {
        HypersurfaceOptions ho;
        ho.v_b_grid = HypersurfaceOptions::uniform_grid(config.vb_min, config.vb_max, config.vb_step);
        ho.cpf = config.cpf;
        ho.threads = options.threads;
        r.hypersurface = trace_hypersurface(feeder, f_dir, ho);
    }

    const bool need_td = config.wants("td_vsa") || config.wants("superimpose") || config.wants("shed");
    std::optional<NetworkModel> composed;
    if (need_td || config.wants("der_sweep"))
        composed = compose_td(transmission, config.boundary_bus, feeder, spec.copies, spec.compose);
    if (need_td) {
        const auto dir = LoadDirection::proportional(*composed, config.direction_scale);
        r.td = td_vsa(*composed, dir, config.cpf);
        if (!r.td->curve.nose_found()) throw StallError("TD-VSA trace stopped before the nose");
        r.per_feeder_mw_base = boundary_direction_mw(*composed, dir, config.boundary_bus) / spec.copies;
    }
    if (config.wants("superimpose")) {
        r.classification = superimpose(*r.t_curve, *r.hypersurface,
                                       transmission_voltage_fn(*t_problem, *r.t_curve, config.boundary_bus));
        if (r.td) r.classification->lambda_td_max = r.td->lambda_td_max;
    }
    if (config.wants("shed")) {
        r.shed_mw = *config.shed_mw;
        const auto shed = apply_load_shed(*composed, ShedRegion::feeders_at(*composed, config.boundary_bus),
                                          *config.shed_mw);
        const auto dir = LoadDirection::proportional(shed, config.direction_scale);
        r.td_shed = td_vsa(shed, dir, config.cpf);
        if (!r.td_shed->curve.nose_found()) throw StallError("TD-VSA trace after shedding stopped before the nose");
        r.shed_mw_base = boundary_direction_mw(shed, dir, config.boundary_bus);
    }
    if (config.wants("der_sweep")) {
        DerSweepOptions o;
        o.direction_scale = config.direction_scale;
        o.cpf = config.cpf;
        o.threads = options.threads;
        r.der = der_sweep(*composed, config.der_levels, o);
    }
    return r;
}

namespace {

json lam(double v) { return round_lambda(v); }
json mw(double v) { return round_mw(v); }
std::string num(const json& v) { return v.dump(); }

}  // namespace

json ScenarioResult::report() const {
    json j;
    j["scenario"] = name;
    j["schema"] = 1;
    j["boundary_bus"] = boundary_bus;
    j["direction_scale"] = direction_scale;
    j["mw_base"] = mw(mw_base);
    j["mw_base_note"] = "boundary-bus load growth per unit lambda (direction_scale x base MW)";
    if (t_curve)
        j["t_vsa"] = {{"lambda_max", lam(t_curve->lambda_max)},
                      {"mw", mw(t_curve->lambda_max * mw_base)},
                      {"v_nose", lam(t_curve->samples[t_curve->nose_index].v_monitored)},
                      {"termination", std::string(to_string(t_curve->termination))}};
    if (d_vsa)
        j["d_vsa"] = {{"v_b", d_vsa->curve.samples.front().voltages.vm.front()},
                      {"lambda_max", lam(d_vsa->lambda_max)},
                      {"mw", mw(d_vsa->mw)},
                      {"mw_base", mw(d_vsa->mw_base)}};
    if (hypersurface) {
        j["hypersurface"] = {{"feeder", hypersurface->feeder},
                             {"samples", hypersurface->samples.size()},
                             {"infeasible_points", hypersurface->infeasible_v_b.size()},
                             {"v_b_lowest_feasible", lam(hypersurface->samples.front().v_b)},
                             {"lambda_top", lam(hypersurface->lambda_top())}};
    }
    if (td) {
        const auto& f = td->base_flow.entries.front();
        j["td_vsa"] = {{"lambda_max", lam(td->lambda_td_max)},
                       {"mw", mw(td->lambda_td_max * mw_base)},
                       {"v_nose", lam(td->curve.samples[td->curve.nose_index].v_monitored)},
                       {"termination", std::string(to_string(td->curve.termination))},
                       {"base_boundary_flow",
                        {{"p_mw", mw(f.p_mw)}, {"q_mvar", mw(f.q_mvar)}, {"losses_mw", mw(f.losses_mw)}}}};
    }
    if (classification) j["classification"] = to_json(*classification);
    if (classification) {
        auto& c = j["classification"];
        c["lambda_t_max"] = lam(classification->lambda_t_max);
        if (classification->lambda_cut) c["lambda_cut"] = lam(*classification->lambda_cut);
        if (classification->v_cut) c["v_cut"] = lam(*classification->v_cut);
        if (classification->lambda_td_max) c["lambda_td_max"] = lam(*classification->lambda_td_max);
    }
    if (d_vsa && td && per_feeder_mw_base)
        j["feeder_margins"] = {{"d_vsa_mw", mw(d_vsa->mw)},
                               {"td_vsa_mw", mw(td->lambda_td_max * *per_feeder_mw_base)},
                               {"per_feeder_mw_base", mw(*per_feeder_mw_base)}};
    if (td_shed && td && shed_mw && shed_mw_base)
        j["load_shedding"] = {{"shed_mw", mw(*shed_mw)},
                              {"before_mw", mw(td->lambda_td_max * mw_base)},
                              {"after_mw", mw(td_shed->lambda_td_max * *shed_mw_base)},
                              {"lambda_after", lam(td_shed->lambda_td_max)},
                              {"mw_base_after", mw(*shed_mw_base)}};
    if (!der.empty()) {
        auto& arr = j["der_sweep"] = json::array();
        for (const auto& rep : der) {
            json e;
            e["der_pct"] = std::lround(rep.scenario.der_fraction * 100.0);
            e["der_mw"] = mw(rep.scenario.der_mw);
            e["mw_base"] = mw(rep.mw_base);
            for (const auto& m : rep.entries) e[m.method] = {{"lambda", lam(m.lambda)}, {"mw", mw(m.mw)}};
            arr.push_back(std::move(e));
        }
    }
    return j;
}

std::string ScenarioResult::tables() const {
    const auto j = report();
    std::string out = fmt::format("Scenario {}  (boundary bus {}, MW base {})\n\n", name, j["boundary_bus"].dump(),
                                  num(j["mw_base"]));
    if (j.contains("t_vsa") || j.contains("td_vsa")) {
        out += "Table I: load margin (MW) of the boundary bus\n";
        if (j.contains("t_vsa"))
            out += fmt::format("  {:<8} {:>10}  lambda {}\n", "T-VSA", num(j["t_vsa"]["mw"]),
                               num(j["t_vsa"]["lambda_max"]));
        if (j.contains("td_vsa"))
            out += fmt::format("  {:<8} {:>10}  lambda {}\n", "TD-VSA", num(j["td_vsa"]["mw"]),
                               num(j["td_vsa"]["lambda_max"]));
        out += '\n';
    }
    if (j.contains("classification")) {
        const auto& c = j["classification"];
        out += fmt::format("Superimposition: case {}", c["case"].get<std::string>());
        if (!c["lambda_cut"].is_null())
            out += fmt::format(", lambda_cut {} at v_B {}", num(c["lambda_cut"]), num(c["v_cut"]));
        out += "\n\n";
    }
    if (j.contains("feeder_margins") || j.contains("d_vsa")) {
        out += "Table II: feeder load margin (MW)\n";
        if (j.contains("d_vsa"))
            out += fmt::format("  {:<8} {:>10}  lambda {}\n", "D-VSA", num(j["d_vsa"]["mw"]),
                               num(j["d_vsa"]["lambda_max"]));
        if (j.contains("feeder_margins"))
            out += fmt::format("  {:<8} {:>10}\n", "TD-VSA", num(j["feeder_margins"]["td_vsa_mw"]));
        out += '\n';
    }
    if (j.contains("load_shedding")) {
        const auto& s = j["load_shedding"];
        out += fmt::format("Table III: TD-VSA load margin (MW), shedding {} MW\n", num(s["shed_mw"]));
        out += fmt::format("  {:<12} {:>10}\n  {:<12} {:>10}\n\n", "no shedding", num(s["before_mw"]), "shedding",
                           num(s["after_mw"]));
    }
    if (j.contains("der_sweep")) {
        out += "Table IV: load margin (MW) with DER at unity PF\n";
        out += fmt::format("  {:<8}", "DER %");
        for (const auto& e : j["der_sweep"]) out += fmt::format(" {:>8}", num(e["der_pct"]));
        out += fmt::format("\n  {:<8}", "T-VSA");
        for (const auto& e : j["der_sweep"]) out += fmt::format(" {:>8}", num(e["T-VSA"]["mw"]));
        out += fmt::format("\n  {:<8}", "TD-VSA");
        for (const auto& e : j["der_sweep"]) out += fmt::format(" {:>8}", num(e["TD-VSA"]["mw"]));
        out += '\n';
    }
    return out;
}

void write_outputs(const ScenarioResult& result, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    auto write = [&](const std::string& file, const std::string& content) {
        std::ofstream out(out_dir / file, std::ios::binary);
        if (!out) throw std::runtime_error(fmt::format("cannot write {}", (out_dir / file).string()));
        out << content;
    };
    if (result.t_curve) write("t_pv.csv", result.t_curve->to_csv());
    if (result.hypersurface) write("h_surface.csv", result.hypersurface->to_csv());
    if (result.td) write("td_pv.csv", result.td->curve.to_csv());
    write("report.json", result.report().dump(2) + "\n");
    write("tables.txt", result.tables());
}

}  // namespace tdvsa
