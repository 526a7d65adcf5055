// tdvsa: run or validate a T/D voltage-stability scenario file.
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "tdvsa/scenario.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum Exit { Ok = 0, Other = 1, Schema = 2, Infeasible = 3, Stall = 4 };

json diagnostics_json(const std::vector<tdvsa::Diagnostic>& diags) {
    json arr = json::array();
    for (const auto& d : diags) arr.push_back({{"code", d.code}, {"message", d.message}});
    return arr;
}

int report_error(const std::string& kind, const std::string& message, int code, const std::optional<fs::path>& out,
                 const json& diagnostics = nullptr) {
    json err{{"error", kind}, {"message", message}, {"exit_code", code}};
    if (!diagnostics.is_null()) err["diagnostics"] = diagnostics;
    std::cerr << err.dump() << '\n';
    if (out) {
        std::error_code ec;
        fs::create_directories(*out, ec);
        std::ofstream(*out / "error.json") << err.dump(2) << '\n';
    }
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Transmission-distribution voltage stability analysis"};
    app.require_subcommand(1);

    std::string scenario;
    std::string out_flag;
    int threads = 1;
    bool seedless = false;
    app.add_option("--out", out_flag, "Output directory (overrides the scenario's output_dir)");
    app.add_option("--threads", threads, "Worker threads for hypersurface and sweeps")->check(CLI::PositiveNumber);
    app.add_flag("--seedless", seedless, "Reserved; the engine is deterministic");

    auto* run = app.add_subcommand("run", "Run every analysis requested by a scenario");
    run->add_option("scenario", scenario, "Scenario JSON file")->required();
    auto* validate = app.add_subcommand("validate", "Check a scenario without running solvers");
    validate->add_option("scenario", scenario, "Scenario JSON file")->required();
    for (auto* sub : {run, validate}) {
        sub->add_option("--out", out_flag, "Output directory");
        sub->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
        sub->add_flag("--seedless", seedless, "Reserved; the engine is deterministic");
    }

    CLI11_PARSE(app, argc, argv);

    std::optional<fs::path> out;
    if (!out_flag.empty()) out = fs::path(out_flag);

    if (validate->parsed()) {
        std::vector<tdvsa::Diagnostic> diags;
        try {
            diags = tdvsa::validate_scenario(fs::path(scenario));
        } catch (const std::exception& e) {
            return report_error("unreadable", e.what(), Other, out);
        }
        std::cout << diagnostics_json(diags).dump(2) << '\n';
        return diags.empty() ? Ok : Schema;
    }

    try {
        const auto config = tdvsa::load_scenario(fs::path(scenario));
        if (!out) out = config.output_dir.value_or(fs::path("out") / config.name);
        const auto result = tdvsa::run_scenario(config, {threads});
        tdvsa::write_outputs(result, *out);
        std::cout << result.tables();
        return Ok;
    } catch (const tdvsa::ScenarioError& e) {
        return report_error("schema", e.what(), Schema, out, diagnostics_json(e.diagnostics()));
    } catch (const tdvsa::InfeasibleError& e) {
        return report_error("infeasible", e.what(), Infeasible, out);
    } catch (const tdvsa::StallError& e) {
        return report_error("stall", e.what(), Stall, out);
    } catch (const tdvsa::ModelError& e) {
        return report_error("model", e.what(), Schema, out);
    } catch (const std::exception& e) {
        return report_error("internal", e.what(), Other, out);
    }
}
