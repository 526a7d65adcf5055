#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tdvsa/analysis.hpp"

namespace tdvsa {

struct FeederSpec {
    FeederTemplate templ = FeederTemplate::D1;
    FeederConfig config;
    int copies = 1;
    ComposeOptions compose;
};

/// Parsed scenario file (schema 1). Calibration parameters are explicit;
/// nothing about the feeder is defaulted.
struct ScenarioConfig {
    std::string name;
    std::filesystem::path transmission_case;
    int boundary_bus = 0;
    std::optional<FeederSpec> feeder;
    double direction_scale = 1.0;
    std::vector<std::string> analyses;
    CpfOptions cpf;
    double vb_min = 0.5;
    double vb_max = 1.1;
    double vb_step = 0.01;
    double d_vsa_vb = 1.0;
    std::vector<double> der_levels;
    std::optional<double> shed_mw;
    std::optional<std::filesystem::path> output_dir;

    [[nodiscard]] bool wants(std::string_view analysis) const;
};

struct Diagnostic {
    std::string code;
    std::string message;
};

inline constexpr std::array<std::string_view, 7> kAnalyses{"t_vsa",       "d_vsa", "hypersurface", "td_vsa",
                                                           "superimpose", "shed",  "der_sweep"};

/// Schema and invariant checks without running any solver. An empty list
/// means the scenario is runnable. Throws ModelError if the file cannot be read.
std::vector<Diagnostic> validate_scenario(const std::filesystem::path& path);
std::vector<Diagnostic> validate_scenario(const nlohmann::json& j, const std::filesystem::path& base_dir);

/// Parses and validates; throws ScenarioError carrying the diagnostics.
ScenarioConfig load_scenario(const std::filesystem::path& path);
ScenarioConfig parse_scenario(const nlohmann::json& j, const std::filesystem::path& base_dir);

class ScenarioError : public ModelError {
  public:
    explicit ScenarioError(std::vector<Diagnostic> diagnostics);
    [[nodiscard]] const std::vector<Diagnostic>& diagnostics() const { return diagnostics_; }

  private:
    std::vector<Diagnostic> diagnostics_;
};

struct RunOptions {
    int threads = 1;
};

/// Everything a scenario run produces, before serialization.
struct ScenarioResult {
    std::string name;
    int boundary_bus = 0;
    double direction_scale = 1.0;
    double mw_base = 0.0;

    std::optional<PVCurve> t_curve;
    std::optional<DistributionMargin> d_vsa;
    std::optional<Hypersurface> hypersurface;
    std::optional<TdVsaResult> td;
    std::optional<Classification> classification;
    std::optional<double> per_feeder_mw_base;
    std::optional<double> shed_mw;
    std::optional<TdVsaResult> td_shed;
    std::optional<double> shed_mw_base;
    std::vector<MarginReport> der;

    [[nodiscard]] nlohmann::json report() const;
    /// Table I-IV style rendering; every number printed also appears in report().
    [[nodiscard]] std::string tables() const;
};

ScenarioResult run_scenario(const ScenarioConfig& config, const RunOptions& options = {});

/// Writes t_pv.csv, h_surface.csv, td_pv.csv, report.json and tables.txt
/// (curves only when computed).
void write_outputs(const ScenarioResult& result, const std::filesystem::path& out_dir);

/// Rounding applied to every number in report.json and tables.txt.
double round_lambda(double v);
double round_mw(double v);

}  // namespace tdvsa
