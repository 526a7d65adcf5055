// Calibrates the common segment length of a feeder template so that its
// D-VSA margin at a given substation voltage hits a target MW value.
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "tdvsa/analysis.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Feeder length calibration against a D-VSA target"};
    std::string templ = "D1";
    double load_mw = 9.0, load_mvar = 3.0, target = 13.0, scale = 1.5, vb = 1.0, base_kv = 4.16;
    std::string feeder_out;
    app.add_option("--template", templ, "Feeder template (D1 or D2)");
    app.add_option("--load-mw", load_mw, "Per-feeder real load, MW");
    app.add_option("--load-mvar", load_mvar, "Per-feeder reactive load, Mvar");
    app.add_option("--base-kv", base_kv, "Feeder base voltage, kV");
    app.add_option("--target-mw", target, "D-VSA margin to hit, MW")->required();
    app.add_option("--direction-scale", scale, "Load growth per unit lambda, as a multiple of base load");
    app.add_option("--vb", vb, "Substation voltage, pu");
    app.add_option("--feeder-out", feeder_out, "Write the calibrated feeder case here");
    CLI11_PARSE(app, argc, argv);

    try {
        tdvsa::FeederConfig cfg;
        cfg.load_mw = load_mw;
        cfg.load_mvar = load_mvar;
        cfg.base_kv = base_kv;
        const auto t = tdvsa::parse_feeder_template(templ);
        const auto r = tdvsa::calibrate_feeder_length(t, cfg, target, scale, vb);
        nlohmann::json j{{"template", templ},
                         {"segment_length_mi", r.segment_length_mi},
                         {"d_vsa_mw", r.d_vsa_mw},
                         {"iterations", r.iterations}};
        std::cout << j.dump(2) << '\n';
        if (!feeder_out.empty()) {
            cfg.segment_lengths_mi.assign(3, r.segment_length_mi);
            tdvsa::save_network(tdvsa::build_feeder(t, cfg), feeder_out);
        }
    } catch (const std::exception& e) {
        std::cerr << e.what() << '\n';
        return 1;
    }
    return 0;
}
