#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "hannrx/scenario.hpp"

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

void emit_psd(const hannrx::ScenarioConfig& cfg, const std::filesystem::path& out_dir) {
    using namespace hannrx;
    const Numerology& num = cfg.desired;
    const std::size_t bin = num.first_data_bin + num.data_width / 2;
    const rvec rect(num.fft_size, 1.0);
    const HannWindow hann = hann_window(num.fft_size);
    const std::uint64_t seed = derive_seed(cfg.master_seed, "psd");
    const PsdCurve rect_curve = subcarrier_psd(num, bin, rect, 64, 8, seed);
    const PsdCurve hann_curve = subcarrier_psd(num, bin, hann.coefficients, 64, 8, seed);
    write_file(out_dir / "psd_curves.csv", psd_curves_csv(rect_curve, hann_curve));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Link-level simulator for Hann-windowed CP-OFDM reception"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "Monte Carlo BER/PSD/complexity run");
    std::string config_path, out_dir, preset_name;
    long long trials_override = -1, seed_override = -1;
    bool do_audit = false, psd_only = false;
    run->add_option("--config", config_path, "JSON scenario config");
    run->add_option("--out", out_dir, "output directory")->required();
    run->add_option("--trials", trials_override, "override trial count");
    run->add_option("--seed", seed_override, "override master seed");
    run->add_option("--preset", preset_name, "built-in scenario (paper-shape, paper-full)");
    run->add_flag("--audit", do_audit, "also emit the operation-count audit");
    run->add_flag("--psd-only", psd_only, "emit only the PSD curves and exit");

    CLI11_PARSE(app, argc, argv);

    try {
        hannrx::ScenarioConfig cfg;
        if (!preset_name.empty())
            cfg = hannrx::preset(preset_name);
        else if (!config_path.empty())
            cfg = hannrx::config_from_json(read_file(config_path));
        else
            throw std::runtime_error("provide --config or --preset");
        if (trials_override >= 0) cfg.trials = std::size_t(trials_override);
        if (seed_override >= 0) cfg.master_seed = std::uint64_t(seed_override);
        cfg.validate();

        std::filesystem::create_directories(out_dir);

        if (psd_only) {
            emit_psd(cfg, out_dir);
            std::cout << "wrote " << out_dir << "/psd_curves.csv\n";
            return 0;
        }

        const hannrx::RunResult result = hannrx::run_scenario(cfg, out_dir);
        emit_psd(cfg, out_dir);
        if (do_audit) {
            hannrx::AuditParams params;
            params.fft_size = cfg.desired.fft_size;
            params.data_width = cfg.desired.data_width;
            hannrx::OpCountReport report = hannrx::audit_opcounts(params);
            write_file(std::filesystem::path(out_dir) / "audit.csv", hannrx::audit_csv(report));
        }
        std::cout << "trials run: " << result.trials_run
                  << ", resumed: " << result.trials_resumed << "\n"
                  << "outputs in " << out_dir << "\n";
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
