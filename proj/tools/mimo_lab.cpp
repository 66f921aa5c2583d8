#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include <mimolab/harness/config.hpp>
#include <mimolab/harness/plot.hpp>
#include <mimolab/harness/runner.hpp>
#include <mimolab/harness/selftest.hpp>
#include <mimolab/harness/table.hpp>

namespace {

enum exit_code { ok = 0, config_failure = 1, numerical_failure = 2, selftest_failure = 3 };

namespace h = mimolab::harness;

int run_command(const std::string& config_path, const std::optional<std::string>& exp, const std::optional<std::string>& snr,
                const std::optional<std::string>& rho, const std::optional<int>& trials,
                const std::optional<std::uint64_t>& seed, const std::optional<std::string>& out) {
    h::experiment_config cfg;
    try {
        cfg = h::load_config(config_path);
        if (exp) cfg.experiment = h::parse_experiment(*exp);
        if (snr) cfg.snr_db = h::parse_sweep(*snr);
        if (rho) cfg.rho = h::parse_sweep(*rho);
        if (trials) cfg.trials = *trials;
        if (seed) cfg.seed = *seed;
        if (out) cfg.output_dir = *out;
        h::validate(cfg);
    } catch (const mimolab::config_error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return config_failure;
    }
    if (cfg.experiment == h::experiment_kind::selftest) return h::run_selftest(std::cout) ? ok : selftest_failure;

    const auto rep = h::run_experiment(cfg);
    try {
        const auto paths = h::write_outputs(cfg, rep.rows);
        std::cout << "wrote " << paths.csv << '\n';
        if (!paths.svg.empty()) std::cout << "wrote " << paths.svg << '\n';
    } catch (const mimolab::config_error& e) {
        std::cerr << "output error: " << e.what() << '\n';
        return config_failure;
    }
    if (rep.failed > 0) {
        std::cerr << rep.failed << " row(s) failed; see the .meta.json sidecar\n";
        return numerical_failure;
    }
    return ok;
}

int plot_command(const std::string& csv) {
    try {
        const auto rows = h::read_csv(csv);
        const std::string stem = std::filesystem::path(csv).replace_extension().string();
        const auto files = h::emit_plot(rows, h::style_for(rows, std::filesystem::path(csv).filename().string()),
                                        std::filesystem::path(csv).stem().string());
        h::write_text(stem + ".svg", files.svg);
        h::write_text(stem + ".gp", files.script);
        std::cout << "wrote " << stem << ".svg\n";
    } catch (const mimolab::config_error& e) {
        std::cerr << "plot error: " << e.what() << '\n';
        return config_failure;
    }
    return ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mimo-lab: replica analysis and demodulation of Kronecker MIMO channels"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "run an experiment from a config file");
    std::string config_path;
    std::optional<std::string> exp, snr, rho, out;
    std::optional<int> trials;
    std::optional<std::uint64_t> seed;
    run->add_option("--config", config_path, "JSON config with flat keys")->required();
    run->add_option("--experiment", exp, "entropy_vs_snr | entropy_vs_rho | ber_vs_snr | ber_vs_rho | selftest");
    run->add_option("--snr-db", snr, "SNR grid a:b:step (dB)");
    run->add_option("--rho", rho, "correlation grid a:b:step");
    run->add_option("--trials", trials, "trials per point");
    run->add_option("--seed", seed, "master seed");
    run->add_option("--out", out, "output directory");

    auto* selftest = app.add_subcommand("selftest", "run the invariant checks");

    auto* plot = app.add_subcommand("plot", "render a result CSV to SVG and a gnuplot script");
    std::string csv;
    plot->add_option("csv", csv, "result CSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? ok : config_failure;
    }

    if (*run) return run_command(config_path, exp, snr, rho, trials, seed, out);
    if (*selftest) return h::run_selftest(std::cout) ? ok : selftest_failure;
    if (*plot) return plot_command(csv);
    return config_failure;
}
