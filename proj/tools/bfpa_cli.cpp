// Batch experiment runner and table exporter for the bfpa library.
//
// Exit codes: 0 success, 2 config error, 3 runtime error.

#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "bfpa/bfpa.hpp"

namespace {

int cmd_run(const std::string& config, const std::string& output_override, int workers,
            long long seed_override, bool verbose) {
    bfpa::Scenario sc;
    try {
        sc = bfpa::parse_scenario(config);
    } catch (const bfpa::ConfigError& e) {
        std::cerr << "config error in " << config << ": " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }
    if (!output_override.empty()) sc.output_dir = output_override;
    if (seed_override >= 0) sc.seed = static_cast<std::uint64_t>(seed_override);
    try {
        const int failures =
            bfpa::run_scenario(sc, config, workers, verbose ? &std::cerr : nullptr);
        if (failures > 0) {
            std::cerr << failures << " curve(s) failed; see summary.txt\n";
            return 3;
        }
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}

int cmd_dump(const std::string& constellation, const std::string& decoder, double beta_db,
             const std::string& out_file, int workers) {
    try {
        const double cap = std::pow(10.0, beta_db / 10.0);
        bfpa::MiProfile profile;
        if (constellation == "gaussian") {
            profile = bfpa::MiProfile::gaussian_input();
        } else {
            const auto c = bfpa::make_constellation(constellation);
            const auto dec = decoder == "bicm" ? bfpa::Decoder::bicm : bfpa::Decoder::cm;
            profile = bfpa::MiProfile::get_cached(c, dec, bfpa::MiProfile::default_cache_dir(), {},
                                                  32, workers);
        }
        if (out_file.empty() || out_file == "-") {
            bfpa::dump_tables(profile, cap, std::cout);
        } else {
            std::ofstream os(out_file, std::ios::binary | std::ios::trunc);
            if (!os) throw std::runtime_error("cannot write " + out_file);
            bfpa::dump_tables(profile, cap, os);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Outage-minimizing power allocation experiments"};
    app.require_subcommand(1);

    std::string config, output_override, constellation = "qpsk", decoder = "cm", out_file;
    int workers = 0;
    long long seed_override = -1;
    double beta_db = 10.0;
    bool verbose = false;

    auto* run = app.add_subcommand("run", "run a scenario config");
    run->add_option("-c,--config", config, "scenario config file")->required();
    run->add_option("-o,--output", output_override, "override output directory");
    run->add_option("-w,--workers", workers, "worker threads (0 = all cores)");
    run->add_option("-s,--seed", seed_override, "override scenario seed");
    run->add_flag("-v,--verbose", verbose, "progress to stderr");

    auto* dump = app.add_subcommand("dump-tables", "export MI/MMSE tables with analytic bounds");
    dump->add_option("--constellation", constellation, "bpsk|qpsk|8psk|4qam|16qam|64qam|gaussian");
    dump->add_option("--decoder", decoder, "cm|bicm")->check(CLI::IsMember({"cm", "bicm"}));
    dump->add_option("--beta-db", beta_db, "cap SNR for the truncated bounds, dB");
    dump->add_option("--out", out_file, "output file (default stdout)");
    dump->add_option("-w,--workers", workers, "worker threads (0 = all cores)");

    CLI11_PARSE(app, argc, argv);

    if (run->parsed()) return cmd_run(config, output_override, workers, seed_override, verbose);
    return cmd_dump(constellation, decoder, beta_db, out_file, workers);
}
