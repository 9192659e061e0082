// antires: coupled-mode spectra, antiresonance extraction and characterization.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "antires/antires.hpp"

namespace {

int exit_code(antires::ErrorKind kind) {
    using antires::ErrorKind;
    switch (kind) {
        case ErrorKind::config:
        case ErrorKind::invalid_network: return 2;
        case ErrorKind::io: return 3;
        case ErrorKind::ambiguity: return 4;
        default: return 5;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"antires - driven coupled-mode networks: spectra, resonances and antiresonances"};
    app.require_subcommand(1, 1);

    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_given = false;

    const char* names[][2] = {
        {"spectrum", "sweep the driven network, report poles and zeros"},
        {"scan2d", "phase over (probe, atom-cavity detuning) and antiresonance tracking"},
        {"stark-scan", "phase versus trap power at the cavity resonance, arctangent fit"},
        {"characterize", "drive each node in turn and identify the lossy component"},
        {"oracle-check", "compare the exact quantum steady state with the linear model"},
        {"heterodyne-demo", "simulate heterodyne phase streams, histograms and fits"},
    };
    for (const auto& [name, help] : names) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config_path, "scenario config (JSON)")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out_dir, "output directory (overrides config)");
        sub->add_option("--seed", seed, "RNG seed (overrides config)")->each([&](const std::string&) { seed_given = true; });
    }

    CLI11_PARSE(app, argc, argv);
    const std::string command = app.get_subcommands().front()->get_name();

    try {
        antires::ScenarioConfig config = antires::load_scenario(config_path);
        if (!out_dir.empty()) config.output_dir = out_dir;
        if (seed_given) config.seed = seed;

        if (command == "spectrum") {
            antires::cmd_spectrum(config, std::cout);
        } else if (command == "scan2d") {
            const auto run = antires::cmd_scan2d(config, std::cout);
            if (!run.all_track) {
                std::cerr << "error: antiresonance centers do not track the probe-atom resonance\n";
                return 6;
            }
        } else if (command == "stark-scan") {
            antires::cmd_stark_scan(config, std::cout);
        } else if (command == "characterize") {
            antires::cmd_characterize(config, std::cout);
        } else if (command == "oracle-check") {
            if (!antires::cmd_oracle_check(config, std::cout).passed) return 6;
        } else if (command == "heterodyne-demo") {
            antires::cmd_heterodyne_demo(config, std::cout);
        }
        std::cout << "outputs written to " << std::filesystem::absolute(config.output_dir).string() << '\n';
    } catch (const antires::AmbiguityError& e) {
        std::cerr << "error: " << e.what() << '\n';
        for (const auto& c : e.candidates()) std::cerr << "  candidate: " << c << '\n';
        return exit_code(e.kind());
    } catch (const antires::Error& e) {
        std::cerr << "error (" << antires::to_string(e.kind()) << "): " << e.what() << '\n';
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
