#include "onn/errors.hpp"
#include "onn/harness.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

using Command = void (*)(const onn::ExperimentConfig&, const std::filesystem::path&, std::ostream&);

int run(Command command, const std::string& config_path, const std::string& out_dir,
        const std::optional<std::uint64_t>& seed) {
    try {
        onn::ExperimentConfig config;
        if (config_path.empty()) {
            config.dataset_dir = onn::default_dataset_dir();
        } else {
            config = onn::load_config(config_path);
        }
        if (seed) config.master_seed = *seed;
        command(config, out_dir, std::cout);
        return onn::kExitOk;
    } catch (const onn::OnnError& e) {
        std::cerr << "onn: " << e.what() << '\n';
        return onn::exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::cerr << "onn: " << e.what() << '\n';
        return onn::kExitInternal;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Coherent optical MVM simulator and hybrid ONN trainer"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    Command command = nullptr;

    auto add = [&](const char* name, const char* help, Command cmd) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config_path, "key=value config or a manifest.json to replay");
        sub->add_option("--out", out_dir, "output directory")->required();
        sub->add_option("--seed", seed, "override experiment.master_seed");
        sub->callback([&command, cmd] { command = cmd; });
    };
    add("characterize", "random MVMs against the ideal product; writes scatter CSV", onn::cmd_characterize);
    add("train", "train one network; writes metrics, confusion matrix and checkpoint", onn::cmd_train);
    add("sweep", "hybrid vs in-silico accuracy over a noise grid", onn::cmd_noise_sweep);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : onn::kExitConfig;
    }
    return run(command, config_path, out_dir, seed);
}
