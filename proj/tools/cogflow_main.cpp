#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "cogflow/config.hpp"
#include "cogflow/runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Fast-slow Riemannian gradient-flow experiment harness"};
    std::string experiment;
    std::string config_path;
    std::string out_dir = "out";
    std::vector<std::string> overrides;
    app.add_option("experiment", experiment,
                   "scaling | recovery | reduction | decision | gradcheck | all");
    app.add_option("--config", config_path, "key = value configuration file");
    app.add_option("--out", out_dir, "output directory (default: out)");
    app.add_option("--set", overrides, "override a config key, e.g. --set dt=0.005");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        cogflow::RunConfig config;
        if (!config_path.empty()) {
            std::ifstream in(config_path, std::ios::binary);
            if (!in)
                throw cogflow::ConfigError("cannot read config file: " + config_path);
            std::ostringstream buffer;
            buffer << in.rdbuf();
            config = cogflow::parse_config(buffer.str());
        }
        if (!experiment.empty()) {
            try {
                cogflow::apply_override(config, "experiment=" + experiment, 0);
            } catch (const cogflow::ConfigError&) {
                throw cogflow::ConfigError("unknown experiment '" + experiment + "'");
            }
        }
        int index = 1;
        for (const auto& assignment : overrides)
            cogflow::apply_override(config, assignment, index++);

        const int code = cogflow::run_experiments(config, out_dir);
        if (code != 0) std::cerr << "run finished with exit code " << code << "\n";
        return code;
    } catch (const cogflow::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
