// plap <command> --config PATH [--out DIR] [--seed U64] [--strict]
// Exit codes: 0 pass, 1 FAIL rows under --strict or a module error, 2 config error.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>

#include "plap/errors.hpp"
#include "plap/experiment.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Numerical checks for Uhlenbeck-type elliptic systems"};
    app.require_subcommand(1);

    std::string config, out = ".";
    std::uint64_t seed = 0;
    bool seed_given = false, strict = false;

    for (const auto& name : plap::experiment::commands()) {
        auto* sub = app.add_subcommand(name, "run the " + name + " experiment");
        sub->add_option("--config", config, "JSON config file")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out, "output directory");
        sub->add_option_function<std::uint64_t>(
            "--seed", [&](const std::uint64_t& s) { seed = s; seed_given = true; }, "PRNG seed");
        sub->add_flag("--strict", strict, "exit 1 if any row fails");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    const std::string command = app.get_subcommands().front()->get_name();

    try {
        std::ifstream in(config);
        std::stringstream buf;
        buf << in.rdbuf();
        auto spec = plap::experiment::parse_spec(command, buf.str());
        spec.output_dir = out;
        if (seed_given) spec.seed = seed;
        const auto res = plap::experiment::run(spec);
        std::cout << command << ": " << res.rows << " rows, " << res.failures << " FAIL\n";
        for (const auto& f : res.files) std::cout << "  " << f << '\n';
        return strict && res.failures > 0 ? 1 : 0;
    } catch (const plap::ConfigError& e) {
        std::cerr << config << ": " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << command << ": " << e.what() << '\n';
        return 1;
    }
}
