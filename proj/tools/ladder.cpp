// ladder: surrogate-fit, bo-compare and single-run experiments on the
// expression benchmark.

#include <cstdlib>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "ladder/errors.hpp"
#include "ladder/experiments.hpp"

namespace {

constexpr int kConfigError = 1;
constexpr int kRunFailure = 2;

void print_summary(const std::vector<ladder::SummaryRow>& rows, const char* key_name)
{
    for (const auto& r : rows)
        std::cout << r.group << ' ' << key_name << '=' << r.key << " mean=" << r.mean << " +-" << 2.0 * r.std_error
                  << " median=" << r.median << " n=" << r.count << '\n';
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Latent-space Bayesian optimization with a structure-coupled kernel"};
    app.require_subcommand(1);

    const ladder::ExperimentConfig defaults;
    std::string config_path;
    std::map<std::string, std::string> flag_values;

    std::vector<CLI::App*> subs = {
        app.add_subcommand("surrogate-fit", "Surrogate MAE of Matern-only vs structure-coupled GPs"),
        app.add_subcommand("bo-compare", "Paired-seed comparison of BO methods"),
        app.add_subcommand("run", "One streamed BO run"),
    };
    for (auto* sub : subs) {
        sub->add_option("--config", config_path, "key = value file; flags override it");
        for (const auto& [key, value] : defaults.resolved()) {
            if (key == "experiment") continue;
            const std::string flag = "--" + key;
            if (value == "true" || value == "false")
                sub->add_flag(flag, flag_values[key], "default " + value);
            else
                sub->add_option(flag, flag_values[key], "default " + value);
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kConfigError;
    }

    ladder::ExperimentConfig cfg;
    CLI::App* chosen = app.get_subcommands().front();
    try {
        cfg.experiment = chosen->get_name();
        if (const char* env = std::getenv("LADDER_SEED"); env && *env) cfg.set("seed", env);
        if (!config_path.empty()) ladder::load_config_file(config_path, cfg);
        cfg.experiment = chosen->get_name();
        for (const auto& [key, value] : flag_values)
            if (chosen->count("--" + key) > 0) cfg.set(key, value);
        cfg.validate();
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    }

    ladder::ExperimentContext ctx;
    try {
        ctx = ladder::make_context(cfg);
    } catch (const std::exception& e) {
        std::cerr << "latent model: " << e.what() << '\n';
        return kConfigError;
    }

    try {
        if (cfg.experiment == "surrogate-fit") {
            const auto result = ladder::cmd_surrogate_fit(cfg, ctx);
            print_summary(result.summary, "train_size");
            return 0;
        }
        if (cfg.experiment == "bo-compare") {
            const auto result = ladder::cmd_bo_compare(cfg, ctx);
            std::vector<ladder::SummaryRow> finals;
            for (const auto& r : result.summary)
                if (r.key == cfg.iters) finals.push_back(r);
            print_summary(finals, "t");
            for (const auto& r : result.runs)
                if (!r.ok) std::cerr << "run " << r.method << " seed " << r.seed << " failed: " << r.message << '\n';
            return result.all_ok() ? 0 : kRunFailure;
        }
        const auto status = ladder::cmd_single_run(cfg, ctx);
        if (!status.record.entries.empty()) {
            const auto [x, y] = ladder::incumbent(status.record);
            std::cout << "best " << ladder::format_double(y) << ' ' << ladder::to_string(x) << '\n';
        }
        if (!status.ok) {
            std::cerr << "run failed: " << status.message << '\n';
            return kRunFailure;
        }
        return 0;
    } catch (const ladder::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRunFailure;
    }
}
