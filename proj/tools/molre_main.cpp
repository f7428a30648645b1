// Copyright (c) 2026, molre contributors
// SPDX-License-Identifier: Apache-2.0
//
// molre command-line tool: synth, train, eval, count-params.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "molre/cli/commands.hpp"
#include "molre/core/errors.hpp"

namespace {

struct CommonFlags {
    std::string config;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
    std::string out;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config, "key = value config file")->check(CLI::ExistingFile);
    cmd->add_option("--set", flags.overrides, "override one key, K=V (repeatable)")->take_all();
    cmd->add_option("--seed", flags.seed, "run seed");
    cmd->add_option("--out", flags.out, "output directory");
}

molre::RunConfig resolve(const CommonFlags& flags) {
    molre::RunConfig config = flags.config.empty() ? molre::RunConfig{} : molre::load_config(flags.config);
    for (const auto& kv : flags.overrides) molre::apply_override(config, kv);
    if (flags.seed) config.seed = *flags.seed;
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mixture of low-rank experts over frozen volumetric features"};
    app.require_subcommand(1);

    CommonFlags synth_flags, train_flags, eval_flags, count_flags;
    auto* synth = app.add_subcommand("synth", "generate a synthetic dataset into data_dir (or --out)");
    add_common(synth, synth_flags);

    auto* train = app.add_subcommand("train", "train in run_dir (or --out)");
    add_common(train, train_flags);
    std::string resume;
    train->add_option("--checkpoint", resume, "resume from this checkpoint");

    auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on one split");
    add_common(eval, eval_flags);
    std::string checkpoint, split = "test", data_dir;
    eval->add_option("--checkpoint", checkpoint, "checkpoint to evaluate")->required();
    eval->add_option("--split", split, "train | val | test")->check(CLI::IsMember({"train", "val", "test"}));
    eval->add_option("--data", data_dir, "dataset directory, overriding the checkpoint's");

    auto* count = app.add_subcommand("count-params", "print the parameter table of the configured model");
    add_common(count, count_flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (synth->parsed()) {
            auto config = resolve(synth_flags);
            if (!synth_flags.out.empty()) config.data_dir = synth_flags.out;
            const auto m = molre::cmd_synth(config);
            std::cout << "wrote " << m.entries.size() << " volumes and " << molre::kManifestFile << " to "
                      << config.data_dir.string() << '\n';
        } else if (train->parsed()) {
            auto config = resolve(train_flags);
            if (!train_flags.out.empty()) config.run_dir = train_flags.out;
            std::optional<std::filesystem::path> from;
            if (!resume.empty()) from = resume;
            const auto s = molre::cmd_train(config, from, &std::cout);
            std::cout << "stopped at epoch " << s.stop_epoch << ", best epoch " << s.best_epoch << " (val AUC "
                      << s.best_auc << ")\n";
        } else if (eval->parsed()) {
            if (!eval_flags.config.empty() || !eval_flags.overrides.empty() || eval_flags.seed) {
                throw molre::ConfigError("eval takes its configuration from the checkpoint; use --data to relocate");
            }
            const std::filesystem::path out =
                eval_flags.out.empty() ? std::filesystem::path(checkpoint).parent_path() : std::filesystem::path(eval_flags.out);
            std::optional<std::filesystem::path> data;
            if (!data_dir.empty()) data = data_dir;
            const auto report = molre::cmd_eval(checkpoint, molre::parse_split(split), out, data);
            molre::write_class_table(report, std::cout);
            std::cout << molre::summary_json(report) << '\n';
        } else if (count->parsed()) {
            molre::cmd_count_params(resolve(count_flags), std::cout);
        }
    } catch (const molre::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const molre::DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 3;
    } catch (const molre::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
