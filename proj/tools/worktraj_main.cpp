#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "worktraj/experiments.hpp"

namespace {

struct FlagOverrides {
    double dt = -1.0;
    int64_t trajectories = -1;
    uint64_t seed = 0;
    bool seed_set = false;
    int grid = -1;
    double gap_floor = -1.0;
    int quad_nodes = -1;
    std::string out;
    std::string config_path;
};

void apply_overrides(worktraj::ExperimentConfig& cfg, const FlagOverrides& f) {
    if (f.dt >= 0.0) cfg.dt = f.dt;
    if (f.trajectories >= 0) cfg.trajectories = static_cast<uint64_t>(f.trajectories);
    if (f.seed_set) cfg.seed = f.seed;
    if (f.grid > 0) cfg.grid = f.grid;
    if (f.gap_floor > 0.0) cfg.gap_floor = f.gap_floor;
    if (f.quad_nodes > 0) cfg.quad_nodes = f.quad_nodes;
    if (!f.out.empty()) cfg.out = f.out;
}

worktraj::ExperimentConfig load_config(const FlagOverrides& f) {
    worktraj::ExperimentConfig cfg;
    if (!f.config_path.empty()) {
        std::ifstream is(f.config_path);
        if (!is) throw std::runtime_error("cannot open config file " + f.config_path);
        nlohmann::json j;
        is >> j;
        cfg = worktraj::ExperimentConfig::from_json(j);
    }
    return cfg;
}

void add_common_flags(CLI::App* app, FlagOverrides& f) {
    app->add_option("--dt", f.dt, "Monte Carlo step size");
    app->add_option("--trajectories", f.trajectories, "Monte Carlo trajectory count");
    app->add_option("--seed", f.seed, "master RNG seed")->each([&](const std::string&) {
        f.seed_set = true;
    });
    app->add_option("--grid", f.grid, "solver grid resolution");
    app->add_option("--gap-floor", f.gap_floor, "gap regularization floor");
    app->add_option("--quad-nodes", f.quad_nodes, "ensemble quadrature nodes");
    app->add_option("--out", f.out, "output path (file or directory)");
    app->add_option("--config", f.config_path, "JSON config file");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"worktraj: work statistics of a driven dissipative qubit"};
    app.require_subcommand(1);

    FlagOverrides flags;
    std::string fig;

    const std::vector<std::string> experiments = {"simulate", "moments",  "mgf",
                                                  "jarzynski", "fdr",     "optimal-protocol",
                                                  "oracle"};
    for (const auto& name : experiments) {
        auto* sub = app.add_subcommand(name, "run the '" + name + "' experiment");
        add_common_flags(sub, flags);
        sub->callback([&, name] {
            auto cfg = load_config(flags);
            cfg.experiment = name;
            apply_overrides(cfg, flags);
            std::exit(worktraj::run_experiment(cfg));
        });
    }

    auto* rep = app.add_subcommand("reproduce", "reproduce a figure dataset (fig2|fig3|fig4)");
    rep->add_option("figure", fig, "one of fig2, fig3, fig4")->required();
    add_common_flags(rep, flags);
    rep->callback([&] {
        if (fig != "fig2" && fig != "fig3" && fig != "fig4")
            throw CLI::ValidationError("figure must be one of fig2, fig3, fig4");
        auto cfg = load_config(flags);
        cfg.experiment = "reproduce-" + fig;
        apply_overrides(cfg, flags);
        std::exit(worktraj::run_experiment(cfg));
    });

    try {
        CLI11_PARSE(app, argc, argv);
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 2;
    }
    return 0;
}
