#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "worktraj/model.hpp"

namespace worktraj {

// Fully resolved experiment description. Serialized into every CSV's comment
// block so each output can reproduce itself.
struct ExperimentConfig {
    std::string experiment = "moments";

    // ensemble
    std::string ensemble_name = "d_eg";  // d_eg | d_pm | d_haar | polar_pair | custom
    double polar_p = 0.25;
    int quad_nodes = 64;
    std::vector<std::pair<double, double>> custom_preps;  // (weight, p_e)

    // protocol
    std::string protocol_kind = "linear";  // linear | power | tanh | ramp | piecewise
    std::vector<double> protocol_params = {0.5};
    double tau = 5.0;
    std::vector<std::pair<double, double>> knots;

    // bath
    double beta = 1.0;
    std::string coupling = "constant";  // constant | ohmic
    double gamma0 = 0.1;
    double kappa = 0.1;
    double gap_floor = 1e-6;

    // solver
    int grid = 800;
    int n_max = 4;
    std::vector<double> u_list = {1.0};
    double dt = 0.0;  // <= 0: use the default 1e-3 * tau / 5
    uint64_t trajectories = 20000;
    uint64_t seed = 12345;

    // erasure (optimal-protocol, fig2)
    double p_end = 0.01;
    int erasure_grid = 200;

    std::vector<double> tau_list;
    std::string out;

    void validate() const;  // throws with the offending field named
    nlohmann::json to_json() const;
    static ExperimentConfig from_json(const nlohmann::json& j);

    EnsembleSpec make_ensemble() const;
    DriveProtocol make_protocol() const;
    BathSpec make_bath() const;
    double effective_dt() const { return dt > 0.0 ? dt : 1e-3 * tau / 5.0; }
};

// CSV with a reproducibility comment block: "# config: {json}" plus optional
// extra metadata lines, then a header row and data rows. Deterministic byte
// output for equal inputs.
struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    std::vector<std::string> metadata;  // extra "# key: value" lines
};

void write_csv(const std::string& path, const ExperimentConfig& config,
               const CsvTable& table);

// Reads back the "# config: ..." line of a worktraj CSV.
ExperimentConfig read_csv_config(const std::string& path);

// Dispatch on config.experiment; returns a process exit status and writes CSVs
// under config.out. Known experiments: simulate, moments, mgf, jarzynski, fdr,
// optimal-protocol, oracle, reproduce-fig2, reproduce-fig3, reproduce-fig4.
int run_experiment(const ExperimentConfig& config);

}  // namespace worktraj
