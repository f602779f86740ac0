#pragma once

#include <string>

#include "ddsmc/simulation.hpp"

namespace ddsmc {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Everything one experiment needs. Defaults reproduce the benchmark setup:
/// pendulum plant, T = 30 samples with input in [-0.5, 0.5], delta = 0.01,
/// N = [1 1], eps1 = eps2 = 1, q = 0.1, sigma = 0.1, rho = 0.5.
struct RunConfig {
    std::string plant_name = "pendulum";  // builtin name, or empty + plant_file
    std::string plant_file;

    ExcitationSpec excitation;
    DisturbanceSpec disturbance;
    SynthesisConfig synthesis;
    SmcParams smc;

    Vector sim_x0;
    int sim_steps = 300;
    double convergence_threshold = 0.05;
    double convergence_fraction = 0.2;
    double blowup_bound = 1e6;

    std::vector<double> sweep_deltas;
    int sweep_seeds = 10;

    std::string out_dir = "run";
    std::uint64_t seed = 1;

    PlantModel plant() const;
    void apply_seed();  // derive excitation/disturbance seeds from `seed`

    static RunConfig defaults_for(const std::string& plant_name);
};

/// Parse the key/value config format ([section] headers, key = value lines).
/// Unknown sections or keys are rejected.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
std::string config_to_string(const RunConfig& cfg);

}  // namespace ddsmc
