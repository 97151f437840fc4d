#pragma once

#include "qwopt/oracle.hpp"
#include "qwopt/optimizer.hpp"
#include "qwopt/walk.hpp"

#include <nlohmann/json_fwd.hpp>

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace qwopt {

// Configuration problems exit the CLI with code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Target description: named presets |m>, SR/SC superpositions, an explicit
// amplitude vector, or "random k states".
struct TargetSpec {
    enum class Kind { basis, real_superposition, complex_superposition, random, explicit_amps };

    Kind kind = Kind::basis;
    int m = 1;            // basis
    int m1 = 0, m2 = 0;   // superpositions
    int sign = -1;        // sign of the second ket: -1 -> (|m1> - |m2>)/sqrt(2)
    int count = 1;        // random
    Eigen::VectorXcd amps;  // explicit

    std::string name() const;

    // Materialize the target on the band of an n-step walk; `seed` feeds the
    // random kind (index selects which of the `count` states).
    TargetState realize(int steps, std::uint64_t seed, int index = 0) const;
};

struct ExperimentConfig {
    std::string experiment;  // engineer | perturb | sweep | compare
    int steps = 3;
    std::vector<TargetSpec> targets;
    int repeats = 1;
    std::uint64_t budget = 600;
    std::uint64_t seed = 0;
    std::string out_dir = "runs";

    NoiseModel noise;
    Eigen::Vector2cd input_coin = Oracle::Setup::default_input_coin();
    Eigen::Vector2cd projection_axis = Oracle::Setup::default_projection_axis();
    double bounds_lo_deg = 0.0;
    double bounds_hi_deg = 360.0;
    bool noiseless_rescore = true;

    // perturb
    PerturbationConfig perturbation;
    std::optional<double> restart_threshold;
    int check_period = 10;

    // sweep
    std::vector<int> steps_list;
    int targets_per_step = 10;
    double fidelity_threshold = 0.98;

    // compare
    std::vector<std::string> algorithms = {"rbf", "random_search", "powell"};

    // optimizer overrides (0 keeps the built-in default)
    struct OptimizerSettings {
        int init_points = 0;
        int num_global_searches = 5;
        int max_stalled_iterations = 100;
        int refinement_frequency = 3;
        double min_distance = 1e-6;
        double ridge = 1e-8;
        int candidate_pool = 0;
        int model_reselect_period = 25;
        double rbf_gamma = kDefaultRbfGamma;
        std::string initial_kernel = "cubic";
    } optimizer;

    OptimizerConfig optimizer_config(int walk_steps, std::uint64_t opt_seed,
                                     std::uint64_t opt_budget) const;
};

// Parses and validates a config document; unknown keys are rejected.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config_file(const std::string& path);

TargetSpec parse_target(const nlohmann::json& doc);

// Perturbation probability q and restart threshold t used in the reference
// perturbation study, keyed on the target preset (sign-insensitive).
struct PerturbationDefaults {
    double probability_q;
    double restart_threshold;
};
PerturbationDefaults table_defaults(const TargetSpec& target);

// Canonical serialization of the effective config (used for hashing and the
// metadata sidecar).
nlohmann::json config_to_json(const ExperimentConfig& config);

}  // namespace qwopt
