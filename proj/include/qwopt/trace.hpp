#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace qwopt {

enum class EventTag {
    none,
    lhd_init,
    global_search,
    local_search,
    refine,
    stall_restart,
    degradation_check,
    degradation_restart,
    perturbation,
};

const char* event_name(EventTag tag);

// One cost evaluation. Angles are stored in radians; serialization converts
// to degrees. The wall-time stamp stays in memory only, so that output files
// are bit-reproducible.
struct IterationRecord {
    std::uint64_t eval = 0;
    Eigen::VectorXd theta;
    double cost = 0.0;
    double best = 0.0;
    EventTag event = EventTag::none;
    double wall_time_s = 0.0;
};

struct RunInfo {
    std::string run_id;
    std::string algorithm;
    std::string target_name;
    int state_index = 0;
    int repeat = 0;
    int steps = 0;
    std::uint64_t target_seed = 0;
    std::uint64_t oracle_seed = 0;
    std::uint64_t optimizer_seed = 0;
};

struct RunSummary {
    Eigen::VectorXd best_theta;
    double best_cost = 1.0;
    std::uint64_t best_eval = 0;
    std::uint64_t evaluations = 0;
    int stall_restarts = 0;
    int degradation_restarts = 0;
    int perturbations = 0;
    std::optional<double> exact_fidelity;       // noiseless re-score of best_theta
    std::optional<std::uint64_t> evals_to_threshold;  // sweep stopping rule
};

struct Trace {
    RunInfo info;
    std::vector<IterationRecord> records;
    RunSummary summary;
};

// Best-so-far series of a trace carried forward to the requested length.
std::vector<double> best_curve(const Trace& trace, std::size_t length);

}  // namespace qwopt
