#pragma once

#include "qwopt/baselines.hpp"
#include "qwopt/config.hpp"
#include "qwopt/io.hpp"
#include "qwopt/optimizer.hpp"
#include "qwopt/oracle.hpp"
#include "qwopt/trace.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace qwopt {

enum class DegradationDecision { keep_going, restart };

// Restart iff the fresh estimate exceeds the recorded one by more than the
// threshold; c_sampled is the noisy cost recorded when the incumbent was
// first evaluated and is never refreshed on passing checks.
DegradationDecision check_degradation(double c_new, double c_sampled, double threshold);

struct RunResult {
    Trace trace;
    std::vector<PerturbationEvent> events;
};

struct ExperimentResult {
    std::vector<RunResult> runs;
    std::string summary_csv;
    std::string meta_json;
};

// Ratio of the best noisy fidelity reached after a perturbation (up to the
// next one) to the best reached before it.
std::vector<double> recovery_ratios(const Trace& trace,
                                    const std::vector<PerturbationEvent>& events);

// One (target, repeat) engineering run: surrogate optimization against a
// counting oracle with perturbations disabled.
RunResult engineer_single(const ExperimentConfig& config, int state_index, int repeat);

// One perturbation-protocol run: surrogate optimization with the periodic
// degradation check and restart layered on top; hidden offsets persist
// across restarts.
RunResult perturb_single(const ExperimentConfig& config, int state_index, int repeat);

// One sweep run: optimization stops at the first evaluation whose noisy
// fidelity reaches the threshold; the budget acts as a failure cap.
RunResult sweep_single(const ExperimentConfig& config, int steps, int target_index,
                       double threshold);

// One comparison run of the named algorithm (rbf | random_search | powell)
// against a fresh oracle with paired seeds.
RunResult compare_single(const ExperimentConfig& config, const std::string& algorithm,
                         int state_index, int repeat);

ExperimentResult run_engineering(const ExperimentConfig& config);
ExperimentResult run_perturbation(const ExperimentConfig& config);
ExperimentResult run_sweep(const ExperimentConfig& config);
ExperimentResult run_comparison(const ExperimentConfig& config);

// Dispatches on config.experiment and persists all outputs under
// config.out_dir (JSONL per run, summary.csv, meta.json).
ExperimentResult run_experiment(const ExperimentConfig& config,
                                const std::optional<std::filesystem::path>& out_dir);

void persist(const ExperimentConfig& config, const ExperimentResult& result,
             const std::filesystem::path& out_dir);

// Number of (state, repeat) runs an experiment will execute and the expanded
// per-state target list.
std::vector<TargetSpec> expand_targets(const ExperimentConfig& config);

// Evaluation helper behind the `eval` CLI subcommand.
struct PointScore {
    double exact_fidelity = 0.0;
    double success_probability = 0.0;
    std::optional<double> noisy_estimate;
    double cost = 0.0;
};
PointScore score_point(const ExperimentConfig& config, const Eigen::VectorXd& theta_deg);

// Aggregated curve files for existing traces (the `report` subcommand).
std::string report_from_meta(const std::filesystem::path& meta_path);

}  // namespace qwopt
