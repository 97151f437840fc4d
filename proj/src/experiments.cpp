#include "qwopt/experiments.hpp"

#include "qwopt/seeding.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace qwopt {

using nlohmann::json;

DegradationDecision check_degradation(double c_new, double c_sampled, double threshold) {
    if (!(std::isfinite(c_new) && std::isfinite(c_sampled) && threshold >= 0.0)) {
        throw std::invalid_argument("check_degradation: inputs must be finite, threshold >= 0");
    }
    return c_new > c_sampled + threshold ? DegradationDecision::restart
                                         : DegradationDecision::keep_going;
}

namespace {

Oracle make_oracle(const ExperimentConfig& config, const TargetState& target,
                   std::uint64_t oracle_seed, bool with_perturbation, int steps) {
    Oracle::Setup setup;
    setup.steps = steps;
    setup.input_coin = config.input_coin;
    setup.projection_axis = config.projection_axis;
    setup.target = target;
    setup.noise = config.noise;
    if (with_perturbation) setup.perturbation = config.perturbation;
    setup.seed = oracle_seed;
    return Oracle(setup);
}

std::string target_label(const TargetSpec& spec, int state_index) {
    std::string name = spec.name();
    if (spec.kind == TargetSpec::Kind::random) name += "#" + std::to_string(state_index);
    return name;
}

RunInfo make_info(const ExperimentConfig& config, const std::string& algorithm,
                  const TargetSpec& spec, int state_index, int repeat, int steps,
                  std::uint64_t oracle_seed, std::uint64_t optimizer_seed) {
    RunInfo info;
    info.algorithm = algorithm;
    info.target_name = target_label(spec, state_index);
    info.state_index = state_index;
    info.repeat = repeat;
    info.steps = steps;
    info.target_seed = config.seed;
    info.oracle_seed = oracle_seed;
    info.optimizer_seed = optimizer_seed;
    return info;
}

}  // namespace

std::vector<TargetSpec> expand_targets(const ExperimentConfig& config) {
    std::vector<TargetSpec> out;
    for (const TargetSpec& t : config.targets) {
        if (t.kind == TargetSpec::Kind::random) {
            for (int i = 0; i < t.count; ++i) {
                TargetSpec s = t;
                s.count = 1;
                out.push_back(s);
            }
        } else {
            out.push_back(t);
        }
    }
    return out;
}

std::vector<double> recovery_ratios(const Trace& trace,
                                    const std::vector<PerturbationEvent>& events) {
    std::set<std::uint64_t> instants;
    for (const PerturbationEvent& e : events) instants.insert(e.eval);
    std::vector<double> ratios;
    std::vector<std::uint64_t> sorted(instants.begin(), instants.end());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const std::uint64_t at = sorted[i];
        const std::uint64_t until =
            i + 1 < sorted.size() ? sorted[i + 1] : std::numeric_limits<std::uint64_t>::max();
        double before = 0.0;
        double after = 0.0;
        bool any_after = false;
        for (const IterationRecord& rec : trace.records) {
            const double fid = std::max(0.0, 1.0 - rec.cost);
            if (rec.eval < at) {
                before = std::max(before, fid);
            } else if (rec.eval < until) {
                after = std::max(after, fid);
                any_after = true;
            }
        }
        if (before > 0.0 && any_after) ratios.push_back(after / before);
    }
    return ratios;
}

RunResult engineer_single(const ExperimentConfig& config, int state_index, int repeat) {
    const std::vector<TargetSpec> specs = expand_targets(config);
    const TargetSpec& spec = specs.at(state_index);
    const TargetState target = spec.realize(config.steps, config.seed, state_index);
    const std::uint64_t oracle_seed =
        derive_seed(config.seed, {stream::oracle, static_cast<std::uint64_t>(state_index),
                                  static_cast<std::uint64_t>(repeat)});
    const std::uint64_t optimizer_seed =
        derive_seed(config.seed, {stream::optimizer, static_cast<std::uint64_t>(state_index),
                                  static_cast<std::uint64_t>(repeat)});

    Oracle oracle = make_oracle(config, target, oracle_seed, false, config.steps);
    SurrogateOptimizer opt(config.optimizer_config(config.steps, optimizer_seed, config.budget));
    RunResult result;
    result.trace = opt.run([&](const Eigen::VectorXd& x) { return oracle.cost(x); });
    result.trace.info = make_info(config, "rbf", spec, state_index, repeat, config.steps,
                                  oracle_seed, optimizer_seed);
    result.trace.info.run_id = "s" + std::to_string(state_index) + "_r" + std::to_string(repeat);
    if (config.noiseless_rescore && opt.has_best()) {
        result.trace.summary.exact_fidelity = oracle.evaluate_exact(opt.best_point());
    }
    result.events = oracle.event_log();
    return result;
}

RunResult perturb_single(const ExperimentConfig& config, int state_index, int repeat) {
    if (!config.restart_threshold) {
        throw ConfigError("perturb experiment requires a restart threshold");
    }
    const double threshold = *config.restart_threshold;
    const std::vector<TargetSpec> specs = expand_targets(config);
    const TargetSpec& spec = specs.at(state_index);
    const TargetState target = spec.realize(config.steps, config.seed, state_index);
    const std::uint64_t oracle_seed =
        derive_seed(config.seed, {stream::oracle, static_cast<std::uint64_t>(state_index),
                                  static_cast<std::uint64_t>(repeat)});
    const std::uint64_t optimizer_seed =
        derive_seed(config.seed, {stream::optimizer, static_cast<std::uint64_t>(state_index),
                                  static_cast<std::uint64_t>(repeat)});

    Oracle oracle = make_oracle(config, target, oracle_seed, true, config.steps);
    SurrogateOptimizer opt(config.optimizer_config(config.steps, optimizer_seed, config.budget));
    const auto cost_fn = [&](const Eigen::VectorXd& x) { return oracle.cost(x); };

    RunResult result;
    Trace& trace = result.trace;
    bool have_best = false;
    Eigen::VectorXd best_theta;
    double best_cost = 1.0;
    std::uint64_t best_eval = 0;
    int degradation_restarts = 0;
    std::uint64_t next_check = static_cast<std::uint64_t>(config.check_period);

    while (oracle.evaluations() < config.budget) {
        if (have_best && oracle.evaluations() >= next_check) {
            // One extra estimate at the incumbent, compared against the cost
            // recorded when it was sampled.
            const double c_new = oracle.cost(best_theta);
            const std::uint64_t ev = oracle.evaluations();
            EventTag tag = EventTag::degradation_check;
            if (check_degradation(c_new, best_cost, threshold) == DegradationDecision::restart) {
                tag = EventTag::degradation_restart;
                ++degradation_restarts;
                opt.restart(true);
                // The environment changed: old bests are stale. The best
                // record restarts from this fresh measurement of the
                // incumbent, which later evaluations must beat.
                best_cost = c_new;
                best_eval = ev;
            }
            IterationRecord rec;
            rec.eval = ev;
            rec.theta = best_theta;
            rec.cost = c_new;
            rec.best = best_cost;
            rec.event = tag;
            trace.records.push_back(std::move(rec));
            next_check = oracle.evaluations() + static_cast<std::uint64_t>(config.check_period);
            continue;
        }
        const IterationRecord& step = opt.step(cost_fn);
        const std::uint64_t ev = oracle.evaluations();
        if (!have_best || step.cost < best_cost) {
            have_best = true;
            best_theta = step.theta;
            best_cost = step.cost;
            best_eval = ev;
        }
        IterationRecord rec;
        rec.eval = ev;
        rec.theta = step.theta;
        rec.cost = step.cost;
        rec.best = best_cost;
        rec.event = oracle.events_at(ev).empty() ? step.event : EventTag::perturbation;
        rec.wall_time_s = step.wall_time_s;
        trace.records.push_back(std::move(rec));
    }

    trace.info = make_info(config, "rbf", spec, state_index, repeat, config.steps, oracle_seed,
                           optimizer_seed);
    trace.info.run_id = "s" + std::to_string(state_index) + "_r" + std::to_string(repeat);
    trace.summary.best_theta = best_theta;
    trace.summary.best_cost = best_cost;
    trace.summary.best_eval = best_eval;
    trace.summary.evaluations = oracle.evaluations();
    trace.summary.stall_restarts = opt.stall_restarts();
    trace.summary.degradation_restarts = degradation_restarts;
    trace.summary.perturbations = static_cast<int>(oracle.event_log().size());
    if (config.noiseless_rescore && have_best) {
        trace.summary.exact_fidelity = oracle.evaluate_exact(best_theta);
    }
    result.events = oracle.event_log();
    return result;
}

RunResult sweep_single(const ExperimentConfig& config, int steps, int target_index,
                       double threshold) {
    const TargetState target = random_target(
        steps + 1, derive_seed(config.seed, {stream::target, static_cast<std::uint64_t>(steps),
                                             static_cast<std::uint64_t>(target_index)}));
    const std::uint64_t oracle_seed =
        derive_seed(config.seed, {stream::oracle, static_cast<std::uint64_t>(steps),
                                  static_cast<std::uint64_t>(target_index)});
    const std::uint64_t optimizer_seed =
        derive_seed(config.seed, {stream::optimizer, static_cast<std::uint64_t>(steps),
                                  static_cast<std::uint64_t>(target_index)});

    Oracle oracle = make_oracle(config, target, oracle_seed, false, steps);
    SurrogateOptimizer opt(config.optimizer_config(steps, optimizer_seed, config.budget));

    RunResult result;
    std::optional<std::uint64_t> reached;
    Eigen::VectorXd stop_theta;
    while (!opt.done()) {
        const IterationRecord& rec = opt.step([&](const Eigen::VectorXd& x) { return oracle.cost(x); });
        if (1.0 - rec.cost >= threshold) {
            reached = rec.eval;
            stop_theta = rec.theta;
            break;
        }
    }
    result.trace.records = opt.records();
    result.trace.summary.evaluations = opt.evaluations();
    result.trace.summary.stall_restarts = opt.stall_restarts();
    if (opt.has_best()) {
        result.trace.summary.best_theta = opt.best_point();
        result.trace.summary.best_cost = opt.best_value();
        result.trace.summary.best_eval = opt.best_eval();
    }
    result.trace.summary.evals_to_threshold = reached;
    // The noiseless fidelity at the stopping point, kept alongside the noisy
    // estimate for audit.
    if (reached) {
        result.trace.summary.exact_fidelity = oracle.evaluate_exact(stop_theta);
    }

    TargetSpec spec;
    spec.kind = TargetSpec::Kind::random;
    result.trace.info = make_info(config, "rbf", spec, target_index, 0, steps, oracle_seed,
                                  optimizer_seed);
    result.trace.info.target_name = "random#s" + std::to_string(steps) + "_t" + std::to_string(target_index);
    result.trace.info.run_id = "steps" + std::to_string(steps) + "_t" + std::to_string(target_index);
    result.events = oracle.event_log();
    return result;
}

RunResult compare_single(const ExperimentConfig& config, const std::string& algorithm,
                         int state_index, int repeat) {
    const std::vector<TargetSpec> specs = expand_targets(config);
    const TargetSpec& spec = specs.at(state_index);
    const TargetState target = spec.realize(config.steps, config.seed, state_index);
    // The oracle stream is paired: identical across algorithms for a given
    // (state, repeat).
    const std::uint64_t oracle_seed =
        derive_seed(config.seed, {stream::oracle, static_cast<std::uint64_t>(state_index),
                                  static_cast<std::uint64_t>(repeat)});
    std::uint64_t alg_id = 0;
    if (algorithm == "rbf") alg_id = 1;
    else if (algorithm == "random_search") alg_id = 2;
    else if (algorithm == "powell") alg_id = 3;
    else throw ConfigError("unknown algorithm \"" + algorithm + "\"");
    const std::uint64_t alg_seed =
        derive_seed(config.seed, {stream::algorithm, alg_id, static_cast<std::uint64_t>(state_index),
                                  static_cast<std::uint64_t>(repeat)});

    Oracle oracle = make_oracle(config, target, oracle_seed, false, config.steps);
    const auto cost_fn = [&](const Eigen::VectorXd& x) { return oracle.cost(x); };

    RunResult result;
    if (algorithm == "rbf") {
        SurrogateOptimizer opt(config.optimizer_config(config.steps, alg_seed, config.budget));
        result.trace = opt.run(cost_fn);
    } else {
        BaselineConfig bc;
        const int n = param_count(config.steps);
        bc.lower = Eigen::VectorXd::Constant(n, deg_to_rad(config.bounds_lo_deg));
        bc.upper = Eigen::VectorXd::Constant(n, deg_to_rad(config.bounds_hi_deg));
        bc.budget = config.budget;
        bc.seed = alg_seed;
        result.trace = algorithm == "random_search" ? random_search(cost_fn, bc)
                                                    : powell(cost_fn, bc);
    }
    result.trace.info = make_info(config, algorithm, spec, state_index, repeat, config.steps,
                                  oracle_seed, alg_seed);
    result.trace.info.run_id =
        algorithm + "_s" + std::to_string(state_index) + "_r" + std::to_string(repeat);
    if (config.noiseless_rescore && result.trace.summary.best_theta.size() > 0) {
        result.trace.summary.exact_fidelity = oracle.evaluate_exact(result.trace.summary.best_theta);
    }
    result.events = oracle.event_log();
    return result;
}

ExperimentResult run_engineering(const ExperimentConfig& config) {
    ExperimentResult out;
    const std::vector<TargetSpec> specs = expand_targets(config);
    std::ostringstream csv;
    csv << "state,target,repeat,evaluations,best_cost,best_noisy_fidelity,exact_fidelity,"
           "stall_restarts\n";
    for (int s = 0; s < static_cast<int>(specs.size()); ++s) {
        for (int r = 0; r < config.repeats; ++r) {
            RunResult run = engineer_single(config, s, r);
            const RunSummary& sum = run.trace.summary;
            csv << s << "," << run.trace.info.target_name << "," << r << "," << sum.evaluations
                << "," << format_double(sum.best_cost) << ","
                << format_double(1.0 - sum.best_cost) << ","
                << (sum.exact_fidelity ? format_double(*sum.exact_fidelity) : "") << ","
                << sum.stall_restarts << "\n";
            out.runs.push_back(std::move(run));
        }
    }
    out.summary_csv = csv.str();
    return out;
}

ExperimentResult run_perturbation(const ExperimentConfig& config) {
    ExperimentResult out;
    const std::vector<TargetSpec> specs = expand_targets(config);
    std::ostringstream csv;
    csv << "state,target,repeat,evaluations,best_cost,best_noisy_fidelity,exact_fidelity,"
           "perturbations,degradation_restarts,mean_recovery_ratio\n";
    for (int s = 0; s < static_cast<int>(specs.size()); ++s) {
        for (int r = 0; r < config.repeats; ++r) {
            RunResult run = perturb_single(config, s, r);
            const RunSummary& sum = run.trace.summary;
            const std::vector<double> ratios = recovery_ratios(run.trace, run.events);
            std::string mean_ratio;
            if (!ratios.empty()) {
                double m = 0.0;
                for (double v : ratios) m += v;
                mean_ratio = format_double(m / ratios.size());
            }
            csv << s << "," << run.trace.info.target_name << "," << r << "," << sum.evaluations
                << "," << format_double(sum.best_cost) << ","
                << format_double(1.0 - sum.best_cost) << ","
                << (sum.exact_fidelity ? format_double(*sum.exact_fidelity) : "") << ","
                << sum.perturbations << "," << sum.degradation_restarts << "," << mean_ratio
                << "\n";
            out.runs.push_back(std::move(run));
        }
    }
    out.summary_csv = csv.str();
    return out;
}

ExperimentResult run_sweep(const ExperimentConfig& config) {
    ExperimentResult out;
    std::ostringstream csv;
    csv << "steps,n_par,runs,converged,capped,mean_evals,se_evals\n";
    for (int steps : config.steps_list) {
        std::vector<double> evals;
        int capped = 0;
        for (int t = 0; t < config.targets_per_step; ++t) {
            RunResult run = sweep_single(config, steps, t, config.fidelity_threshold);
            if (run.trace.summary.evals_to_threshold) {
                evals.push_back(static_cast<double>(*run.trace.summary.evals_to_threshold));
            } else {
                ++capped;
            }
            out.runs.push_back(std::move(run));
        }
        double mean = 0.0, se = 0.0;
        if (!evals.empty()) {
            for (double v : evals) mean += v;
            mean /= evals.size();
            if (evals.size() > 1) {
                double var = 0.0;
                for (double v : evals) var += (v - mean) * (v - mean);
                var /= (evals.size() - 1);
                se = std::sqrt(var / evals.size());
            }
        }
        csv << steps << "," << param_count(steps) << "," << config.targets_per_step << ","
            << evals.size() << "," << capped << ","
            << (evals.empty() ? "" : format_double(mean)) << ","
            << (evals.empty() ? "" : format_double(se)) << "\n";
    }
    out.summary_csv = csv.str();
    return out;
}

ExperimentResult run_comparison(const ExperimentConfig& config) {
    ExperimentResult out;
    const std::vector<TargetSpec> specs = expand_targets(config);
    std::map<std::string, std::vector<std::vector<const Trace*>>> by_alg;
    for (const std::string& alg : config.algorithms) {
        for (int s = 0; s < static_cast<int>(specs.size()); ++s) {
            for (int r = 0; r < config.repeats; ++r) {
                out.runs.push_back(compare_single(config, alg, s, r));
            }
        }
    }
    std::size_t length = 0;
    for (const RunResult& run : out.runs) length = std::max(length, run.trace.records.size());
    std::ostringstream csv;
    csv << "label,eval,mean_best_cost,std_across_states,std_of_mean\n";
    for (const std::string& alg : config.algorithms) {
        std::vector<std::vector<const Trace*>> groups(specs.size());
        for (const RunResult& run : out.runs) {
            if (run.trace.info.algorithm == alg) {
                groups[run.trace.info.state_index].push_back(&run.trace);
            }
        }
        // Best-so-far curves are carried forward to a common length before
        // aggregation (Powell may stop before the budget).
        const AggregateCurve curve = aggregate(groups, length);
        const std::string body = aggregate_csv(curve, alg);
        csv << body.substr(body.find('\n') + 1);
    }
    out.summary_csv = csv.str();
    return out;
}

PointScore score_point(const ExperimentConfig& config, const Eigen::VectorXd& theta_deg) {
    if (config.targets.empty()) throw ConfigError("eval requires a target");
    const std::vector<TargetSpec> specs = expand_targets(config);
    const TargetState target = specs.front().realize(config.steps, config.seed, 0);
    Oracle oracle = make_oracle(config, target,
                                derive_seed(config.seed, {stream::oracle, 0, 0}), false,
                                config.steps);
    Eigen::VectorXd theta = theta_deg;
    for (Eigen::Index i = 0; i < theta.size(); ++i) theta(i) = deg_to_rad(theta_deg(i));
    PointScore score;
    score.exact_fidelity = oracle.evaluate_exact(theta);
    score.success_probability = oracle.success_probability(theta);
    if (config.noise.enabled) {
        score.noisy_estimate = oracle.estimate_fidelity(theta);
        score.cost = 1.0 - *score.noisy_estimate;
    } else {
        score.cost = 1.0 - score.exact_fidelity;
    }
    return score;
}

void persist(const ExperimentConfig& config, const ExperimentResult& result,
             const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    json runs = json::array();
    for (const RunResult& run : result.runs) {
        const std::string file = "trace_" + run.trace.info.run_id + ".jsonl";
        write_jsonl(run.trace, out_dir / file);
        runs.push_back(trace_run_entry(run.trace, file, run.events));
    }
    write_text_file(out_dir / "summary.csv", result.summary_csv);

    const json config_json = config_to_json(config);
    json meta = {
        {"experiment", config.experiment},
        {"config", config_json},
        {"config_hash", fnv1a_hex(config_json.dump())},
        {"master_seed", config.seed},
        {"versions", {{"qwopt", "0.1.0"}, {"trace_format", 1}}},
        {"runs", runs},
    };
    write_text_file(out_dir / "meta.json", meta.dump(2) + "\n");
}

ExperimentResult run_experiment(const ExperimentConfig& config,
                                const std::optional<std::filesystem::path>& out_dir) {
    ExperimentResult result;
    if (config.experiment == "engineer") {
        result = run_engineering(config);
    } else if (config.experiment == "perturb") {
        result = run_perturbation(config);
    } else if (config.experiment == "sweep") {
        result = run_sweep(config);
    } else if (config.experiment == "compare") {
        result = run_comparison(config);
    } else {
        throw ConfigError("unknown experiment: " + config.experiment);
    }
    if (out_dir) persist(config, result, *out_dir);
    return result;
}

std::string report_from_meta(const std::filesystem::path& meta_path) {
    std::ifstream in(meta_path);
    if (!in) throw std::runtime_error("cannot open: " + meta_path.string());
    json meta;
    in >> meta;
    const std::filesystem::path dir = meta_path.parent_path();

    struct Entry {
        std::string algorithm;
        int state = 0;
        Trace trace;
    };
    std::vector<Entry> entries;
    for (const json& run : meta.at("runs")) {
        Entry e;
        e.algorithm = run.at("algorithm").get<std::string>();
        e.state = run.at("state").get<int>();
        e.trace = read_jsonl(dir / run.at("file").get<std::string>());
        entries.push_back(std::move(e));
    }
    if (entries.empty()) throw std::runtime_error("report: no runs in metadata");

    std::size_t length = 0;
    std::set<std::string> algorithms;
    for (const Entry& e : entries) {
        length = std::max(length, e.trace.records.size());
        algorithms.insert(e.algorithm);
    }

    std::ostringstream csv;
    csv << "label,eval,mean_best_cost,std_across_states,std_of_mean\n";
    for (const std::string& alg : algorithms) {
        std::map<int, std::vector<const Trace*>> by_state;
        for (const Entry& e : entries) {
            if (e.algorithm == alg) by_state[e.state].push_back(&e.trace);
        }
        std::vector<std::vector<const Trace*>> groups;
        for (auto& [state, traces] : by_state) groups.push_back(traces);
        const AggregateCurve curve = aggregate(groups, length);
        const std::string body = aggregate_csv(curve, alg);
        csv << body.substr(body.find('\n') + 1);
    }
    return csv.str();
}

}  // namespace qwopt
