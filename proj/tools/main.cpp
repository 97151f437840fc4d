// qwopt command line: quantum-walk state engineering experiments driven by a
// radial-basis-function surrogate optimizer, with seeded, machine-readable
// outputs (JSONL traces, CSV summaries, JSON metadata).

#include "qwopt/experiments.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct CommonFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    bool noiseless = false;
    std::optional<int> steps;
    std::optional<std::uint64_t> budget;
    std::optional<int> repeats;
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool config_required) {
    auto* opt = cmd->add_option("--config", flags.config_path, "JSON experiment config");
    if (config_required) opt->required();
    cmd->add_option("--seed", [&flags](const std::vector<std::string>& v) {
        flags.seed = std::stoull(v.back());
        return true;
    }, "Master seed override");
    cmd->add_option("--out", [&flags](const std::vector<std::string>& v) {
        flags.out = v.back();
        return true;
    }, "Output directory override");
    cmd->add_flag("--noiseless", flags.noiseless, "Disable counting noise");
    cmd->add_option("--steps", [&flags](const std::vector<std::string>& v) {
        flags.steps = std::stoi(v.back());
        return true;
    }, "Walk steps override");
    cmd->add_option("--budget", [&flags](const std::vector<std::string>& v) {
        flags.budget = std::stoull(v.back());
        return true;
    }, "Evaluation budget override");
    cmd->add_option("--repeats", [&flags](const std::vector<std::string>& v) {
        flags.repeats = std::stoi(v.back());
        return true;
    }, "Repeats override");
}

qwopt::ExperimentConfig load_with_overrides(const CommonFlags& flags,
                                            const std::string& expected_kind) {
    qwopt::ExperimentConfig cfg = qwopt::load_config_file(flags.config_path);
    if (cfg.experiment != expected_kind) {
        throw qwopt::ConfigError("config experiment is \"" + cfg.experiment +
                                 "\" but the subcommand expects \"" + expected_kind + "\"");
    }
    if (flags.seed) cfg.seed = *flags.seed;
    if (flags.out) cfg.out_dir = *flags.out;
    if (flags.noiseless) cfg.noise.enabled = false;
    if (flags.steps) cfg.steps = *flags.steps;
    if (flags.budget) cfg.budget = *flags.budget;
    if (flags.repeats) cfg.repeats = *flags.repeats;
    return cfg;
}

int run_kind(const CommonFlags& flags, const std::string& kind) {
    const qwopt::ExperimentConfig cfg = load_with_overrides(flags, kind);
    const std::filesystem::path out = cfg.out_dir;
    qwopt::run_experiment(cfg, out);
    std::cout << "wrote " << (out / "summary.csv").string() << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"quantum-walk state engineering with surrogate optimization"};
    app.require_subcommand(1);

    CommonFlags engineer_flags, perturb_flags, sweep_flags, compare_flags, eval_flags;

    auto* engineer = app.add_subcommand("engineer", "Optimize target states against a counting oracle");
    add_common(engineer, engineer_flags, true);

    auto* perturb = app.add_subcommand("perturb", "Engineering under random waveplate offsets with degradation checks");
    add_common(perturb, perturb_flags, true);

    auto* sweep = app.add_subcommand("sweep", "Evaluations-to-threshold versus walk size");
    add_common(sweep, sweep_flags, true);

    auto* compare = app.add_subcommand("compare", "Surrogate optimizer versus random search and Powell");
    add_common(compare, compare_flags, true);

    auto* eval = app.add_subcommand("eval", "Score one explicit parameter vector");
    add_common(eval, eval_flags, false);
    std::string eval_target;
    std::vector<double> eval_theta;
    eval->add_option("--target", eval_target, "Target JSON (used when no config is given)");
    eval->add_option("--theta-deg", eval_theta, "Flat parameter vector in degrees")
        ->required()
        ->delimiter(',');

    auto* report = app.add_subcommand("report", "Aggregate existing traces into mean/std curves");
    std::string report_meta;
    std::string report_out;
    report->add_option("--meta", report_meta, "meta.json of a finished experiment")->required();
    report->add_option("--out", report_out, "Output CSV path (default: stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (engineer->parsed()) return run_kind(engineer_flags, "engineer");
        if (perturb->parsed()) return run_kind(perturb_flags, "perturb");
        if (sweep->parsed()) return run_kind(sweep_flags, "sweep");
        if (compare->parsed()) return run_kind(compare_flags, "compare");

        if (eval->parsed()) {
            qwopt::ExperimentConfig cfg;
            if (!eval_flags.config_path.empty()) {
                cfg = qwopt::load_config_file(eval_flags.config_path);
            } else {
                cfg.experiment = "engineer";
                if (eval_target.empty()) {
                    throw qwopt::ConfigError("eval requires --config or --target");
                }
                cfg.targets.push_back(qwopt::parse_target(nlohmann::json::parse(eval_target)));
            }
            if (eval_flags.seed) cfg.seed = *eval_flags.seed;
            if (eval_flags.noiseless) cfg.noise.enabled = false;
            if (eval_flags.steps) cfg.steps = *eval_flags.steps;
            const int n = qwopt::param_count(cfg.steps);
            if (static_cast<int>(eval_theta.size()) != n) {
                throw qwopt::ConfigError("theta-deg must have " + std::to_string(n) +
                                         " entries for " + std::to_string(cfg.steps) + " steps");
            }
            Eigen::VectorXd theta(n);
            for (int i = 0; i < n; ++i) theta(i) = eval_theta[i];
            const qwopt::PointScore score = qwopt::score_point(cfg, theta);
            nlohmann::json out = {
                {"exact_fidelity", score.exact_fidelity},
                {"success_probability", score.success_probability},
                {"cost", score.cost},
            };
            if (score.noisy_estimate) out["noisy_estimate"] = *score.noisy_estimate;
            std::cout << out.dump(2) << "\n";
            return kExitOk;
        }

        if (report->parsed()) {
            const std::string csv = qwopt::report_from_meta(report_meta);
            if (report_out.empty()) {
                std::cout << csv;
            } else {
                qwopt::write_text_file(report_out, csv);
                std::cout << "wrote " << report_out << "\n";
            }
            return kExitOk;
        }
    } catch (const qwopt::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitOk;
}
