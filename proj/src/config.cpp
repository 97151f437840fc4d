#include "qwopt/config.hpp"

#include "qwopt/seeding.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace qwopt {

using nlohmann::json;

namespace {

void reject_unknown_keys(const json& doc, const std::set<std::string>& allowed,
                         const std::string& where) {
    for (const auto& [key, value] : doc.items()) {
        if (!allowed.contains(key)) {
            throw ConfigError("unknown key \"" + key + "\" in " + where);
        }
    }
}

double require_number(const json& doc, const std::string& key, const std::string& where) {
    if (!doc.contains(key) || !doc[key].is_number()) {
        throw ConfigError("missing or non-numeric \"" + key + "\" in " + where);
    }
    return doc[key].get<double>();
}

int get_int(const json& doc, const std::string& key, int fallback, const std::string& where) {
    if (!doc.contains(key)) return fallback;
    if (!doc[key].is_number_integer()) throw ConfigError("\"" + key + "\" must be an integer in " + where);
    return doc[key].get<int>();
}

double get_number(const json& doc, const std::string& key, double fallback, const std::string& where) {
    if (!doc.contains(key)) return fallback;
    if (!doc[key].is_number()) throw ConfigError("\"" + key + "\" must be a number in " + where);
    return doc[key].get<double>();
}

bool get_bool(const json& doc, const std::string& key, bool fallback, const std::string& where) {
    if (!doc.contains(key)) return fallback;
    if (!doc[key].is_boolean()) throw ConfigError("\"" + key + "\" must be a boolean in " + where);
    return doc[key].get<bool>();
}

Eigen::Vector2cd parse_coin_vector(const json& doc, const std::string& where) {
    if (!doc.is_array() || doc.size() != 2) {
        throw ConfigError(where + " must be a 2-element array of [re, im] pairs");
    }
    Eigen::Vector2cd v;
    for (int i = 0; i < 2; ++i) {
        const json& entry = doc[i];
        if (!entry.is_array() || entry.size() != 2 || !entry[0].is_number() || !entry[1].is_number()) {
            throw ConfigError(where + " entries must be [re, im] pairs");
        }
        v(i) = Complex(entry[0].get<double>(), entry[1].get<double>());
    }
    if (std::abs(v.norm() - 1.0) > 1e-9) throw ConfigError(where + " must be normalized");
    return v;
}

PerturbationHandle parse_handle(const json& doc, const std::string& where) {
    reject_unknown_keys(doc, {"step", "angle"}, where);
    PerturbationHandle h;
    // 1-based in config files ("theta2 of step 2"), 0-based internally
    const int step = static_cast<int>(require_number(doc, "step", where));
    const int angle = static_cast<int>(require_number(doc, "angle", where));
    if (step < 1) throw ConfigError("handle step must be >= 1 in " + where);
    if (angle < 1 || angle > 3) throw ConfigError("handle angle must be in 1..3 in " + where);
    h.step = step - 1;
    h.angle = angle - 1;
    return h;
}

}  // namespace

std::string TargetSpec::name() const {
    std::ostringstream s;
    switch (kind) {
        case Kind::basis:
            s << "m" << m;
            break;
        case Kind::real_superposition:
            s << "SR(" << m1 << (sign < 0 ? "," : ",+") << m2 << ")";
            break;
        case Kind::complex_superposition:
            s << "SC(" << m1 << (sign < 0 ? "," : ",+") << m2 << ")";
            break;
        case Kind::random:
            s << "random";
            break;
        case Kind::explicit_amps:
            s << "explicit";
            break;
    }
    return s.str();
}

TargetState TargetSpec::realize(int steps, std::uint64_t seed, int index) const {
    switch (kind) {
        case Kind::basis:
            return basis_target(steps, m);
        case Kind::real_superposition:
            return superposition_target(steps, m1, m2, 1.0, sign < 0 ? -1.0 : 1.0);
        case Kind::complex_superposition:
            return superposition_target(steps, m1, m2, 1.0,
                                        sign < 0 ? Complex(0.0, -1.0) : Complex(0.0, 1.0));
        case Kind::random:
            return random_target(steps + 1, derive_seed(seed, {stream::target, static_cast<std::uint64_t>(index)}));
        case Kind::explicit_amps: {
            if (amps.size() != steps + 1) {
                throw ConfigError("explicit target dimension does not match the walk band");
            }
            TargetState t;
            t.half_width = steps;
            t.amps = amps.normalized();
            return t;
        }
    }
    throw ConfigError("unreachable target kind");
}

TargetSpec parse_target(const json& doc) {
    if (!doc.is_object() || !doc.contains("kind") || !doc["kind"].is_string()) {
        throw ConfigError("target must be an object with a string \"kind\"");
    }
    const std::string kind = doc["kind"].get<std::string>();
    TargetSpec spec;
    if (kind == "basis") {
        reject_unknown_keys(doc, {"kind", "m"}, "target");
        spec.kind = TargetSpec::Kind::basis;
        spec.m = static_cast<int>(require_number(doc, "m", "target"));
    } else if (kind == "sr" || kind == "sc") {
        reject_unknown_keys(doc, {"kind", "m1", "m2", "sign"}, "target");
        spec.kind = kind == "sr" ? TargetSpec::Kind::real_superposition
                                 : TargetSpec::Kind::complex_superposition;
        spec.m1 = static_cast<int>(require_number(doc, "m1", "target"));
        spec.m2 = static_cast<int>(require_number(doc, "m2", "target"));
        spec.sign = -1;
        if (doc.contains("sign")) {
            const std::string sign = doc["sign"].get<std::string>();
            if (sign == "+") {
                spec.sign = 1;
            } else if (sign == "-") {
                spec.sign = -1;
            } else {
                throw ConfigError("target sign must be \"+\" or \"-\"");
            }
        }
    } else if (kind == "random") {
        reject_unknown_keys(doc, {"kind", "count"}, "target");
        spec.kind = TargetSpec::Kind::random;
        spec.count = get_int(doc, "count", 1, "target");
        if (spec.count < 1) throw ConfigError("random target count must be >= 1");
    } else if (kind == "explicit") {
        reject_unknown_keys(doc, {"kind", "amplitudes"}, "target");
        spec.kind = TargetSpec::Kind::explicit_amps;
        if (!doc.contains("amplitudes") || !doc["amplitudes"].is_array()) {
            throw ConfigError("explicit target requires an \"amplitudes\" array");
        }
        const json& arr = doc["amplitudes"];
        spec.amps.resize(static_cast<Eigen::Index>(arr.size()));
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const json& entry = arr[i];
            if (!entry.is_array() || entry.size() != 2) {
                throw ConfigError("explicit amplitudes must be [re, im] pairs");
            }
            spec.amps(static_cast<Eigen::Index>(i)) =
                Complex(entry[0].get<double>(), entry[1].get<double>());
        }
        if (spec.amps.norm() < 1e-12) throw ConfigError("explicit target must be nonzero");
    } else {
        throw ConfigError("unknown target kind \"" + kind + "\"");
    }
    return spec;
}

PerturbationDefaults table_defaults(const TargetSpec& target) {
    const auto is_pair = [&](int a, int b) {
        return (target.m1 == a && target.m2 == b) || (target.m1 == b && target.m2 == a);
    };
    switch (target.kind) {
        case TargetSpec::Kind::basis:
            return {0.0015, 0.02};
        case TargetSpec::Kind::real_superposition:
            if (is_pair(-3, 3)) return {0.0015, 0.05};
            if (is_pair(-1, 1)) return {0.008, 0.02};
            return {0.0015, 0.02};
        case TargetSpec::Kind::complex_superposition:
            if (is_pair(-1, 1)) return {0.004, 0.02};
            return {0.0015, 0.02};
        default:
            return {0.0015, 0.02};
    }
}

OptimizerConfig ExperimentConfig::optimizer_config(int walk_steps, std::uint64_t opt_seed,
                                                   std::uint64_t opt_budget) const {
    const int n = param_count(walk_steps);
    OptimizerConfig cfg;
    cfg.lower = Eigen::VectorXd::Constant(n, deg_to_rad(bounds_lo_deg));
    cfg.upper = Eigen::VectorXd::Constant(n, deg_to_rad(bounds_hi_deg));
    cfg.budget = opt_budget;
    cfg.seed = opt_seed;
    cfg.init_points = optimizer.init_points;
    cfg.num_global_searches = optimizer.num_global_searches;
    cfg.max_stalled_iterations = optimizer.max_stalled_iterations;
    cfg.refinement_frequency = optimizer.refinement_frequency;
    cfg.min_distance = optimizer.min_distance;
    cfg.ridge = optimizer.ridge;
    cfg.candidate_pool = optimizer.candidate_pool;
    cfg.model_reselect_period = optimizer.model_reselect_period;
    cfg.rbf_gamma = optimizer.rbf_gamma;
    const auto kernel = kernel_from_name(optimizer.initial_kernel);
    if (!kernel) throw ConfigError("unknown RBF kernel \"" + optimizer.initial_kernel + "\"");
    cfg.initial_kernel = *kernel;
    return cfg;
}

ExperimentConfig parse_config(const json& doc) {
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");
    reject_unknown_keys(doc,
                        {"experiment", "steps", "targets", "repeats", "budget", "seed", "out",
                         "noise", "input_coin", "projection_axis", "bounds_deg",
                         "noiseless_rescore", "perturbation", "restart_threshold", "check_period",
                         "steps_list", "targets_per_step", "fidelity_threshold", "algorithms",
                         "optimizer"},
                        "config");

    ExperimentConfig cfg;
    cfg.perturbation.probability_q = -1.0;  // sentinel: resolved per experiment below
    if (!doc.contains("experiment") || !doc["experiment"].is_string()) {
        throw ConfigError("config requires a string \"experiment\"");
    }
    cfg.experiment = doc["experiment"].get<std::string>();
    const std::set<std::string> kinds = {"engineer", "perturb", "sweep", "compare"};
    if (!kinds.contains(cfg.experiment)) {
        throw ConfigError("experiment must be one of engineer|perturb|sweep|compare");
    }

    cfg.steps = get_int(doc, "steps", 3, "config");
    if (cfg.steps < 1) throw ConfigError("steps must be >= 1");
    cfg.repeats = get_int(doc, "repeats", 1, "config");
    if (cfg.repeats < 1) throw ConfigError("repeats must be >= 1");
    const double budget = get_number(doc, "budget", 600, "config");
    if (budget < 1) throw ConfigError("budget must be >= 1");
    cfg.budget = static_cast<std::uint64_t>(budget);
    cfg.seed = static_cast<std::uint64_t>(get_number(doc, "seed", 0, "config"));
    if (doc.contains("out")) {
        if (!doc["out"].is_string()) throw ConfigError("\"out\" must be a string");
        cfg.out_dir = doc["out"].get<std::string>();
    }

    if (doc.contains("targets")) {
        if (!doc["targets"].is_array() || doc["targets"].empty()) {
            throw ConfigError("\"targets\" must be a non-empty array");
        }
        for (const json& t : doc["targets"]) cfg.targets.push_back(parse_target(t));
    }

    if (doc.contains("noise")) {
        const json& noise = doc["noise"];
        reject_unknown_keys(noise, {"lambda", "enabled"}, "noise");
        cfg.noise.lambda = get_number(noise, "lambda", cfg.noise.lambda, "noise");
        cfg.noise.enabled = get_bool(noise, "enabled", cfg.noise.enabled, "noise");
        if (cfg.noise.enabled && cfg.noise.lambda <= 0.0) throw ConfigError("noise lambda must be > 0");
    }

    if (doc.contains("input_coin")) cfg.input_coin = parse_coin_vector(doc["input_coin"], "input_coin");
    if (doc.contains("projection_axis")) {
        cfg.projection_axis = parse_coin_vector(doc["projection_axis"], "projection_axis");
    }

    if (doc.contains("bounds_deg")) {
        const json& b = doc["bounds_deg"];
        if (!b.is_array() || b.size() != 2 || !b[0].is_number() || !b[1].is_number()) {
            throw ConfigError("bounds_deg must be [lo, hi]");
        }
        cfg.bounds_lo_deg = b[0].get<double>();
        cfg.bounds_hi_deg = b[1].get<double>();
        if (!(cfg.bounds_lo_deg < cfg.bounds_hi_deg)) throw ConfigError("bounds_deg must satisfy lo < hi");
    }
    cfg.noiseless_rescore = get_bool(doc, "noiseless_rescore", true, "config");

    if (doc.contains("perturbation")) {
        const json& p = doc["perturbation"];
        reject_unknown_keys(p, {"q", "offset_mean_deg", "offset_std_deg", "handles", "forced", "enabled"},
                            "perturbation");
        cfg.perturbation.enabled = get_bool(p, "enabled", true, "perturbation");
        cfg.perturbation.probability_q = get_number(p, "q", -1.0, "perturbation");
        cfg.perturbation.offset_mean_rad = deg_to_rad(get_number(p, "offset_mean_deg", -30.0, "perturbation"));
        cfg.perturbation.offset_std_rad = deg_to_rad(get_number(p, "offset_std_deg", 5.0, "perturbation"));
        if (cfg.perturbation.offset_std_rad < 0.0) throw ConfigError("offset_std_deg must be >= 0");
        if (p.contains("handles")) {
            if (!p["handles"].is_array()) throw ConfigError("perturbation handles must be an array");
            for (const json& h : p["handles"]) {
                cfg.perturbation.handles.push_back(parse_handle(h, "perturbation handle"));
            }
        }
        if (p.contains("forced")) {
            if (!p["forced"].is_array()) throw ConfigError("perturbation forced must be an array");
            for (const json& f : p["forced"]) {
                reject_unknown_keys(f, {"eval", "step", "angle", "delta_deg"}, "forced offset");
                ForcedOffset forced;
                forced.eval = static_cast<std::uint64_t>(require_number(f, "eval", "forced offset"));
                const int step = static_cast<int>(require_number(f, "step", "forced offset"));
                const int angle = static_cast<int>(require_number(f, "angle", "forced offset"));
                if (step < 1 || angle < 1 || angle > 3) {
                    throw ConfigError("forced offset step must be >= 1 and angle in 1..3");
                }
                forced.handle = {step - 1, angle - 1};
                forced.delta_rad = deg_to_rad(require_number(f, "delta_deg", "forced offset"));
                cfg.perturbation.forced.push_back(forced);
            }
        }
    }
    if (doc.contains("restart_threshold")) {
        cfg.restart_threshold = require_number(doc, "restart_threshold", "config");
        if (*cfg.restart_threshold < 0.0) throw ConfigError("restart_threshold must be >= 0");
    }
    cfg.check_period = get_int(doc, "check_period", 10, "config");
    if (cfg.check_period < 1) throw ConfigError("check_period must be >= 1");

    if (doc.contains("steps_list")) {
        if (!doc["steps_list"].is_array() || doc["steps_list"].empty()) {
            throw ConfigError("steps_list must be a non-empty array");
        }
        for (const json& s : doc["steps_list"]) {
            if (!s.is_number_integer() || s.get<int>() < 1) throw ConfigError("steps_list entries must be >= 1");
            cfg.steps_list.push_back(s.get<int>());
        }
    }
    cfg.targets_per_step = get_int(doc, "targets_per_step", 10, "config");
    if (cfg.targets_per_step < 1) throw ConfigError("targets_per_step must be >= 1");
    cfg.fidelity_threshold = get_number(doc, "fidelity_threshold", 0.98, "config");
    if (cfg.fidelity_threshold <= 0.0 || cfg.fidelity_threshold > 1.0) {
        throw ConfigError("fidelity_threshold must be in (0, 1]");
    }

    if (doc.contains("algorithms")) {
        if (!doc["algorithms"].is_array() || doc["algorithms"].empty()) {
            throw ConfigError("algorithms must be a non-empty array");
        }
        cfg.algorithms.clear();
        const std::set<std::string> known = {"rbf", "random_search", "powell"};
        for (const json& a : doc["algorithms"]) {
            if (!a.is_string() || !known.contains(a.get<std::string>())) {
                throw ConfigError("algorithms entries must be rbf|random_search|powell");
            }
            cfg.algorithms.push_back(a.get<std::string>());
        }
    }

    if (doc.contains("optimizer")) {
        const json& o = doc["optimizer"];
        reject_unknown_keys(o,
                            {"init_points", "num_global_searches", "max_stalled_iterations",
                             "refinement_frequency", "min_distance", "ridge", "candidate_pool",
                             "model_reselect_period", "gamma", "initial_kernel"},
                            "optimizer");
        auto& s = cfg.optimizer;
        s.init_points = get_int(o, "init_points", s.init_points, "optimizer");
        s.num_global_searches = get_int(o, "num_global_searches", s.num_global_searches, "optimizer");
        s.max_stalled_iterations = get_int(o, "max_stalled_iterations", s.max_stalled_iterations, "optimizer");
        s.refinement_frequency = get_int(o, "refinement_frequency", s.refinement_frequency, "optimizer");
        s.min_distance = get_number(o, "min_distance", s.min_distance, "optimizer");
        s.ridge = get_number(o, "ridge", s.ridge, "optimizer");
        s.candidate_pool = get_int(o, "candidate_pool", s.candidate_pool, "optimizer");
        s.model_reselect_period = get_int(o, "model_reselect_period", s.model_reselect_period, "optimizer");
        s.rbf_gamma = get_number(o, "gamma", s.rbf_gamma, "optimizer");
        if (o.contains("initial_kernel")) {
            if (!o["initial_kernel"].is_string()) throw ConfigError("initial_kernel must be a string");
            s.initial_kernel = o["initial_kernel"].get<std::string>();
            if (!kernel_from_name(s.initial_kernel)) {
                throw ConfigError("unknown RBF kernel \"" + s.initial_kernel + "\"");
            }
        }
    }

    // experiment-specific requirements and defaults
    if (cfg.experiment == "engineer" || cfg.experiment == "perturb" || cfg.experiment == "compare") {
        if (cfg.targets.empty()) throw ConfigError(cfg.experiment + " requires \"targets\"");
        for (const TargetSpec& t : cfg.targets) {
            if (t.kind == TargetSpec::Kind::basis &&
                (std::abs(t.m) > cfg.steps || (t.m - cfg.steps) % 2 != 0)) {
                throw ConfigError("basis target |" + std::to_string(t.m) +
                                  "> is outside the reachable band of " + std::to_string(cfg.steps) +
                                  " steps");
            }
        }
    }
    if (cfg.experiment == "perturb") {
        cfg.perturbation.enabled = true;
        if (cfg.perturbation.handles.empty()) {
            cfg.perturbation.handles = PerturbationConfig::default_handles();
        }
        for (const PerturbationHandle& h : cfg.perturbation.handles) {
            if (h.step >= cfg.steps) throw ConfigError("perturbation handle step exceeds walk steps");
            if (h.step == 0 && h.angle == 0) {
                throw ConfigError("theta1 of step 1 is constrained and cannot be perturbed");
            }
        }
        if (cfg.perturbation.probability_q < 0.0 || !cfg.restart_threshold) {
            // fall back to the reference study values for this target family
            const PerturbationDefaults d = table_defaults(cfg.targets.front());
            if (cfg.perturbation.probability_q < 0.0) cfg.perturbation.probability_q = d.probability_q;
            if (!cfg.restart_threshold) cfg.restart_threshold = d.restart_threshold;
        }
        if (cfg.perturbation.probability_q < 0.0 || cfg.perturbation.probability_q > 1.0) {
            throw ConfigError("perturbation q must be in [0, 1]");
        }
    } else {
        if (cfg.perturbation.probability_q < 0.0) cfg.perturbation.probability_q = 0.0;
        cfg.perturbation.enabled = false;
    }
    if (cfg.experiment == "sweep" && cfg.steps_list.empty()) {
        throw ConfigError("sweep requires \"steps_list\"");
    }

    return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ConfigError("config is not valid JSON: " + std::string(e.what()));
    }
    return parse_config(doc);
}

json config_to_json(const ExperimentConfig& cfg) {
    json targets = json::array();
    for (const TargetSpec& t : cfg.targets) {
        json entry;
        switch (t.kind) {
            case TargetSpec::Kind::basis:
                entry = {{"kind", "basis"}, {"m", t.m}};
                break;
            case TargetSpec::Kind::real_superposition:
                entry = {{"kind", "sr"}, {"m1", t.m1}, {"m2", t.m2}, {"sign", t.sign < 0 ? "-" : "+"}};
                break;
            case TargetSpec::Kind::complex_superposition:
                entry = {{"kind", "sc"}, {"m1", t.m1}, {"m2", t.m2}, {"sign", t.sign < 0 ? "-" : "+"}};
                break;
            case TargetSpec::Kind::random:
                entry = {{"kind", "random"}, {"count", t.count}};
                break;
            case TargetSpec::Kind::explicit_amps: {
                json amps = json::array();
                for (Eigen::Index i = 0; i < t.amps.size(); ++i) {
                    amps.push_back({t.amps(i).real(), t.amps(i).imag()});
                }
                entry = {{"kind", "explicit"}, {"amplitudes", amps}};
                break;
            }
        }
        targets.push_back(entry);
    }

    json handles = json::array();
    for (const PerturbationHandle& h : cfg.perturbation.handles) {
        handles.push_back({{"step", h.step + 1}, {"angle", h.angle + 1}});
    }
    json forced = json::array();
    for (const ForcedOffset& f : cfg.perturbation.forced) {
        forced.push_back({{"eval", f.eval},
                          {"step", f.handle.step + 1},
                          {"angle", f.handle.angle + 1},
                          {"delta_deg", rad_to_deg(f.delta_rad)}});
    }

    json doc = {
        {"experiment", cfg.experiment},
        {"steps", cfg.steps},
        {"targets", targets},
        {"repeats", cfg.repeats},
        {"budget", cfg.budget},
        {"seed", cfg.seed},
        {"out", cfg.out_dir},
        {"noise", {{"lambda", cfg.noise.lambda}, {"enabled", cfg.noise.enabled}}},
        {"input_coin",
         {{cfg.input_coin(0).real(), cfg.input_coin(0).imag()},
          {cfg.input_coin(1).real(), cfg.input_coin(1).imag()}}},
        {"projection_axis",
         {{cfg.projection_axis(0).real(), cfg.projection_axis(0).imag()},
          {cfg.projection_axis(1).real(), cfg.projection_axis(1).imag()}}},
        {"bounds_deg", {cfg.bounds_lo_deg, cfg.bounds_hi_deg}},
        {"noiseless_rescore", cfg.noiseless_rescore},
        {"perturbation",
         {{"enabled", cfg.perturbation.enabled},
          {"q", cfg.perturbation.probability_q},
          {"offset_mean_deg", rad_to_deg(cfg.perturbation.offset_mean_rad)},
          {"offset_std_deg", rad_to_deg(cfg.perturbation.offset_std_rad)},
          {"handles", handles},
          {"forced", forced}}},
        {"check_period", cfg.check_period},
        {"steps_list", cfg.steps_list},
        {"targets_per_step", cfg.targets_per_step},
        {"fidelity_threshold", cfg.fidelity_threshold},
        {"algorithms", cfg.algorithms},
        {"optimizer",
         {{"init_points", cfg.optimizer.init_points},
          {"num_global_searches", cfg.optimizer.num_global_searches},
          {"max_stalled_iterations", cfg.optimizer.max_stalled_iterations},
          {"refinement_frequency", cfg.optimizer.refinement_frequency},
          {"min_distance", cfg.optimizer.min_distance},
          {"ridge", cfg.optimizer.ridge},
          {"candidate_pool", cfg.optimizer.candidate_pool},
          {"model_reselect_period", cfg.optimizer.model_reselect_period},
          {"gamma", cfg.optimizer.rbf_gamma},
          {"initial_kernel", cfg.optimizer.initial_kernel}}},
    };
    if (cfg.restart_threshold) doc["restart_threshold"] = *cfg.restart_threshold;
    return doc;
}

}  // namespace qwopt
