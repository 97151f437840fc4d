#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qwopt/experiments.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace qwopt;
using nlohmann::json;

namespace {

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

ExperimentConfig tiny_engineer(std::uint64_t seed) {
    json doc = {
        {"experiment", "engineer"},
        {"steps", 3},
        {"targets", {{{"kind", "basis"}, {"m", 1}}}},
        {"repeats", 1},
        {"budget", 40},
        {"seed", seed},
        {"noise", {{"lambda", 1e4}, {"enabled", true}}},
    };
    return parse_config(doc);
}

Trace constant_trace(double value, int length) {
    Trace t;
    for (int i = 0; i < length; ++i) {
        IterationRecord rec;
        rec.eval = i + 1;
        rec.theta = Eigen::VectorXd::Zero(2);
        rec.cost = value;
        rec.best = value;
        t.records.push_back(rec);
    }
    return t;
}

}  // namespace

TEST_CASE("degradation rule") {
    CHECK(check_degradation(0.05, 0.02, 0.02) == DegradationDecision::restart);
    CHECK(check_degradation(0.04, 0.02, 0.02) == DegradationDecision::keep_going);
    for (double x : {0.0, 0.3, 0.9}) {
        CHECK(check_degradation(x, x, 0.0) == DegradationDecision::keep_going);
    }
    CHECK_THROWS_AS(check_degradation(0.1, 0.1, -1.0), std::invalid_argument);
}

TEST_CASE("engineering traces have exactly budget records") {
    const ExperimentConfig cfg = tiny_engineer(5);
    const RunResult run = engineer_single(cfg, 0, 0);
    CHECK(run.trace.records.size() == 40);
    CHECK(run.trace.summary.evaluations == 40);
    CHECK(run.events.empty());
    CHECK(run.trace.summary.exact_fidelity.has_value());
}

TEST_CASE("noiseless engineering of a basis target succeeds in most seeded runs") {
    json doc = {
        {"experiment", "engineer"},
        {"steps", 3},
        {"targets", {{{"kind", "basis"}, {"m", 1}}}},
        {"repeats", 10},
        {"budget", 300},
        {"seed", 424242},
        {"noise", {{"lambda", 1e4}, {"enabled", false}}},
    };
    const ExperimentConfig cfg = parse_config(doc);
    int hits = 0;
    for (int r = 0; r < 10; ++r) {
        const RunResult run = engineer_single(cfg, 0, r);
        REQUIRE(run.trace.summary.exact_fidelity.has_value());
        if (*run.trace.summary.exact_fidelity >= 0.999) ++hits;
    }
    CHECK(hits >= 9);
}

TEST_CASE("forced offset triggers a degradation restart at the next check") {
    json doc = {
        {"experiment", "perturb"},
        {"steps", 3},
        {"targets", {{{"kind", "basis"}, {"m", 1}}}},
        {"repeats", 1},
        {"budget", 260},
        {"seed", 7},
        {"check_period", 10},
        {"restart_threshold", 0.02},
        {"perturbation",
         {{"q", 0.0},
          {"forced", {{{"eval", 150}, {"step", 2}, {"angle", 2}, {"delta_deg", -30.0}}}}}},
    };
    const ExperimentConfig cfg = parse_config(doc);
    const RunResult run = perturb_single(cfg, 0, 0);

    REQUIRE(run.events.size() == 1);
    CHECK(run.events[0].eval == 150);
    CHECK(run.events[0].forced);

    std::uint64_t restart_eval = 0;
    int checks_before_150 = 0;
    for (const IterationRecord& rec : run.trace.records) {
        if (rec.event == EventTag::degradation_check && rec.eval < 150) ++checks_before_150;
        if (rec.event == EventTag::degradation_restart && restart_eval == 0) {
            restart_eval = rec.eval;
        }
    }
    CHECK(checks_before_150 > 0);  // the run had converged-and-checked before the kick
    REQUIRE(restart_eval > 150);
    CHECK(restart_eval <= 150 + cfg.check_period + 1);

    // the perturbed measurement at evaluation 150 carries the perturbation tag
    for (const IterationRecord& rec : run.trace.records) {
        if (rec.eval == 150) CHECK(rec.event == EventTag::perturbation);
    }
}

TEST_CASE("degradation checks consume exactly one evaluation each") {
    json doc = {
        {"experiment", "perturb"},
        {"steps", 3},
        {"targets", {{{"kind", "basis"}, {"m", 1}}}},
        {"repeats", 1},
        {"budget", 120},
        {"seed", 3},
        {"check_period", 10},
        {"restart_threshold", 0.02},
        {"perturbation", {{"q", 0.0}}},
    };
    const ExperimentConfig cfg = parse_config(doc);
    const RunResult run = perturb_single(cfg, 0, 0);
    CHECK(run.trace.records.size() == 120);
    std::uint64_t last = 0;
    int checks = 0;
    for (const IterationRecord& rec : run.trace.records) {
        CHECK(rec.eval == last + 1);  // every oracle evaluation appears once
        last = rec.eval;
        if (rec.event == EventTag::degradation_check) ++checks;
    }
    // one check per ten optimizer evaluations once an incumbent exists
    CHECK(checks == 10);
}

TEST_CASE("table defaults match the perturbation study") {
    TargetSpec basis1;
    basis1.kind = TargetSpec::Kind::basis;
    basis1.m = 1;
    CHECK(table_defaults(basis1).probability_q == 0.0015);
    CHECK(table_defaults(basis1).restart_threshold == 0.02);

    TargetSpec sr31;
    sr31.kind = TargetSpec::Kind::real_superposition;
    sr31.m1 = -3;
    sr31.m2 = 3;
    CHECK(table_defaults(sr31).probability_q == 0.0015);
    CHECK(table_defaults(sr31).restart_threshold == 0.05);

    TargetSpec sr11 = sr31;
    sr11.m1 = -1;
    sr11.m2 = 1;
    CHECK(table_defaults(sr11).probability_q == 0.008);

    TargetSpec sc11 = sr11;
    sc11.kind = TargetSpec::Kind::complex_superposition;
    CHECK(table_defaults(sc11).probability_q == 0.004);

    // a perturb config without q/threshold picks them up from the table
    json doc = {
        {"experiment", "perturb"},
        {"steps", 3},
        {"targets", {{{"kind", "basis"}, {"m", 1}}}},
        {"budget", 50},
    };
    const ExperimentConfig cfg = parse_config(doc);
    CHECK(cfg.perturbation.probability_q == 0.0015);
    REQUIRE(cfg.restart_threshold.has_value());
    CHECK(*cfg.restart_threshold == 0.02);
}

TEST_CASE("sweep summary reports the parameter counts") {
    json doc = {
        {"experiment", "sweep"},
        {"steps_list", {1, 2}},
        {"targets_per_step", 2},
        {"budget", 150},
        {"seed", 11},
        {"fidelity_threshold", 0.9},
    };
    const ExperimentConfig cfg = parse_config(doc);
    const ExperimentResult result = run_sweep(cfg);
    CHECK(result.runs.size() == 4);
    std::istringstream csv(result.summary_csv);
    std::string line;
    std::getline(csv, line);
    CHECK(line == "steps,n_par,runs,converged,capped,mean_evals,se_evals");
    std::getline(csv, line);
    CHECK(line.rfind("1,2,2,", 0) == 0);
    std::getline(csv, line);
    CHECK(line.rfind("2,5,2,", 0) == 0);
    CHECK(param_count(17) == 50);
}

TEST_CASE("aggregate means and deviations") {
    const Trace flat_a = constant_trace(0.2, 5);
    const Trace flat_b = constant_trace(0.4, 5);

    // all traces identical: mean is that curve, spread is zero
    const AggregateCurve same = aggregate({{&flat_a}, {&flat_a}}, 5);
    for (double v : same.mean) CHECK(v == doctest::Approx(0.2));
    for (double v : same.std_across_states) CHECK(v == 0.0);

    // two states with constant curves 0.2 and 0.4
    const AggregateCurve mixed = aggregate({{&flat_a}, {&flat_b}}, 5);
    for (double v : mixed.mean) CHECK(v == doctest::Approx(0.3));

    // averaging repeats within a state first changes the spread, not the mean
    const Trace r1 = constant_trace(0.1, 5);
    const Trace r2 = constant_trace(0.3, 5);
    const Trace r3 = constant_trace(0.4, 5);
    const Trace r4 = constant_trace(0.4, 5);
    const AggregateCurve grouped = aggregate({{&r1, &r2}, {&r3, &r4}}, 5);
    const AggregateCurve flattened = aggregate({{&r1}, {&r2}, {&r3}, {&r4}}, 5);
    CHECK(grouped.mean[0] == doctest::Approx(0.3));
    CHECK(flattened.mean[0] == doctest::Approx(0.3));
    CHECK(grouped.std_across_states[0] != flattened.std_across_states[0]);

    CHECK_THROWS_AS(aggregate({{&flat_a}, {}}, 5), std::invalid_argument);
}

TEST_CASE("best curves pad forward") {
    Trace t = constant_trace(0.5, 3);
    t.records[1].best = 0.3;
    t.records[2].best = 0.3;
    const std::vector<double> curve = best_curve(t, 5);
    CHECK(curve == std::vector<double>{0.5, 0.3, 0.3, 0.3, 0.3});
}

TEST_CASE("config parsing rejects unknown keys and bad values") {
    json doc = {{"experiment", "engineer"},
                {"steps", 3},
                {"targets", {{{"kind", "basis"}, {"m", 1}}}},
                {"typo_key", 1}};
    CHECK_THROWS_AS(parse_config(doc), ConfigError);

    json bad_nested = {{"experiment", "engineer"},
                       {"steps", 3},
                       {"targets", {{{"kind", "basis"}, {"m", 1}}}},
                       {"noise", {{"lambda", 1e4}, {"oops", true}}}};
    CHECK_THROWS_AS(parse_config(bad_nested), ConfigError);

    json bad_target = {{"experiment", "engineer"},
                       {"steps", 3},
                       {"targets", {{{"kind", "basis"}, {"m", 2}}}}};  // parity mismatch
    CHECK_THROWS_AS(parse_config(bad_target), ConfigError);

    json bad_kind = {{"experiment", "mystery"}};
    CHECK_THROWS_AS(parse_config(bad_kind), ConfigError);

    json no_threshold_needed = {{"experiment", "sweep"}, {"steps_list", {3}}};
    CHECK_NOTHROW(parse_config(no_threshold_needed));
}

TEST_CASE("target presets materialize the advertised states") {
    TargetSpec sr;
    sr.kind = TargetSpec::Kind::real_superposition;
    sr.m1 = -1;
    sr.m2 = 1;
    sr.sign = -1;
    const TargetState srs = sr.realize(3, 0, 0);
    CHECK(srs.amps((-1 + 3) / 2).real() == doctest::Approx(1.0 / std::sqrt(2.0)));
    CHECK(srs.amps((1 + 3) / 2).real() == doctest::Approx(-1.0 / std::sqrt(2.0)));

    TargetSpec sc = sr;
    sc.kind = TargetSpec::Kind::complex_superposition;
    sc.sign = 1;
    const TargetState scs = sc.realize(3, 0, 0);
    CHECK(scs.amps((1 + 3) / 2).imag() == doctest::Approx(1.0 / std::sqrt(2.0)));

    TargetSpec rand_spec;
    rand_spec.kind = TargetSpec::Kind::random;
    const TargetState r0 = rand_spec.realize(3, 99, 0);
    const TargetState r1 = rand_spec.realize(3, 99, 1);
    CHECK(fidelity(r0, r0) == doctest::Approx(1.0));
    CHECK(fidelity(r0, r1) < 0.999);  // distinct draws
}

TEST_CASE("persisted outputs are byte-identical across reruns") {
    namespace fs = std::filesystem;
    const fs::path base = fs::temp_directory_path() / "qwopt_harness_test";
    fs::remove_all(base);
    const ExperimentConfig cfg = tiny_engineer(321);

    const ExperimentResult first = run_experiment(cfg, base / "a");
    const ExperimentResult second = run_experiment(cfg, base / "b");
    CHECK(first.summary_csv == second.summary_csv);

    for (const std::string name : {"trace_s0_r0.jsonl", "summary.csv", "meta.json"}) {
        CHECK(slurp(base / "a" / name) == slurp(base / "b" / name));
    }

    // a different seed changes the trace bytes
    ExperimentConfig other = tiny_engineer(322);
    run_experiment(other, base / "c");
    CHECK(slurp(base / "a" / "trace_s0_r0.jsonl") != slurp(base / "c" / "trace_s0_r0.jsonl"));
    fs::remove_all(base);
}

TEST_CASE("jsonl round trip and report aggregation") {
    namespace fs = std::filesystem;
    const fs::path base = fs::temp_directory_path() / "qwopt_report_test";
    fs::remove_all(base);
    const ExperimentConfig cfg = tiny_engineer(17);
    run_experiment(cfg, base);

    const Trace loaded = read_jsonl(base / "trace_s0_r0.jsonl");
    CHECK(loaded.records.size() == cfg.budget);
    CHECK(loaded.records.front().eval == 1);

    const std::string csv = report_from_meta(base / "meta.json");
    CHECK(csv.rfind("label,eval,mean_best_cost", 0) == 0);
    // one line per evaluation plus the header
    CHECK(std::count(csv.begin(), csv.end(), '\n') == static_cast<long>(cfg.budget) + 1);
    fs::remove_all(base);
}

TEST_CASE("recovery ratios split the trace at perturbation instants") {
    Trace t = constant_trace(0.5, 10);
    // fidelities: before the kick best is 0.9; afterwards best is 0.45
    for (int i = 0; i < 10; ++i) t.records[i].cost = 1.0 - 0.1;
    t.records[3].cost = 0.1;   // fidelity 0.9 at eval 4
    t.records[7].cost = 0.55;  // fidelity 0.45 at eval 8
    std::vector<PerturbationEvent> events;
    events.push_back({6, {1, 1}, -0.5, false});
    const std::vector<double> ratios = recovery_ratios(t, events);
    REQUIRE(ratios.size() == 1);
    CHECK(ratios[0] == doctest::Approx(0.45 / 0.9));

    // no events, no ratios
    CHECK(recovery_ratios(t, {}).empty());
}
