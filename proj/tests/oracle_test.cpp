#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qwopt/oracle.hpp"

#include <cmath>

using namespace qwopt;

namespace {

Oracle::Setup base_setup(TargetState target, std::uint64_t seed = 1) {
    Oracle::Setup setup;
    setup.steps = target.half_width;
    setup.target = std::move(target);
    setup.seed = seed;
    return setup;
}

}  // namespace

TEST_CASE("evaluate_exact on the identity-coin walk") {
    Oracle oracle(base_setup(basis_target(3, 1)));
    const Eigen::VectorXd zeros = Eigen::VectorXd::Zero(8);
    CHECK(oracle.evaluate_exact(zeros) == doctest::Approx(1.0).epsilon(1e-12));

    Oracle far(base_setup(basis_target(3, 3)));
    CHECK(far.evaluate_exact(zeros) == doctest::Approx(0.0));

    CHECK_THROWS_AS(oracle.evaluate_exact(Eigen::VectorXd::Zero(7)), std::invalid_argument);
}

TEST_CASE("evaluate_exact matches the walk pipeline composed directly") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 2.0 * 3.14159265358979323846);
    const TargetState target = random_target(4, 77);
    Oracle oracle(base_setup(target));
    for (int trial = 0; trial < 20; ++trial) {
        Eigen::VectorXd theta(8);
        for (Eigen::Index i = 0; i < 8; ++i) theta(i) = u(rng);
        const WalkState out = evolve(WalkParams::from_flat(3, theta),
                                     WalkState::initial(3, Oracle::Setup::default_input_coin()));
        const Projection p = project_coin(out, Oracle::Setup::default_projection_axis());
        const double direct = p.null_projection ? 0.0 : fidelity(target, p.state);
        CHECK(oracle.evaluate_exact(theta) == direct);
    }
}

TEST_CASE("simulate_counts degenerate probabilities") {
    Rng rng(3);
    NoiseModel noise{1e4, true};
    Eigen::VectorXd p(4);
    p << 1.0, 0.0, 0.0, 0.0;
    const auto counts = simulate_counts(p, noise, rng);
    CHECK(counts[0] > 0);
    CHECK(counts[1] == 0);
    CHECK(counts[2] == 0);
    CHECK(counts[3] == 0);

    p.setZero();
    for (std::uint64_t c : simulate_counts(p, noise, rng)) CHECK(c == 0);

    CHECK_THROWS_AS(simulate_counts(p, NoiseModel{0.0, true}, rng), std::invalid_argument);
}

TEST_CASE("simulate_counts mean matches lambda * p") {
    Rng rng(4);
    NoiseModel noise{1e4, true};
    Eigen::VectorXd p(4);
    p << 0.5, 0.5, 0.0, 0.0;
    const int trials = 2000;
    double mean = 0.0, mean_sq = 0.0;
    for (int i = 0; i < trials; ++i) {
        const auto counts = simulate_counts(p, noise, rng);
        mean += static_cast<double>(counts[0]);
        mean_sq += static_cast<double>(counts[0]) * static_cast<double>(counts[0]);
    }
    mean /= trials;
    mean_sq /= trials;
    const double se = std::sqrt((mean_sq - mean * mean) / trials);
    CHECK(std::abs(mean - 5000.0) < 3.0 * se);
}

TEST_CASE("estimate_fidelity endpoints") {
    Oracle oracle(base_setup(basis_target(3, 1)));
    const Eigen::VectorXd zeros = Eigen::VectorXd::Zero(8);
    CHECK(oracle.estimate_fidelity(zeros) == doctest::Approx(1.0).epsilon(1e-9));

    Oracle anti(base_setup(basis_target(3, 3)));
    CHECK(anti.estimate_fidelity(zeros) == 0.0);
}

TEST_CASE("estimate_fidelity is exact when noise is disabled") {
    auto setup = base_setup(random_target(4, 13));
    setup.noise.enabled = false;
    Oracle oracle(setup);
    const Eigen::VectorXd zeros = Eigen::VectorXd::Zero(8);
    CHECK(oracle.estimate_fidelity(zeros) == oracle.evaluate_exact(zeros));
}

TEST_CASE("estimate_fidelity statistics at F = 0.5") {
    // identity coins produce walker |1>; (|1> + |3>)/sqrt(2) has fidelity 0.5
    auto setup = base_setup(superposition_target(3, 1, 3, 1.0, 1.0), 17);
    Oracle oracle(setup);
    const Eigen::VectorXd zeros = Eigen::VectorXd::Zero(8);
    CHECK(oracle.evaluate_exact(zeros) == doctest::Approx(0.5).epsilon(1e-12));

    const int trials = 500;
    double mean = 0.0, mean_sq = 0.0;
    for (int i = 0; i < trials; ++i) {
        const double f = oracle.estimate_fidelity(zeros);
        mean += f;
        mean_sq += f * f;
    }
    mean /= trials;
    mean_sq /= trials;
    const double std_f = std::sqrt(mean_sq - mean * mean);
    const double se = std_f / std::sqrt(static_cast<double>(trials));
    CHECK(std::abs(mean - 0.5) < 3.0 * se);
    // theory: sqrt(F(1-F)/lambda) = 5e-3
    CHECK(std_f > 3.5e-3);
    CHECK(std_f < 6.5e-3);
}

TEST_CASE("estimator bias vanishes as lambda grows") {
    for (double f_true : {0.1, 0.5, 0.9}) {
        const TargetState target =
            superposition_target(3, 1, 3, std::sqrt(f_true), std::sqrt(1.0 - f_true));
        auto setup = base_setup(target, 23);
        setup.noise.lambda = 1e6;
        Oracle oracle(setup);
        const Eigen::VectorXd zeros = Eigen::VectorXd::Zero(8);
        REQUIRE(oracle.evaluate_exact(zeros) == doctest::Approx(f_true).epsilon(1e-9));
        double mean = 0.0;
        const int trials = 1000;
        for (int i = 0; i < trials; ++i) mean += oracle.estimate_fidelity(zeros);
        mean /= trials;
        CHECK(std::abs(mean - f_true) < 1e-3);
    }
}

TEST_CASE("cost increments the counter and complements the estimate") {
    auto setup = base_setup(basis_target(3, 1));
    setup.noise.enabled = false;
    Oracle oracle(setup);
    const Eigen::VectorXd zeros = Eigen::VectorXd::Zero(8);
    CHECK(oracle.cost(zeros) == doctest::Approx(0.0));
    for (int i = 0; i < 4; ++i) oracle.cost(zeros);
    CHECK(oracle.evaluations() == 5);

    Oracle anti(base_setup(basis_target(3, 3)));
    CHECK(anti.cost(zeros) == doctest::Approx(1.0));
}

TEST_CASE("deterministic cost when noise and perturbation are disabled") {
    auto setup = base_setup(random_target(4, 3));
    setup.noise.enabled = false;
    Oracle a(setup);
    Oracle b(setup);
    const Eigen::VectorXd zeros = Eigen::VectorXd::Zero(8);
    for (int i = 0; i < 5; ++i) CHECK(a.cost(zeros) == b.cost(zeros));
}

TEST_CASE("perturb_step honors q = 0 and the degenerate normal") {
    auto setup = base_setup(basis_target(3, 1));
    setup.perturbation.enabled = true;
    setup.perturbation.probability_q = 0.0;
    setup.perturbation.handles = PerturbationConfig::default_handles();
    Oracle quiet(setup);
    const Eigen::VectorXd zeros = Eigen::VectorXd::Zero(8);
    for (int i = 0; i < 50; ++i) quiet.cost(zeros);
    CHECK(quiet.event_log().empty());
    CHECK(quiet.hidden_offsets().cwiseAbs().maxCoeff() == 0.0);

    setup.perturbation.probability_q = 1.0;
    setup.perturbation.offset_std_rad = 0.0;
    Oracle loud(setup);
    for (int i = 0; i < 3; ++i) loud.cost(zeros);
    CHECK(loud.event_log().size() == 6);  // two handles per evaluation
    const int idx_step2_hwp = flat_index(3, true, 1, 1);
    const int idx_step3_qwp = flat_index(3, true, 2, 0);
    CHECK(loud.hidden_offsets()(idx_step2_hwp) == doctest::Approx(3.0 * deg_to_rad(-30.0)));
    CHECK(loud.hidden_offsets()(idx_step3_qwp) == doctest::Approx(3.0 * deg_to_rad(-30.0)));
}

TEST_CASE("perturbation offsets follow the configured normal") {
    auto setup = base_setup(basis_target(3, 1), 29);
    setup.perturbation.enabled = true;
    setup.perturbation.probability_q = 1.0;
    setup.perturbation.handles = {{1, 1}};
    Oracle oracle(setup);
    double mean = 0.0;
    const int draws = 10000;
    for (int i = 0; i < draws; ++i) {
        const auto events = oracle.perturb_step();
        REQUIRE(events.size() == 1);
        mean += rad_to_deg(events[0].delta_rad);
    }
    mean /= draws;
    CHECK(std::abs(mean - (-30.0)) < 3.0 * 5.0 / std::sqrt(static_cast<double>(draws)));
}

TEST_CASE("hidden offsets act additively on the parameters") {
    auto setup = base_setup(random_target(4, 41));
    setup.perturbation.enabled = true;
    setup.perturbation.probability_q = 0.0;
    setup.perturbation.forced = {{1, {1, 1}, deg_to_rad(-30.0)},
                                 {1, {2, 0}, deg_to_rad(11.0)}};
    Oracle oracle(setup);
    const Eigen::VectorXd theta = Eigen::VectorXd::Constant(8, 0.3);
    oracle.cost(theta);  // applies the forced offsets at evaluation 1
    Eigen::VectorXd shifted = theta;
    shifted(flat_index(3, true, 1, 1)) += deg_to_rad(-30.0);
    shifted(flat_index(3, true, 2, 0)) += deg_to_rad(11.0);

    Oracle clean(base_setup(random_target(4, 41)));
    CHECK(oracle.evaluate_exact(theta) == clean.evaluate_exact(shifted));
}

TEST_CASE("seeded oracle reproduces its estimate and event sequence") {
    auto setup = base_setup(random_target(4, 51), 99);
    setup.perturbation.enabled = true;
    setup.perturbation.probability_q = 0.05;
    Oracle a(setup);
    Oracle b(setup);
    const Eigen::VectorXd theta = Eigen::VectorXd::Constant(8, 1.0);
    for (int i = 0; i < 100; ++i) CHECK(a.cost(theta) == b.cost(theta));
    REQUIRE(a.event_log().size() == b.event_log().size());
    for (std::size_t i = 0; i < a.event_log().size(); ++i) {
        CHECK(a.event_log()[i].eval == b.event_log()[i].eval);
        CHECK(a.event_log()[i].delta_rad == b.event_log()[i].delta_rad);
    }
}

TEST_CASE("basis probabilities close to one for every queried parameter vector") {
    std::mt19937_64 rng(61);
    std::uniform_real_distribution<double> u(0.0, 2.0 * 3.14159265358979323846);
    Oracle oracle(base_setup(random_target(4, 61)));
    for (int trial = 0; trial < 50; ++trial) {
        Eigen::VectorXd theta(8);
        for (Eigen::Index i = 0; i < 8; ++i) theta(i) = u(rng);
        const auto probs = oracle.basis_probabilities(theta);
        REQUIRE(probs.has_value());
        CHECK(std::abs(probs->sum() - 1.0) < 1e-12);
    }
}
