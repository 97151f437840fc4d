#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qwopt/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

using namespace qwopt;

namespace {

BaselineConfig box_config(int dim, std::uint64_t budget, std::uint64_t seed,
                          double lo = 0.0, double hi = 1.0) {
    BaselineConfig cfg;
    cfg.lower = Eigen::VectorXd::Constant(dim, lo);
    cfg.upper = Eigen::VectorXd::Constant(dim, hi);
    cfg.budget = budget;
    cfg.seed = seed;
    return cfg;
}

double sphere4(const Eigen::VectorXd& x) {
    return (x.array() - 0.5).matrix().squaredNorm();
}

double shifted_quadratic(const Eigen::VectorXd& x) {
    return (x(0) - 1.0) * (x(0) - 1.0) + (x(1) + 2.0) * (x(1) + 2.0);
}

void check_monotone_best(const Trace& trace) {
    double best = 1e300;
    for (const IterationRecord& rec : trace.records) {
        best = std::min(best, rec.cost);
        CHECK(rec.best == best);
    }
}

}  // namespace

TEST_CASE("random search evaluates exactly the budget, in bounds, monotone") {
    const BaselineConfig cfg = box_config(4, 200, 11);
    const Trace trace = random_search(sphere4, cfg);
    REQUIRE(trace.records.size() == 200);
    check_monotone_best(trace);
    for (const IterationRecord& rec : trace.records) {
        CHECK((rec.theta.array() >= 0.0).all());
        CHECK((rec.theta.array() <= 1.0).all());
    }
}

TEST_CASE("random search is reproducible") {
    const Trace a = random_search(sphere4, box_config(4, 50, 21));
    const Trace b = random_search(sphere4, box_config(4, 50, 21));
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        CHECK(a.records[i].cost == b.records[i].cost);
    }
}

TEST_CASE("random search best matches the order-statistic oracle") {
    // empirical single-draw CDF of the sphere value from a large reference
    // sample; best-of-k then follows 1 - (1 - F(t))^k
    Rng rng(31);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    const int reference_draws = 1000000;
    std::vector<double> reference(reference_draws);
    for (int i = 0; i < reference_draws; ++i) {
        Eigen::VectorXd x(4);
        for (int d = 0; d < 4; ++d) x(d) = u01(rng);
        reference[i] = sphere4(x);
    }
    std::sort(reference.begin(), reference.end());
    const auto single_cdf = [&](double t) {
        const auto it = std::upper_bound(reference.begin(), reference.end(), t);
        return static_cast<double>(it - reference.begin()) / reference_draws;
    };

    const int repeats = 200;
    const std::uint64_t k = 1000;
    std::vector<double> observed(repeats);
    for (int r = 0; r < repeats; ++r) {
        const Trace trace = random_search(sphere4, box_config(4, k, 1000 + r));
        observed[r] = trace.summary.best_cost;
    }
    std::sort(observed.begin(), observed.end());

    // Kolmogorov-Smirnov against the best-of-k CDF at the 1% level
    double d_stat = 0.0;
    for (int r = 0; r < repeats; ++r) {
        const double model_cdf = 1.0 - std::pow(1.0 - single_cdf(observed[r]), static_cast<double>(k));
        const double hi = static_cast<double>(r + 1) / repeats;
        const double lo = static_cast<double>(r) / repeats;
        d_stat = std::max({d_stat, std::abs(hi - model_cdf), std::abs(model_cdf - lo)});
    }
    const double critical_1pct = 1.628 / std::sqrt(static_cast<double>(repeats));
    CHECK(d_stat < critical_1pct);
}

TEST_CASE("powell pins the analytic minimum with an ample budget") {
    BaselineConfig cfg = box_config(2, 3000, 3, -5.0, 5.0);
    cfg.tolerance = 1e-8;
    cfg.max_line_evals = 80;
    const Trace trace = powell(shifted_quadratic, cfg);
    REQUIRE(trace.summary.best_theta.size() == 2);
    const Eigen::Vector2d minimum(1.0, -2.0);
    CHECK((trace.summary.best_theta - minimum).norm() < 1e-6);
    check_monotone_best(trace);
    CHECK(trace.records.size() <= 3000);
}

TEST_CASE("powell converges on a separable quadratic within two sweeps") {
    // two line searches per sweep in 2-d plus the net-displacement search;
    // with exact line minima the second sweep cannot improve further
    BaselineConfig cfg = box_config(2, 2000, 7, -4.0, 4.0);
    cfg.tolerance = 1e-7;
    cfg.max_line_evals = 60;
    int calls = 0;
    const Trace trace = powell(
        [&](const Eigen::VectorXd& x) {
            ++calls;
            return 2.0 * (x(0) - 0.5) * (x(0) - 0.5) + (x(1) + 1.0) * (x(1) + 1.0);
        },
        cfg);
    CHECK(trace.summary.best_cost < 1e-10);
    // stopped by the sweep-improvement rule well before the budget
    CHECK(calls < 2 * 3 * cfg.max_line_evals + 2);
    const Eigen::Vector2d minimum(0.5, -1.0);
    CHECK((trace.summary.best_theta - minimum).norm() < 1e-4);
}

TEST_CASE("powell respects bounds when the minimum is outside the box") {
    const BaselineConfig cfg = box_config(2, 400, 9, 0.0, 1.0);
    const Trace trace = powell(
        [](const Eigen::VectorXd& x) { return (x(0) - 2.0) * (x(0) - 2.0) + x(1) * x(1); }, cfg);
    for (const IterationRecord& rec : trace.records) {
        CHECK((rec.theta.array() >= -1e-12).all());
        CHECK((rec.theta.array() <= 1.0 + 1e-12).all());
    }
    // clipped optimum sits on the x0 = 1 face
    CHECK(trace.summary.best_theta(0) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("powell honors an explicit start point and is deterministic") {
    BaselineConfig cfg = box_config(2, 300, 13, -5.0, 5.0);
    cfg.start = Eigen::Vector2d(4.0, 4.0);
    const Trace a = powell(shifted_quadratic, cfg);
    const Trace b = powell(shifted_quadratic, cfg);
    CHECK((a.records.front().theta.array() == Eigen::Array2d(4.0, 4.0)).all());
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        CHECK(a.records[i].cost == b.records[i].cost);
    }

    BaselineConfig bad = cfg;
    bad.start = Eigen::Vector2d(9.0, 0.0);
    CHECK_THROWS_AS(powell(shifted_quadratic, bad), std::invalid_argument);
}
