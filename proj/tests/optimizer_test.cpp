#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qwopt/optimizer.hpp"

#include <cmath>
#include <set>

using namespace qwopt;

namespace {

OptimizerConfig box_config(int dim, std::uint64_t budget, std::uint64_t seed) {
    OptimizerConfig cfg;
    cfg.lower = Eigen::VectorXd::Zero(dim);
    cfg.upper = Eigen::VectorXd::Ones(dim);
    cfg.budget = budget;
    cfg.seed = seed;
    return cfg;
}

double sphere(const Eigen::VectorXd& x) {
    return (x.array() - 0.5).matrix().squaredNorm();
}

SurrogateModel fit_grid_1d(double (*f)(double), int n_points, RbfKernel kind) {
    Eigen::MatrixXd nodes(n_points, 1);
    Eigen::VectorXd values(n_points);
    for (int i = 0; i < n_points; ++i) {
        const double x = static_cast<double>(i) / (n_points - 1);
        nodes(i, 0) = x;
        values(i) = f(x);
    }
    auto model = fit_surrogate(nodes, values, kind, kDefaultRbfGamma, 0.0);
    REQUIRE(model.has_value());
    return *model;
}

}  // namespace

TEST_CASE("global proposal contracts: bounds, exclusion, weight extremes") {
    const int dim = 2;
    OptimizerConfig cfg = box_config(dim, 100, 3);
    Rng rng(11);

    // surrogate with a pronounced minimum at the center
    Eigen::MatrixXd nodes(5, dim);
    nodes << 0.1, 0.1, 0.9, 0.1, 0.5, 0.5, 0.1, 0.9, 0.9, 0.9;
    Eigen::VectorXd values(5);
    values << 1.0, 1.0, -1.0, 1.0, 1.0;
    const auto model = fit_surrogate(nodes, values, RbfKernel::cubic, kDefaultRbfGamma, 0.0);
    REQUIRE(model.has_value());

    const Eigen::VectorXd best = nodes.row(2).transpose();
    for (double w : {1.0, 0.5, 0.0}) {
        const Eigen::VectorXd p = propose_global(*model, nodes, best, w, cfg, rng);
        CHECK((p.array() >= 0.0).all());
        CHECK((p.array() <= 1.0).all());
        double dmin = 1e9;
        for (int i = 0; i < nodes.rows(); ++i) {
            dmin = std::min(dmin, (p - nodes.row(i).transpose()).norm());
        }
        CHECK(dmin >= cfg.min_distance);
    }

    // pure exploitation heads for the basin, pure exploration keeps away
    const Eigen::VectorXd exploit = propose_global(*model, nodes, best, 1.0, cfg, rng);
    CHECK((exploit - best).norm() < 0.35);
    const Eigen::VectorXd explore = propose_global(*model, nodes, best, 0.0, cfg, rng);
    double dmin = 1e9;
    for (int i = 0; i < nodes.rows(); ++i) {
        dmin = std::min(dmin, (explore - nodes.row(i).transpose()).norm());
    }
    CHECK(dmin > 0.2);
}

TEST_CASE("local proposal finds the minimum of a smooth 1-d landscape") {
    const auto parabola = [](double x) { return (x - 0.3) * (x - 0.3); };
    const SurrogateModel model = fit_grid_1d(+parabola, 21, RbfKernel::cubic);

    // independent oracle: dense grid minimum
    double grid_best = 1e9, grid_arg = 0.0;
    for (int i = 0; i <= 10000; ++i) {
        const double x = i / 10000.0;
        const double v = model.eval(Eigen::VectorXd::Constant(1, x));
        if (v < grid_best) {
            grid_best = v;
            grid_arg = x;
        }
    }
    CHECK(std::abs(grid_arg - 0.3) < 0.02);

    OptimizerConfig cfg = box_config(1, 100, 5);
    Rng rng(6);
    Eigen::MatrixXd history(1, 1);
    history << 0.9;  // keep the exclusion ring away from the optimum
    const Eigen::VectorXd p =
        propose_local(model, history, Eigen::VectorXd::Constant(1, 0.9), cfg, rng);
    CHECK(std::abs(p(0) - 0.3) < 0.05);
}

TEST_CASE("local proposal avoids re-proposing an evaluated minimizer") {
    // single gaussian node with a negative value: the surrogate minimum sits
    // exactly on the node, which is already evaluated
    Eigen::MatrixXd nodes(1, 2);
    nodes << 0.5, 0.5;
    Eigen::VectorXd values(1);
    values << -1.0;
    const auto model = fit_surrogate(nodes, values, RbfKernel::gaussian, 5.0, 0.0);
    REQUIRE(model.has_value());

    OptimizerConfig cfg = box_config(2, 100, 7);
    cfg.min_distance = 1e-3;
    Rng rng(8);
    const Eigen::VectorXd p = propose_local(*model, nodes, nodes.row(0).transpose(), cfg, rng);
    const double d = (p - nodes.row(0).transpose()).norm();
    CHECK(d >= cfg.min_distance);
    CHECK((p.array() >= 0.0).all());
    CHECK((p.array() <= 1.0).all());
}

TEST_CASE("affine trust step lands on the box-corner minimizer") {
    // exact affine landscape: value = 3 x0 - 2 x1 + 1
    Eigen::MatrixXd nodes(6, 2);
    nodes << 0.5, 0.5, 0.6, 0.5, 0.5, 0.6, 0.4, 0.45, 0.55, 0.4, 0.45, 0.62;
    Eigen::VectorXd values(6);
    for (int i = 0; i < 6; ++i) values(i) = 3.0 * nodes(i, 0) - 2.0 * nodes(i, 1) + 1.0;

    const Eigen::VectorXd center = nodes.row(0).transpose();
    const double radius = 0.2;
    const auto step = affine_trust_step(nodes, values, center, radius);
    REQUIRE(step.has_value());
    // analytic minimizer over the box: center - r along +gradient coordinates
    CHECK((*step)(0) == doctest::Approx(0.3).epsilon(1e-9));
    CHECK((*step)(1) == doctest::Approx(0.7).epsilon(1e-9));
}

TEST_CASE("affine trust step rejects degenerate data") {
    // all nodes on a line: rank-deficient affine fit in 2-d
    Eigen::MatrixXd nodes(5, 2);
    for (int i = 0; i < 5; ++i) {
        nodes(i, 0) = 0.1 * i;
        nodes(i, 1) = 0.5;
    }
    Eigen::VectorXd values = nodes.col(0);
    CHECK(!affine_trust_step(nodes, values, nodes.row(0).transpose(), 0.2).has_value());

    // constant data: zero gradient, no step
    Eigen::MatrixXd spread(5, 2);
    spread << 0.1, 0.1, 0.9, 0.2, 0.4, 0.8, 0.6, 0.3, 0.2, 0.6;
    CHECK(!affine_trust_step(spread, Eigen::VectorXd::Ones(5), spread.row(0).transpose(), 0.2)
               .has_value());
}

TEST_CASE("a budget equal to the initial design yields exactly that design") {
    OptimizerConfig cfg = box_config(3, 8, 17);
    cfg.init_points = 8;
    SurrogateOptimizer opt(cfg);
    int calls = 0;
    const Trace trace = opt.run([&](const Eigen::VectorXd&) {
        ++calls;
        return 1.0;
    });
    CHECK(calls == 8);
    REQUIRE(trace.records.size() == 8);
    for (const IterationRecord& rec : trace.records) CHECK(rec.event == EventTag::lhd_init);
    CHECK(trace.summary.best_cost == 1.0);
}

TEST_CASE("sphere in four dimensions reaches 1e-3 within 150 evaluations") {
    // independent attainability oracle: dense random search
    Rng rng(55);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    double rs_best = 1e9;
    for (int i = 0; i < 1000000; ++i) {
        Eigen::VectorXd x(4);
        for (int d = 0; d < 4; ++d) x(d) = u01(rng);
        rs_best = std::min(rs_best, sphere(x));
    }
    CHECK(rs_best < 1e-3);

    SurrogateOptimizer opt(box_config(4, 150, 2024));
    const Trace trace = opt.run(sphere);
    CHECK(trace.records.size() == 150);
    CHECK(trace.summary.best_cost < 1e-3);
}

TEST_CASE("constant cost restarts after exactly max_stalled + 1 non-improving evaluations") {
    OptimizerConfig cfg = box_config(2, 40, 1);
    cfg.init_points = 4;
    cfg.max_stalled_iterations = 7;
    SurrogateOptimizer opt(cfg);
    const Trace trace = opt.run([](const Eigen::VectorXd&) { return 0.25; });

    std::vector<std::size_t> restart_positions;
    for (std::size_t i = 0; i < trace.records.size(); ++i) {
        if (trace.records[i].event == EventTag::stall_restart) restart_positions.push_back(i);
    }
    REQUIRE(!restart_positions.empty());
    // eval 1 improves (first value); evaluations 2..9 stall; the design is
    // discarded after the 8th non-improving evaluation and the next point is
    // tagged stall_restart
    CHECK(restart_positions.front() == 9);
    CHECK(opt.stall_restarts() >= 1);
}

TEST_CASE("noisy run keeps contracts: monotone best, bounds, record count") {
    OptimizerConfig cfg = box_config(3, 120, 33);
    SurrogateOptimizer opt(cfg);
    Rng noise(7);
    std::normal_distribution<double> gauss(0.0, 0.01);
    const Trace trace = opt.run([&](const Eigen::VectorXd& x) { return sphere(x) + gauss(noise); });

    REQUIRE(trace.records.size() == 120);
    double best = 1e100;
    std::uint64_t last_eval = 0;
    std::set<EventTag> seen;
    for (const IterationRecord& rec : trace.records) {
        CHECK(rec.eval == last_eval + 1);
        last_eval = rec.eval;
        best = std::min(best, rec.cost);
        CHECK(rec.best == doctest::Approx(best).epsilon(1e-15));
        CHECK((rec.theta.array() >= cfg.lower.array()).all());
        CHECK((rec.theta.array() <= cfg.upper.array()).all());
        seen.insert(rec.event);
    }
    CHECK(seen.contains(EventTag::lhd_init));
    CHECK(seen.contains(EventTag::global_search));
    CHECK(seen.contains(EventTag::local_search));
    CHECK(seen.contains(EventTag::refine));
}

TEST_CASE("identical seeds give identical traces") {
    const auto run_once = [] {
        SurrogateOptimizer opt(box_config(3, 60, 99));
        return opt.run(sphere);
    };
    const Trace a = run_once();
    const Trace b = run_once();
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        CHECK(a.records[i].cost == b.records[i].cost);
        CHECK((a.records[i].theta.array() == b.records[i].theta.array()).all());
        CHECK(a.records[i].event == b.records[i].event);
    }
}

TEST_CASE("external restart schedules a fresh design and can reset the best record") {
    OptimizerConfig cfg = box_config(2, 60, 5);
    cfg.init_points = 6;
    SurrogateOptimizer opt(cfg);
    for (int i = 0; i < 20; ++i) opt.step(sphere);
    const double old_best = opt.best_value();
    CHECK(old_best < 0.5);

    opt.restart(true);
    CHECK(!opt.has_best());
    const IterationRecord& rec = opt.step(sphere);
    CHECK(rec.event == EventTag::lhd_init);
    CHECK(opt.has_best());
    CHECK(opt.best_value() == rec.cost);
    CHECK(opt.external_restarts() == 1);
}
