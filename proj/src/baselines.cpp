#include "qwopt/baselines.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace qwopt {

namespace {

double wall_time_s() {
    using clock = std::chrono::steady_clock;
    static const clock::time_point start = clock::now();
    return std::chrono::duration<double>(clock::now() - start).count();
}

// Shared trace-keeping around the raw cost function (scaled unit box inside,
// unscaled at the boundary).
class Recorder {
public:
    Recorder(const CostFn& cost, const BaselineConfig& config)
        : cost_(cost), config_(config), span_(config.upper - config.lower) {}

    bool exhausted() const { return evals_ >= config_.budget; }

    double evaluate(const Eigen::VectorXd& scaled) {
        const Eigen::VectorXd x = config_.lower + span_.cwiseProduct(scaled);
        const double c = cost_(x);
        ++evals_;
        if (!has_best_ || c < best_.cost) {
            has_best_ = true;
            best_ = {evals_, x, c};
        }
        IterationRecord rec;
        rec.eval = evals_;
        rec.theta = x;
        rec.cost = c;
        rec.best = best_.cost;
        rec.event = EventTag::none;
        rec.wall_time_s = wall_time_s();
        records_.push_back(std::move(rec));
        return c;
    }

    Trace finish() const {
        Trace trace;
        trace.records = records_;
        trace.summary.evaluations = evals_;
        if (has_best_) {
            trace.summary.best_theta = best_.theta;
            trace.summary.best_cost = best_.cost;
            trace.summary.best_eval = best_.eval;
        }
        return trace;
    }

private:
    struct Best {
        std::uint64_t eval = 0;
        Eigen::VectorXd theta;
        double cost = std::numeric_limits<double>::infinity();
    };

    const CostFn& cost_;
    const BaselineConfig& config_;
    Eigen::VectorXd span_;
    std::vector<IterationRecord> records_;
    std::uint64_t evals_ = 0;
    bool has_best_ = false;
    Best best_;
};

constexpr double kGolden = 0.6180339887498949;  // (sqrt(5) - 1) / 2
constexpr double kBracketStep = 0.05;           // scaled units

struct LineResult {
    double t = 0.0;
    double f = 0.0;
};

// Minimize f(x + t u) for t in [t_lo, t_hi] (0 inside the interval):
// geometric bracketing from the current point, then golden section down to
// the tolerance. Returns the best (t, f) among every point evaluated.
LineResult line_minimize(Recorder& rec, const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                         double f0, double t_lo, double t_hi, double tol, int max_evals) {
    LineResult best{0.0, f0};
    int evals = 0;
    auto f_at = [&](double t) {
        const double c = rec.evaluate(x + t * u);
        ++evals;
        if (c < best.f) best = {t, c};
        return c;
    };
    auto can_eval = [&]() { return evals < max_evals && !rec.exhausted(); };

    // Expand geometrically from t0 toward `limit` while the cost decreases;
    // on return [a, c] brackets the minimum seen along that ray.
    auto expand = [&](double t0, double f_t0, double limit, double& a, double& c) {
        double prev = 0.0;
        double cur = t0;
        double f_cur = f_t0;
        while (std::abs(cur) < std::abs(limit) && can_eval()) {
            double next = 2.0 * cur;
            if (std::abs(next) > std::abs(limit)) next = limit;
            const double f_next = f_at(next);
            if (f_next >= f_cur) {
                a = std::min(prev, next);
                c = std::max(prev, next);
                return;
            }
            prev = cur;
            cur = next;
            f_cur = f_next;
        }
        a = std::min(prev, cur);
        c = std::max(prev, cur);
    };

    double a = 0.0, c = 0.0;
    const double tp = t_hi > 0.0 ? std::min(kBracketStep, t_hi) : 0.0;
    const double tm = t_lo < 0.0 ? std::max(-kBracketStep, t_lo) : 0.0;
    double fp = std::numeric_limits<double>::infinity();
    double fm = std::numeric_limits<double>::infinity();

    if (tp > 0.0 && can_eval()) fp = f_at(tp);
    if (fp < f0) {
        expand(tp, fp, t_hi, a, c);
    } else {
        if (tm < 0.0 && can_eval()) fm = f_at(tm);
        if (fm < f0) {
            expand(tm, fm, t_lo, a, c);
        } else {
            // both probes uphill: the minimum lies between them
            a = tm;
            c = tp;
        }
    }
    if (!(c > a)) return best;

    double x1 = c - kGolden * (c - a);
    double x2 = a + kGolden * (c - a);
    if (!can_eval()) return best;
    double f1 = f_at(x1);
    if (!can_eval()) return best;
    double f2 = f_at(x2);
    while ((c - a) > tol && can_eval()) {
        if (f1 <= f2) {
            c = x2;
            x2 = x1;
            f2 = f1;
            x1 = c - kGolden * (c - a);
            f1 = f_at(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + kGolden * (c - a);
            f2 = f_at(x2);
        }
    }
    return best;
}

// Feasible parameter range of x + t u within the unit box.
std::pair<double, double> segment_range(const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
    double t_lo = -std::numeric_limits<double>::infinity();
    double t_hi = std::numeric_limits<double>::infinity();
    for (Eigen::Index d = 0; d < x.size(); ++d) {
        if (u(d) > 0.0) {
            t_hi = std::min(t_hi, (1.0 - x(d)) / u(d));
            t_lo = std::max(t_lo, (0.0 - x(d)) / u(d));
        } else if (u(d) < 0.0) {
            t_hi = std::min(t_hi, (0.0 - x(d)) / u(d));
            t_lo = std::max(t_lo, (1.0 - x(d)) / u(d));
        }
    }
    return {t_lo, t_hi};
}

}  // namespace

void BaselineConfig::validate() const {
    if (lower.size() == 0 || lower.size() != upper.size()) {
        throw std::invalid_argument("BaselineConfig: bounds must be non-empty and same length");
    }
    for (Eigen::Index i = 0; i < lower.size(); ++i) {
        if (!(lower(i) < upper(i))) {
            throw std::invalid_argument("BaselineConfig: lower bound must be below upper bound");
        }
    }
    if (budget < 1) throw std::invalid_argument("BaselineConfig: budget must be >= 1");
    if (start && (start->size() != lower.size() ||
                  (start->array() < lower.array()).any() ||
                  (start->array() > upper.array()).any())) {
        throw std::invalid_argument("BaselineConfig: start point must lie inside the bounds");
    }
    if (tolerance <= 0.0 || max_line_evals < 3) {
        throw std::invalid_argument("BaselineConfig: bad line search parameters");
    }
}

Trace random_search(const CostFn& cost, const BaselineConfig& config) {
    config.validate();
    Recorder rec(cost, config);
    Rng rng(config.seed);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    const int dim = config.dim();
    while (!rec.exhausted()) {
        Eigen::VectorXd x(dim);
        for (int d = 0; d < dim; ++d) x(d) = u01(rng);
        rec.evaluate(x);
    }
    return rec.finish();
}

Trace powell(const CostFn& cost, const BaselineConfig& config) {
    config.validate();
    Recorder rec(cost, config);
    const int dim = config.dim();
    const Eigen::VectorXd span = config.upper - config.lower;

    Eigen::VectorXd x(dim);
    if (config.start) {
        x = (*config.start - config.lower).cwiseQuotient(span);
    } else {
        x.setConstant(0.5);
    }
    double fx = rec.evaluate(x);

    Eigen::MatrixXd dirs = Eigen::MatrixXd::Identity(dim, dim);

    while (!rec.exhausted()) {
        const Eigen::VectorXd sweep_start = x;
        const double f_sweep_start = fx;
        double largest_drop = 0.0;
        int largest_dir = 0;

        for (int d = 0; d < dim && !rec.exhausted(); ++d) {
            const Eigen::VectorXd u = dirs.col(d);
            const auto [t_lo, t_hi] = segment_range(x, u);
            const LineResult r =
                line_minimize(rec, x, u, fx, t_lo, t_hi, config.tolerance, config.max_line_evals);
            const double drop = fx - r.f;
            if (drop > largest_drop) {
                largest_drop = drop;
                largest_dir = d;
            }
            x += r.t * u;
            fx = r.f;
        }

        Eigen::VectorXd net = x - sweep_start;
        const double net_norm = net.norm();
        if (net_norm > 1e-14 && !rec.exhausted()) {
            net /= net_norm;
            const auto [t_lo, t_hi] = segment_range(x, net);
            const LineResult r =
                line_minimize(rec, x, net, fx, t_lo, t_hi, config.tolerance, config.max_line_evals);
            x += r.t * net;
            fx = r.f;
            dirs.col(largest_dir) = net;
        }

        if (f_sweep_start - fx < config.tolerance) break;
    }
    return rec.finish();
}

}  // namespace qwopt
