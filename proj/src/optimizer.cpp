#include "qwopt/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace qwopt {

namespace {

double wall_time_s() {
    using clock = std::chrono::steady_clock;
    static const clock::time_point start = clock::now();
    return std::chrono::duration<double>(clock::now() - start).count();
}

// Minimum distance from each row of `points` to the rows of `ref`.
Eigen::VectorXd min_distances(const Eigen::MatrixXd& points, const Eigen::MatrixXd& ref) {
    Eigen::VectorXd p2 = points.rowwise().squaredNorm();
    Eigen::VectorXd r2 = ref.rowwise().squaredNorm();
    Eigen::MatrixXd d2 = -2.0 * points * ref.transpose();
    d2.colwise() += p2;
    d2.rowwise() += r2.transpose();
    return d2.rowwise().minCoeff().cwiseMax(0.0).cwiseSqrt();
}

Eigen::VectorXd uniform_point(int dim, Rng& rng) {
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    Eigen::VectorXd x(dim);
    for (int d = 0; d < dim; ++d) x(d) = u01(rng);
    return x;
}

Eigen::VectorXd uniform_point_clear_of(const Eigen::MatrixXd& evaluated, double min_distance,
                                       int dim, Rng& rng) {
    for (int attempt = 0; attempt < 100; ++attempt) {
        Eigen::VectorXd x = uniform_point(dim, rng);
        if (evaluated.rows() == 0 ||
            min_distances(x.transpose(), evaluated)(0) >= min_distance) {
            return x;
        }
    }
    return uniform_point(dim, rng);
}

struct PatternPoint {
    Eigen::VectorXd x;
    double value;
};

// Coordinate pattern search on the surrogate, run in lock-step over all
// starts so probe evaluations batch into matrix products.
std::vector<PatternPoint> pattern_search(const SurrogateModel& model, const Eigen::MatrixXd& starts,
                                         double step0, double step_min, int max_iters) {
    const int n_starts = static_cast<int>(starts.rows());
    const int dim = static_cast<int>(starts.cols());
    std::vector<PatternPoint> state(n_starts);
    {
        Eigen::VectorXd f = model.eval_batch(starts);
        for (int s = 0; s < n_starts; ++s) state[s] = {starts.row(s).transpose(), f(s)};
    }
    std::vector<double> step(n_starts, step0);
    std::vector<bool> active(n_starts, true);

    for (int iter = 0; iter < max_iters; ++iter) {
        std::vector<int> live;
        for (int s = 0; s < n_starts; ++s) {
            if (active[s]) live.push_back(s);
        }
        if (live.empty()) break;

        Eigen::MatrixXd probes(static_cast<Eigen::Index>(live.size()) * 2 * dim, dim);
        Eigen::Index row = 0;
        for (int s : live) {
            for (int d = 0; d < dim; ++d) {
                for (double sign : {1.0, -1.0}) {
                    Eigen::VectorXd p = state[s].x;
                    p(d) = std::clamp(p(d) + sign * step[s], 0.0, 1.0);
                    probes.row(row++) = p.transpose();
                }
            }
        }
        const Eigen::VectorXd pf = model.eval_batch(probes);

        row = 0;
        for (int s : live) {
            double best_f = state[s].value;
            Eigen::Index best_row = -1;
            for (int j = 0; j < 2 * dim; ++j, ++row) {
                if (pf(row) < best_f) {
                    best_f = pf(row);
                    best_row = row;
                }
            }
            if (best_row >= 0) {
                state[s].x = probes.row(best_row).transpose();
                state[s].value = best_f;
            } else {
                step[s] *= 0.5;
                if (step[s] < step_min) active[s] = false;
            }
        }
    }
    return state;
}

}  // namespace

void OptimizerConfig::validate() const {
    if (lower.size() == 0 || lower.size() != upper.size()) {
        throw std::invalid_argument("OptimizerConfig: bounds must be non-empty and same length");
    }
    for (Eigen::Index i = 0; i < lower.size(); ++i) {
        if (!(lower(i) < upper(i))) {
            throw std::invalid_argument("OptimizerConfig: lower bound must be below upper bound");
        }
    }
    if (budget == 0) throw std::invalid_argument("OptimizerConfig: budget must be positive");
    if (budget < static_cast<std::uint64_t>(resolved_init_points())) {
        throw std::invalid_argument("OptimizerConfig: budget must cover the initial design");
    }
    if (num_global_searches < 1 || max_stalled_iterations < 1 || refinement_frequency < 1 ||
        model_reselect_period < 1) {
        throw std::invalid_argument("OptimizerConfig: cycle parameters must be positive");
    }
    if (min_distance <= 0.0 || ridge < 0.0) {
        throw std::invalid_argument("OptimizerConfig: min_distance must be positive, ridge nonnegative");
    }
}

Eigen::VectorXd propose_global(const SurrogateModel& model, const Eigen::MatrixXd& evaluated,
                               const Eigen::VectorXd& best_point, double weight,
                               const OptimizerConfig& config, Rng& rng) {
    const int dim = model.dim();
    const int pool = config.resolved_candidate_pool();
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 0.1);

    Eigen::MatrixXd cand(pool, dim);
    const int half = pool / 2;
    for (int i = 0; i < pool; ++i) {
        for (int d = 0; d < dim; ++d) {
            cand(i, d) = i < half ? u01(rng)
                                  : std::clamp(best_point(d) + gauss(rng), 0.0, 1.0);
        }
    }

    const Eigen::VectorXd dmin = min_distances(cand, evaluated);
    std::vector<int> keep;
    keep.reserve(pool);
    for (int i = 0; i < pool; ++i) {
        if (dmin(i) >= config.min_distance) keep.push_back(i);
    }
    if (keep.empty()) {
        return uniform_point_clear_of(evaluated, config.min_distance, dim, rng);
    }

    Eigen::MatrixXd kept(static_cast<Eigen::Index>(keep.size()), dim);
    Eigen::VectorXd kept_d(static_cast<Eigen::Index>(keep.size()));
    for (std::size_t i = 0; i < keep.size(); ++i) {
        kept.row(static_cast<Eigen::Index>(i)) = cand.row(keep[i]);
        kept_d(static_cast<Eigen::Index>(i)) = dmin(keep[i]);
    }

    const Eigen::VectorXd s = model.eval_batch(kept);
    const double s_lo = s.minCoeff(), s_hi = s.maxCoeff();
    const double d_lo = kept_d.minCoeff(), d_hi = kept_d.maxCoeff();
    Eigen::VectorXd s_hat = s_hi > s_lo
        ? Eigen::VectorXd(((s.array() - s_lo) / (s_hi - s_lo)).matrix())
        : Eigen::VectorXd(Eigen::VectorXd::Zero(s.size()));
    Eigen::VectorXd d_hat = d_hi > d_lo
        ? Eigen::VectorXd(((kept_d.array() - d_lo) / (d_hi - d_lo)).matrix())
        : Eigen::VectorXd(Eigen::VectorXd::Zero(kept_d.size()));
    const Eigen::VectorXd score =
        weight * s_hat + (1.0 - weight) * (Eigen::VectorXd::Ones(d_hat.size()) - d_hat);

    Eigen::Index best_idx = 0;
    score.minCoeff(&best_idx);
    return kept.row(best_idx).transpose();
}

Eigen::VectorXd propose_local(const SurrogateModel& model, const Eigen::MatrixXd& evaluated,
                              const Eigen::VectorXd& best_point,
                              const OptimizerConfig& config, Rng& rng) {
    const int dim = model.dim();
    const int pool = std::min(100 * dim, 4000);
    Eigen::MatrixXd cand(pool, dim);
    {
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        for (int i = 0; i < pool; ++i) {
            for (int d = 0; d < dim; ++d) cand(i, d) = u01(rng);
        }
    }
    const Eigen::VectorXd s = model.eval_batch(cand);
    std::vector<int> order(pool);
    std::iota(order.begin(), order.end(), 0);
    const int extra = std::min(9, pool);
    std::partial_sort(order.begin(), order.begin() + extra, order.end(),
                      [&](int a, int b) { return s(a) != s(b) ? s(a) < s(b) : a < b; });

    Eigen::MatrixXd starts(1 + extra, dim);
    starts.row(0) = best_point.transpose();
    for (int i = 0; i < extra; ++i) starts.row(1 + i) = cand.row(order[i]);

    const auto finals = pattern_search(model, starts, 0.1, 5e-4, 50);
    int best = 0;
    for (int i = 1; i < static_cast<int>(finals.size()); ++i) {
        if (finals[i].value < finals[best].value) best = i;
    }
    Eigen::VectorXd x = finals[best].x;
    if (min_distances(x.transpose(), evaluated)(0) >= config.min_distance) return x;

    // The descent converged onto an already evaluated point; propose a small
    // perturbation of the incumbent instead.
    for (int attempt = 1; attempt <= 200; ++attempt) {
        const double sigma =
            std::max(10.0 * config.min_distance, 1e-3) * (1.0 + attempt / 20.0);
        std::normal_distribution<double> gauss(0.0, sigma);
        Eigen::VectorXd c(dim);
        for (int d = 0; d < dim; ++d) c(d) = std::clamp(best_point(d) + gauss(rng), 0.0, 1.0);
        if (min_distances(c.transpose(), evaluated)(0) >= config.min_distance) return c;
    }
    return uniform_point_clear_of(evaluated, config.min_distance, dim, rng);
}

std::optional<Eigen::VectorXd> affine_trust_step(const Eigen::MatrixXd& nodes,
                                                 const Eigen::VectorXd& values,
                                                 const Eigen::VectorXd& center,
                                                 double radius) {
    const Eigen::Index k = nodes.rows();
    const int dim = static_cast<int>(nodes.cols());
    if (k < dim + 1) return std::nullopt;

    Eigen::VectorXd dist = (nodes.rowwise() - center.transpose()).rowwise().norm();
    std::vector<Eigen::Index> order(k);
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::sort(order.begin(), order.end(),
              [&](Eigen::Index a, Eigen::Index b) { return dist(a) != dist(b) ? dist(a) < dist(b) : a < b; });
    Eigen::Index n_sel = 0;
    while (n_sel < k && dist(order[n_sel]) <= radius) ++n_sel;
    n_sel = std::max<Eigen::Index>(n_sel, dim + 1);

    Eigen::MatrixXd a(n_sel, dim + 1);
    Eigen::VectorXd b(n_sel);
    for (Eigen::Index i = 0; i < n_sel; ++i) {
        a(i, 0) = 1.0;
        a.row(i).tail(dim) = nodes.row(order[i]);
        b(i) = values(order[i]);
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    if (qr.rank() < dim + 1) return std::nullopt;
    const Eigen::VectorXd coef = qr.solve(b);
    if (!coef.allFinite()) return std::nullopt;
    const Eigen::VectorXd gradient = coef.tail(dim);

    Eigen::VectorXd x = center;
    for (int d = 0; d < dim; ++d) {
        if (gradient(d) > 0.0) {
            x(d) = center(d) - radius;
        } else if (gradient(d) < 0.0) {
            x(d) = center(d) + radius;
        }
    }
    x = x.cwiseMax(0.0).cwiseMin(1.0);
    if ((x - center).norm() == 0.0) return std::nullopt;
    return x;
}

SurrogateOptimizer::SurrogateOptimizer(OptimizerConfig config)
    : config_(std::move(config)), rng_(config_.seed) {
    config_.validate();
    dim_ = config_.dim();
    kernel_ = config_.initial_kernel;
    radius_ = 0.1 * std::sqrt(static_cast<double>(dim_));
    radius_cap_ = 0.5 * std::sqrt(static_cast<double>(dim_));
    nodes_.resize(0, dim_);
    values_.resize(0);
    schedule_design(EventTag::lhd_init);
}

Eigen::VectorXd SurrogateOptimizer::unscale(const Eigen::VectorXd& x) const {
    return config_.lower + (config_.upper - config_.lower).cwiseProduct(x);
}

Eigen::VectorXd SurrogateOptimizer::best_point() const {
    if (!has_best_) throw std::logic_error("best_point: nothing evaluated yet");
    return unscale(best_scaled_);
}

double SurrogateOptimizer::min_distance_to_nodes(const Eigen::VectorXd& scaled) const {
    if (nodes_.rows() == 0) return std::numeric_limits<double>::infinity();
    return min_distances(scaled.transpose(), nodes_)(0);
}

void SurrogateOptimizer::schedule_design(EventTag first_tag) {
    const std::uint64_t remaining = config_.budget - evaluations_;
    const int count = static_cast<int>(
        std::min<std::uint64_t>(remaining, static_cast<std::uint64_t>(config_.resolved_init_points())));
    pending_.clear();
    if (count <= 0) return;
    const Eigen::MatrixXd design = latin_hypercube(count, dim_, rng_);
    for (int i = 0; i < count; ++i) pending_.push_back(design.row(i).transpose());
    pending_tag_ = first_tag;
}

const IterationRecord& SurrogateOptimizer::evaluate(const Eigen::VectorXd& scaled, EventTag tag,
                                                    const CostFn& cost) {
    const Eigen::VectorXd x = unscale(scaled);
    const double c = cost(x);
    ++evaluations_;

    nodes_.conservativeResize(nodes_.rows() + 1, dim_);
    nodes_.row(nodes_.rows() - 1) = scaled.transpose();
    values_.conservativeResize(values_.size() + 1);
    values_(values_.size() - 1) = c;
    model_dirty_ = true;
    ++evals_since_reselect_;

    last_improved_ = !has_best_ || c < best_value_;
    if (last_improved_) {
        has_best_ = true;
        best_scaled_ = scaled;
        best_value_ = c;
        best_eval_ = evaluations_;
        stall_ = 0;
    } else {
        ++stall_;
    }

    IterationRecord rec;
    rec.eval = evaluations_;
    rec.theta = x;
    rec.cost = c;
    rec.best = best_value_;
    rec.event = tag;
    rec.wall_time_s = wall_time_s();
    records_.push_back(std::move(rec));

    if (stall_ > config_.max_stalled_iterations) {
        ++stall_restarts_;
        stall_ = 0;
        nodes_.resize(0, dim_);
        values_.resize(0);
        model_.reset();
        model_dirty_ = true;
        cycle_pos_ = 0;
        proposals_since_refine_ = 0;
        evals_since_reselect_ = 0;
        radius_ = 0.1 * std::sqrt(static_cast<double>(dim_));
        schedule_design(EventTag::stall_restart);
    }
    return records_.back();
}

void SurrogateOptimizer::restart(bool reset_best) {
    ++external_restarts_;
    if (reset_best) has_best_ = false;
    stall_ = 0;
    nodes_.resize(0, dim_);
    values_.resize(0);
    model_.reset();
    model_dirty_ = true;
    cycle_pos_ = 0;
    proposals_since_refine_ = 0;
    evals_since_reselect_ = 0;
    radius_ = 0.1 * std::sqrt(static_cast<double>(dim_));
    schedule_design(EventTag::lhd_init);
}

void SurrogateOptimizer::refit_model() {
    if (!model_dirty_ && model_) return;
    if (evals_since_reselect_ >= static_cast<std::uint64_t>(config_.model_reselect_period) &&
        nodes_.rows() >= dim_ + 3) {
        kernel_ = select_kernel_loo(nodes_, values_, kernel_, config_.rbf_gamma, config_.ridge);
        evals_since_reselect_ = 0;
    }
    model_.reset();
    const double base = config_.ridge;
    for (double ridge : {base, std::max(base, 1e-10) * 1e2, std::max(base, 1e-10) * 1e4}) {
        model_ = fit_surrogate(nodes_, values_, kernel_, config_.rbf_gamma, ridge);
        if (model_) break;
    }
    if (!model_) {
        for (RbfKernel k : kAllKernels) {
            if (k == kernel_) continue;
            model_ = fit_surrogate(nodes_, values_, k, config_.rbf_gamma, base);
            if (model_) break;
        }
    }
    model_dirty_ = false;
}

std::optional<const IterationRecord*> SurrogateOptimizer::try_refine(const CostFn& cost) {
    constexpr double radius_floor = 1e-4;
    if (nodes_.rows() < dim_ + 1 || radius_ <= radius_floor) return std::nullopt;

    Eigen::VectorXd center;
    if (has_best_) {
        center = best_scaled_;
    } else {
        Eigen::Index idx = 0;
        values_.minCoeff(&idx);
        center = nodes_.row(idx).transpose();
    }

    const auto target = affine_trust_step(nodes_, values_, center, radius_);
    if (!target || min_distance_to_nodes(*target) < config_.min_distance) {
        radius_ = std::max(radius_ * 0.5, radius_floor);
        return std::nullopt;
    }

    const int restarts_before = stall_restarts_;
    const IterationRecord& rec = evaluate(*target, EventTag::refine, cost);
    if (stall_restarts_ == restarts_before) {
        radius_ = last_improved_ ? std::min(radius_ * 2.0, radius_cap_)
                                 : std::max(radius_ * 0.5, radius_floor);
    }
    return &rec;
}

const IterationRecord& SurrogateOptimizer::step(const CostFn& cost) {
    if (done()) throw std::logic_error("SurrogateOptimizer::step: budget exhausted");
    for (;;) {
        if (!pending_.empty()) {
            const Eigen::VectorXd point = pending_.front();
            pending_.pop_front();
            const EventTag tag = pending_tag_;
            pending_tag_ = EventTag::lhd_init;
            return evaluate(point, tag, cost);
        }
        if (nodes_.rows() == 0) {
            schedule_design(EventTag::lhd_init);
            continue;
        }
        if (proposals_since_refine_ >= config_.refinement_frequency) {
            proposals_since_refine_ = 0;
            if (auto rec = try_refine(cost)) return **rec;
            // refinement skipped (floor radius, degenerate fit, or collision):
            // fall through to the next proposal without consuming budget
        }

        refit_model();
        Eigen::VectorXd anchor;
        if (has_best_) {
            anchor = best_scaled_;
        } else {
            Eigen::Index idx = 0;
            values_.minCoeff(&idx);
            anchor = nodes_.row(idx).transpose();
        }

        Eigen::VectorXd point;
        EventTag tag;
        const int n_global = config_.num_global_searches;
        if (model_) {
            if (cycle_pos_ < n_global) {
                const double w = kGlobalWeights[cycle_pos_ % kGlobalWeights.size()];
                point = propose_global(*model_, nodes_, anchor, w, config_, rng_);
                tag = EventTag::global_search;
            } else {
                point = propose_local(*model_, nodes_, anchor, config_, rng_);
                tag = EventTag::local_search;
            }
        } else {
            // no kernel could be fitted this step; keep sampling
            point = uniform_point_clear_of(nodes_, config_.min_distance, dim_, rng_);
            tag = cycle_pos_ < n_global ? EventTag::global_search : EventTag::local_search;
        }
        cycle_pos_ = (cycle_pos_ + 1) % (n_global + 1);
        ++proposals_since_refine_;
        return evaluate(point, tag, cost);
    }
}

Trace SurrogateOptimizer::make_trace() const {
    Trace trace;
    trace.records = records_;
    trace.summary.evaluations = evaluations_;
    trace.summary.stall_restarts = stall_restarts_;
    if (has_best_) {
        trace.summary.best_theta = best_point();
        trace.summary.best_cost = best_value_;
        trace.summary.best_eval = best_eval_;
    }
    return trace;
}

Trace SurrogateOptimizer::run(const CostFn& cost) {
    while (!done()) step(cost);
    return make_trace();
}

}  // namespace qwopt
