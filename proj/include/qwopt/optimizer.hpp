#pragma once

#include "qwopt/rbf.hpp"
#include "qwopt/sampling.hpp"
#include "qwopt/seeding.hpp"
#include "qwopt/trace.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>

namespace qwopt {

struct OptimizerConfig {
    Eigen::VectorXd lower;  // unscaled bounds, one entry per dimension
    Eigen::VectorXd upper;
    std::uint64_t budget = 0;
    std::uint64_t seed = 0;

    int init_points = 0;  // 0 -> 2 * (N + 1)
    int num_global_searches = 5;
    int max_stalled_iterations = 100;
    int refinement_frequency = 3;
    double min_distance = 1e-6;  // scaled units
    double ridge = 1e-8;
    int candidate_pool = 0;  // 0 -> min(500 * N, 20000)
    int model_reselect_period = 25;
    double rbf_gamma = kDefaultRbfGamma;
    RbfKernel initial_kernel = RbfKernel::cubic;

    int dim() const { return static_cast<int>(lower.size()); }
    int resolved_init_points() const { return init_points > 0 ? init_points : 2 * (dim() + 1); }
    int resolved_candidate_pool() const {
        return candidate_pool > 0 ? candidate_pool : std::min(500 * dim(), 20000);
    }
    void validate() const;
};

// Exploitation-to-exploration weights of the global steps in one cycle.
inline constexpr std::array<double, 5> kGlobalWeights = {0.95, 0.75, 0.5, 0.3, 0.1};

// Candidate scored as w * s_hat + (1 - w) * (1 - d_hat) over a pool that is
// half uniform in the box and half Gaussian-perturbed around the incumbent;
// s_hat is the pool-normalized surrogate value and d_hat the pool-normalized
// minimum distance to evaluated points. Scaled space throughout.
Eigen::VectorXd propose_global(const SurrogateModel& model, const Eigen::MatrixXd& evaluated,
                               const Eigen::VectorXd& best_point, double weight,
                               const OptimizerConfig& config, Rng& rng);

// Approximate surrogate minimizer: multi-start coordinate pattern search from
// the best node plus the best pool candidates; falls back to a perturbed
// incumbent when the descent lands within min_distance of evaluated points.
Eigen::VectorXd propose_local(const SurrogateModel& model, const Eigen::MatrixXd& evaluated,
                              const Eigen::VectorXd& best_point,
                              const OptimizerConfig& config, Rng& rng);

// Least-squares affine fit over the nodes nearest `center` within `radius`
// (at least N+1 of them), minimized over the coordinate box of half-width
// `radius` around the center, clipped to [0,1]^N. Returns nullopt when the
// fit is rank-deficient or the gradient vanishes.
std::optional<Eigen::VectorXd> affine_trust_step(const Eigen::MatrixXd& nodes,
                                                 const Eigen::VectorXd& values,
                                                 const Eigen::VectorXd& center,
                                                 double radius);

// One optimization run as a resumable state machine; step() performs exactly
// one true cost evaluation, which makes external budget accounting (and the
// degradation-check protocol layered on top) exact.
class SurrogateOptimizer {
public:
    using CostFn = std::function<double(const Eigen::VectorXd&)>;

    explicit SurrogateOptimizer(OptimizerConfig config);

    const IterationRecord& step(const CostFn& cost);
    Trace run(const CostFn& cost);

    // Externally triggered restart (degradation protocol): the surrogate and
    // its nodes are discarded and a fresh design is scheduled; the best-so-far
    // record is optionally reset.
    void restart(bool reset_best);

    bool done() const { return evaluations_ >= config_.budget; }
    std::uint64_t evaluations() const { return evaluations_; }
    const std::vector<IterationRecord>& records() const { return records_; }

    bool has_best() const { return has_best_; }
    Eigen::VectorXd best_point() const;  // unscaled
    double best_value() const { return best_value_; }
    std::uint64_t best_eval() const { return best_eval_; }
    int stall_restarts() const { return stall_restarts_; }
    int external_restarts() const { return external_restarts_; }
    RbfKernel kernel() const { return kernel_; }
    double trust_radius() const { return radius_; }

private:
    Eigen::VectorXd unscale(const Eigen::VectorXd& x) const;
    const IterationRecord& evaluate(const Eigen::VectorXd& scaled, EventTag tag,
                                    const CostFn& cost);
    void schedule_design(EventTag first_tag);
    void refit_model();
    std::optional<const IterationRecord*> try_refine(const CostFn& cost);
    double min_distance_to_nodes(const Eigen::VectorXd& scaled) const;
    Trace make_trace() const;

    OptimizerConfig config_;
    int dim_ = 0;
    Rng rng_;

    Eigen::MatrixXd nodes_;   // scaled, current model segment
    Eigen::VectorXd values_;
    std::optional<SurrogateModel> model_;
    bool model_dirty_ = true;
    RbfKernel kernel_;
    std::uint64_t evals_since_reselect_ = 0;

    std::deque<Eigen::VectorXd> pending_;
    EventTag pending_tag_ = EventTag::lhd_init;

    bool has_best_ = false;
    Eigen::VectorXd best_scaled_;
    double best_value_ = 0.0;
    std::uint64_t best_eval_ = 0;
    bool last_improved_ = false;

    int stall_ = 0;
    std::uint64_t evaluations_ = 0;
    int cycle_pos_ = 0;
    int proposals_since_refine_ = 0;
    double radius_ = 0.0;
    double radius_cap_ = 0.0;
    int stall_restarts_ = 0;
    int external_restarts_ = 0;

    std::vector<IterationRecord> records_;
};

}  // namespace qwopt
