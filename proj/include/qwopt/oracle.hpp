#pragma once

#include "qwopt/seeding.hpp"
#include "qwopt/walk.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <vector>

namespace qwopt {

// Photon-counting statistics of one fidelity measurement: per basis element,
// the number of events is Poisson(lambda) and the detected counts are
// Binomial in the projection probability.
struct NoiseModel {
    double lambda = 1e4;
    bool enabled = true;
};

// A controllable angle the environment may disturb: step and angle are
// 0-based (angle 0 -> theta1, 1 -> theta2, 2 -> theta3).
struct PerturbationHandle {
    int step = 0;
    int angle = 0;

    bool operator==(const PerturbationHandle&) const = default;
};

// Deterministic offset injection for experiments: applied once, right before
// the cost evaluation with the given index.
struct ForcedOffset {
    std::uint64_t eval = 0;
    PerturbationHandle handle;
    double delta_rad = 0.0;
};

struct PerturbationConfig {
    bool enabled = false;
    double probability_q = 0.0;
    double offset_mean_rad = deg_to_rad(-30.0);
    double offset_std_rad = deg_to_rad(5.0);
    std::vector<PerturbationHandle> handles;
    std::vector<ForcedOffset> forced;

    // The handles disturbed in the reference experiment: the HWP of the
    // second coin and the first QWP of the third coin.
    static std::vector<PerturbationHandle> default_handles() {
        return {{1, 1}, {2, 0}};
    }
};

struct PerturbationEvent {
    std::uint64_t eval = 0;
    PerturbationHandle handle;
    double delta_rad = 0.0;
    bool forced = false;
};

// Per basis element j: N_j ~ Poisson(lambda), counts_j ~ Binomial(N_j, p_j).
std::vector<std::uint64_t> simulate_counts(const Eigen::VectorXd& probabilities,
                                           const NoiseModel& noise, Rng& rng);

// The black box seen by the optimizers: a flat parameter vector goes in, a
// noisy cost comes out. Hidden waveplate offsets accumulate behind the
// interface and are observable only through the cost.
class Oracle {
public:
    struct Setup {
        int steps = 3;
        bool first_coin_constrained = true;
        Eigen::Vector2cd input_coin = default_input_coin();
        Eigen::Vector2cd projection_axis = default_projection_axis();
        TargetState target;
        NoiseModel noise;
        PerturbationConfig perturbation;
        std::uint64_t seed = 0;

        // Horizontal polarization: (|up> + |down>) / sqrt(2).
        static Eigen::Vector2cd default_input_coin();
        static Eigen::Vector2cd default_projection_axis();  // |up>
    };

    explicit Oracle(Setup setup);

    int steps() const { return setup_.steps; }
    int n_params() const { return n_params_; }
    const TargetState& target() const { return setup_.target; }
    const MeasurementBasis& basis() const { return basis_; }

    // Noiseless fidelity of the post-projection state against the target,
    // hidden offsets applied. Null projection maps to 0.
    double evaluate_exact(const Eigen::VectorXd& theta) const;

    // Projection probabilities |<psi_j|psi_out>|^2 over the measurement
    // basis; nullopt on a null coin projection.
    std::optional<Eigen::VectorXd> basis_probabilities(const Eigen::VectorXd& theta) const;

    // Success probability of the coin projection at theta (offsets applied).
    double success_probability(const Eigen::VectorXd& theta) const;

    // Count-based estimate f_hat = c_1 / sum_j c_j; exact p_1 when noise is
    // disabled; 0 when no counts land or the projection is null.
    double estimate_fidelity(const Eigen::VectorXd& theta);

    // 1 - estimate_fidelity. Increments the evaluation counter and, when
    // perturbation is enabled, runs one perturbation step first.
    double cost(const Eigen::VectorXd& theta);

    // One Bernoulli(q) trial per handle; drawn offsets add permanently to the
    // hidden offset vector. Returns the events triggered by this call.
    std::vector<PerturbationEvent> perturb_step();

    std::uint64_t evaluations() const { return evaluations_; }
    const std::vector<PerturbationEvent>& event_log() const { return event_log_; }
    // Events triggered while evaluating the cost with the given index.
    std::vector<PerturbationEvent> events_at(std::uint64_t eval) const;

    // Post-hoc analysis only; never fed back to an optimizer.
    const Eigen::VectorXd& hidden_offsets() const { return hidden_offsets_; }

private:
    Eigen::VectorXd effective_theta(const Eigen::VectorXd& theta) const;
    Projection project_for(const Eigen::VectorXd& theta) const;
    void apply_offset(const PerturbationHandle& handle, double delta, bool forced);

    Setup setup_;
    int n_params_ = 0;
    MeasurementBasis basis_;
    Eigen::VectorXd hidden_offsets_;
    std::vector<PerturbationEvent> event_log_;
    Rng rng_;
    std::uint64_t evaluations_ = 0;
};

}  // namespace qwopt
