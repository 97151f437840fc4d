#include "qwopt/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qwopt {

std::vector<std::uint64_t> simulate_counts(const Eigen::VectorXd& probabilities,
                                           const NoiseModel& noise, Rng& rng) {
    if (noise.lambda <= 0.0) throw std::invalid_argument("simulate_counts: lambda must be > 0");
    std::vector<std::uint64_t> counts(probabilities.size());
    for (Eigen::Index j = 0; j < probabilities.size(); ++j) {
        const double p = std::clamp(probabilities(j), 0.0, 1.0);
        std::poisson_distribution<std::uint64_t> poisson(noise.lambda);
        const std::uint64_t events = poisson(rng);
        if (p <= 0.0 || events == 0) {
            counts[j] = 0;
        } else if (p >= 1.0) {
            counts[j] = events;
        } else {
            std::binomial_distribution<std::uint64_t> binomial(events, p);
            counts[j] = binomial(rng);
        }
    }
    return counts;
}

Eigen::Vector2cd Oracle::Setup::default_input_coin() {
    const double s = 1.0 / std::sqrt(2.0);
    return Eigen::Vector2cd(Complex(s, 0.0), Complex(s, 0.0));
}

Eigen::Vector2cd Oracle::Setup::default_projection_axis() {
    return Eigen::Vector2cd(Complex(1.0, 0.0), Complex(0.0, 0.0));
}

Oracle::Oracle(Setup setup)
    : setup_(std::move(setup)),
      rng_(setup_.seed) {
    n_params_ = setup_.first_coin_constrained ? 3 * setup_.steps - 1 : 3 * setup_.steps;
    if (setup_.target.half_width != setup_.steps) {
        throw std::invalid_argument("Oracle: target band does not match the walk steps");
    }
    basis_ = gram_schmidt_basis(setup_.target);
    hidden_offsets_ = Eigen::VectorXd::Zero(n_params_);
    if (setup_.perturbation.enabled && setup_.perturbation.handles.empty()) {
        setup_.perturbation.handles = PerturbationConfig::default_handles();
    }
}

Eigen::VectorXd Oracle::effective_theta(const Eigen::VectorXd& theta) const {
    if (theta.size() != n_params_) {
        throw std::invalid_argument("Oracle: expected " + std::to_string(n_params_) +
                                    " parameters, got " + std::to_string(theta.size()));
    }
    return theta + hidden_offsets_;
}

Projection Oracle::project_for(const Eigen::VectorXd& theta) const {
    const WalkParams params = WalkParams::from_flat(setup_.steps, effective_theta(theta),
                                                    setup_.first_coin_constrained);
    WalkState out = evolve(params, WalkState::initial(setup_.steps, setup_.input_coin));
    return project_coin(out, setup_.projection_axis);
}

double Oracle::evaluate_exact(const Eigen::VectorXd& theta) const {
    const Projection p = project_for(theta);
    if (p.null_projection) return 0.0;
    return fidelity(setup_.target, p.state);
}

std::optional<Eigen::VectorXd> Oracle::basis_probabilities(const Eigen::VectorXd& theta) const {
    const Projection p = project_for(theta);
    if (p.null_projection) return std::nullopt;
    Eigen::VectorXd probs(basis_.dim());
    for (int j = 0; j < basis_.dim(); ++j) {
        probs(j) = fidelity(basis_.vectors[j], p.state);
    }
    return probs;
}

double Oracle::success_probability(const Eigen::VectorXd& theta) const {
    return project_for(theta).success_probability;
}

double Oracle::estimate_fidelity(const Eigen::VectorXd& theta) {
    const auto probs = basis_probabilities(theta);
    if (!probs) return 0.0;
    if (!setup_.noise.enabled) return (*probs)(0);
    const auto counts = simulate_counts(*probs, setup_.noise, rng_);
    std::uint64_t total = 0;
    for (std::uint64_t c : counts) total += c;
    if (total == 0) return 0.0;
    return static_cast<double>(counts[0]) / static_cast<double>(total);
}

double Oracle::cost(const Eigen::VectorXd& theta) {
    ++evaluations_;
    if (setup_.perturbation.enabled) perturb_step();
    return 1.0 - estimate_fidelity(theta);
}

void Oracle::apply_offset(const PerturbationHandle& handle, double delta, bool forced) {
    const int idx = flat_index(setup_.steps, setup_.first_coin_constrained,
                               handle.step, handle.angle);
    hidden_offsets_(idx) += delta;
    event_log_.push_back({evaluations_, handle, delta, forced});
}

std::vector<PerturbationEvent> Oracle::perturb_step() {
    const std::size_t first = event_log_.size();
    const PerturbationConfig& pc = setup_.perturbation;
    for (const ForcedOffset& f : pc.forced) {
        if (f.eval == evaluations_) apply_offset(f.handle, f.delta_rad, true);
    }
    if (pc.probability_q > 0.0) {
        for (const PerturbationHandle& h : pc.handles) {
            std::uniform_real_distribution<double> u01(0.0, 1.0);
            if (u01(rng_) >= pc.probability_q) continue;
            double delta = pc.offset_mean_rad;
            if (pc.offset_std_rad > 0.0) {
                std::normal_distribution<double> gauss(pc.offset_mean_rad, pc.offset_std_rad);
                delta = gauss(rng_);
            }
            apply_offset(h, delta, false);
        }
    }
    return {event_log_.begin() + first, event_log_.end()};
}

std::vector<PerturbationEvent> Oracle::events_at(std::uint64_t eval) const {
    std::vector<PerturbationEvent> out;
    for (const PerturbationEvent& e : event_log_) {
        if (e.eval == eval) out.push_back(e);
    }
    return out;
}

}  // namespace qwopt
