#include "qwopt/walk.hpp"

#include "qwopt/seeding.hpp"

#include <cmath>
#include <stdexcept>

namespace qwopt {

namespace {
constexpr double kTwoPi = 2.0 * 3.14159265358979323846;
}

CoinAngles CoinAngles::canonical() const {
    auto wrap = [](double a) {
        double r = std::fmod(a, kTwoPi);
        return r < 0.0 ? r + kTwoPi : r;
    };
    return {wrap(theta1), wrap(theta2), wrap(theta3)};
}

int param_count(int steps) {
    if (steps < 1) throw std::invalid_argument("param_count: steps must be >= 1");
    return 3 * steps - 1;
}

int WalkParams::free_param_count() const {
    return first_coin_constrained ? 3 * steps - 1 : 3 * steps;
}

WalkParams WalkParams::from_flat(int steps, const Eigen::VectorXd& theta,
                                 bool first_coin_constrained) {
    if (steps < 1) throw std::invalid_argument("from_flat: steps must be >= 1");
    const int expected = first_coin_constrained ? 3 * steps - 1 : 3 * steps;
    if (theta.size() != expected) {
        throw std::invalid_argument("from_flat: expected " + std::to_string(expected) +
                                    " parameters, got " + std::to_string(theta.size()));
    }
    WalkParams p;
    p.steps = steps;
    p.first_coin_constrained = first_coin_constrained;
    p.coins.resize(steps);
    Eigen::Index i = 0;
    for (int s = 0; s < steps; ++s) {
        CoinAngles& c = p.coins[s];
        if (s == 0 && first_coin_constrained) {
            c.theta1 = 0.0;
        } else {
            c.theta1 = theta(i++);
        }
        c.theta2 = theta(i++);
        c.theta3 = theta(i++);
    }
    return p;
}

Eigen::VectorXd WalkParams::to_flat() const {
    Eigen::VectorXd theta(free_param_count());
    Eigen::Index i = 0;
    for (int s = 0; s < steps; ++s) {
        const CoinAngles& c = coins[s];
        if (!(s == 0 && first_coin_constrained)) theta(i++) = c.theta1;
        theta(i++) = c.theta2;
        theta(i++) = c.theta3;
    }
    return theta;
}

int flat_index(int steps, bool first_coin_constrained, int step, int angle) {
    if (step < 0 || step >= steps) throw std::invalid_argument("flat_index: step out of range");
    if (angle < 0 || angle > 2) throw std::invalid_argument("flat_index: angle out of range");
    if (!first_coin_constrained) return 3 * step + angle;
    if (step == 0) {
        if (angle == 0) {
            throw std::invalid_argument("flat_index: theta1 of step 1 is not a free parameter");
        }
        return angle - 1;
    }
    return 2 + 3 * (step - 1) + angle;
}

WalkState::WalkState(int half_width) : n_(half_width) {
    if (half_width < 0) throw std::invalid_argument("WalkState: negative half width");
    amps_ = Eigen::VectorXcd::Zero(2 * (2 * half_width + 1));
}

WalkState WalkState::initial(int half_width, const Eigen::Vector2cd& coin) {
    WalkState s(half_width);
    s.at(0, 0) = coin(0);
    s.at(0, 1) = coin(1);
    return s;
}

Eigen::Index WalkState::index(int position, int coin) const {
    if (position < -n_ || position > n_) throw std::out_of_range("WalkState: position outside band");
    if (coin < 0 || coin > 1) throw std::out_of_range("WalkState: coin index");
    return 2 * static_cast<Eigen::Index>(position + n_) + coin;
}

Eigen::Matrix2cd coin_matrix(const CoinAngles& angles) {
    const double beta = angles.theta1 - angles.theta3;
    const double eta = angles.theta1 - 2.0 * angles.theta2 + angles.theta3;
    const double mu = angles.theta1 + angles.theta3;
    const double ce = std::cos(eta);
    const double se = std::sin(eta);
    Eigen::Matrix2cd c;
    c(0, 0) = std::polar(1.0, -beta) * ce;
    c(0, 1) = Complex(std::cos(mu), std::sin(mu)) * se;
    c(1, 0) = Complex(-std::cos(mu), std::sin(mu)) * se;
    c(1, 1) = std::polar(1.0, beta) * ce;
    return c;
}

void apply_coin(WalkState& state, const Eigen::Matrix2cd& coin) {
    const int n = state.half_width();
    for (int k = -n; k <= n; ++k) {
        const Complex up = state.at(k, 0);
        const Complex down = state.at(k, 1);
        state.at(k, 0) = coin(0, 0) * up + coin(0, 1) * down;
        state.at(k, 1) = coin(1, 0) * up + coin(1, 1) * down;
    }
}

void apply_shift(WalkState& state) {
    const int n = state.half_width();
    if (state.at(-n, 0) != Complex(0.0, 0.0) || state.at(n, 1) != Complex(0.0, 0.0)) {
        throw std::out_of_range("apply_shift: amplitude would leave the allocated band");
    }
    WalkState out(n);
    for (int k = -n; k <= n; ++k) {
        const Complex up = state.at(k, 0);
        const Complex down = state.at(k, 1);
        if (up != Complex(0.0, 0.0)) out.at(k - 1, 1) += up;
        if (down != Complex(0.0, 0.0)) out.at(k + 1, 0) += down;
    }
    state = out;
}

WalkState evolve(const WalkParams& params, WalkState input) {
    if (static_cast<int>(params.coins.size()) != params.steps) {
        throw std::invalid_argument("evolve: params.coins size does not match steps");
    }
    for (int s = 0; s < params.steps; ++s) {
        apply_coin(input, coin_matrix(params.coins[s]));
        apply_shift(input);
    }
    return input;
}

TargetState basis_target(int half_width, int m) {
    if (std::abs(m) > half_width || ((m - half_width) % 2) != 0) {
        throw std::invalid_argument("basis_target: position not on the reachable band");
    }
    TargetState t;
    t.half_width = half_width;
    t.amps = Eigen::VectorXcd::Zero(half_width + 1);
    t.amps((m + half_width) / 2) = 1.0;
    return t;
}

TargetState superposition_target(int half_width, int m1, int m2, Complex c1, Complex c2) {
    TargetState a = basis_target(half_width, m1);
    TargetState b = basis_target(half_width, m2);
    TargetState t;
    t.half_width = half_width;
    t.amps = c1 * a.amps + c2 * b.amps;
    t.amps.normalize();
    return t;
}

TargetState random_target(int band_dim, std::uint64_t rng_seed) {
    if (band_dim < 2) throw std::invalid_argument("random_target: band_dim must be >= 2");
    Rng rng(rng_seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    TargetState t;
    t.half_width = band_dim - 1;
    t.amps.resize(band_dim);
    for (int j = 0; j < band_dim; ++j) {
        const double re = gauss(rng);
        const double im = gauss(rng);
        t.amps(j) = Complex(re, im);
    }
    t.amps.normalize();
    return t;
}

Projection project_coin(const WalkState& state, const Eigen::Vector2cd& coin_axis) {
    const int n = state.half_width();
    Projection p;
    p.state.half_width = n;
    p.state.amps.resize(n + 1);
    for (int j = 0; j <= n; ++j) {
        const int k = -n + 2 * j;
        p.state.amps(j) = std::conj(coin_axis(0)) * state.at(k, 0) +
                          std::conj(coin_axis(1)) * state.at(k, 1);
    }
    p.success_probability = p.state.amps.squaredNorm();
    if (p.success_probability < 1e-12) {
        p.null_projection = true;
        p.state.amps.setZero();
        return p;
    }
    p.state.amps /= std::sqrt(p.success_probability);
    return p;
}

double fidelity(const TargetState& a, const TargetState& b) {
    if (a.half_width != b.half_width || a.amps.size() != b.amps.size()) {
        throw std::invalid_argument("fidelity: band mismatch");
    }
    return std::norm(a.amps.dot(b.amps));
}

MeasurementBasis gram_schmidt_basis(const TargetState& target) {
    const int dim = target.dim();
    MeasurementBasis basis;
    basis.vectors.reserve(dim);
    basis.vectors.push_back(target);
    basis.vectors.front().amps.normalize();

    for (int seed = 0; seed < dim && basis.dim() < dim; ++seed) {
        Eigen::VectorXcd r = Eigen::VectorXcd::Zero(dim);
        r(seed) = 1.0;
        // Two orthogonalization passes keep the residual orthogonal to
        // working precision.
        for (int pass = 0; pass < 2; ++pass) {
            for (const TargetState& v : basis.vectors) {
                r -= v.amps.dot(r) * v.amps;
            }
        }
        const double norm = r.norm();
        if (norm < 1e-10) continue;
        TargetState v;
        v.half_width = target.half_width;
        v.amps = r / norm;
        basis.vectors.push_back(std::move(v));
    }
    return basis;
}

}  // namespace qwopt
