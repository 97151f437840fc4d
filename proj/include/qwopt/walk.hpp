#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <vector>

namespace qwopt {

using Complex = std::complex<double>;

inline constexpr double kDegPerRad = 180.0 / 3.14159265358979323846;

inline double deg_to_rad(double deg) { return deg / kDegPerRad; }
inline double rad_to_deg(double rad) { return rad * kDegPerRad; }

// Waveplate triple (QWP-HWP-QWP) controlling one coin operation. Radians.
struct CoinAngles {
    double theta1 = 0.0;
    double theta2 = 0.0;
    double theta3 = 0.0;

    // Angles reduced to [0, 2*pi).
    CoinAngles canonical() const;
};

// Number of free parameters of an n-step walk with the first coin constrained
// to two waveplates (theta1 of step 1 fixed to zero): 3n - 1.
int param_count(int steps);

// Full control vector of an n-step walk. When first_coin_constrained is set,
// coins[0].theta1 is identically zero and not a free parameter.
struct WalkParams {
    int steps = 0;
    std::vector<CoinAngles> coins;
    bool first_coin_constrained = true;

    int free_param_count() const;

    // Layout of the flat vector: step 1 contributes (theta2, theta3) when
    // constrained, every later step contributes (theta1, theta2, theta3).
    static WalkParams from_flat(int steps, const Eigen::VectorXd& theta,
                                bool first_coin_constrained = true);
    Eigen::VectorXd to_flat() const;
};

// Position of (step, angle) in the flat vector; step is 0-based, angle is
// 0-based (0 -> theta1, 1 -> theta2, 2 -> theta3). Throws if the angle is not
// a free parameter.
int flat_index(int steps, bool first_coin_constrained, int step, int angle);

// Amplitudes over (walker position, coin). Positions span the full band
// {-n, ..., n} so that n shift applications starting from 0 never truncate;
// coin index 0 is up, 1 is down.
class WalkState {
public:
    explicit WalkState(int half_width);

    // Walker |0> tensor the given (normalized) coin state.
    static WalkState initial(int half_width, const Eigen::Vector2cd& coin);

    int half_width() const { return n_; }
    Complex& at(int position, int coin) { return amps_(index(position, coin)); }
    const Complex& at(int position, int coin) const { return amps_(index(position, coin)); }
    const Eigen::VectorXcd& amplitudes() const { return amps_; }
    double squared_norm() const { return amps_.squaredNorm(); }

private:
    Eigen::Index index(int position, int coin) const;

    int n_;
    Eigen::VectorXcd amps_;
};

// 2x2 coin unitary parametrized by the waveplate triple:
//   beta = t1 - t3, eta = t1 - 2*t2 + t3, mu = t1 + t3.
Eigen::Matrix2cd coin_matrix(const CoinAngles& angles);

// Coin unitary applied at every walker position.
void apply_coin(WalkState& state, const Eigen::Matrix2cd& coin);

// Controlled shift: (k, up) -> (k-1, down), (k, down) -> (k+1, up).
// Throws std::out_of_range if any amplitude would leave the allocated band.
void apply_shift(WalkState& state);

// n alternating coin-then-shift applications.
WalkState evolve(const WalkParams& params, WalkState input);

// Normalized state on the reachable band {-n, -n+2, ..., n} (dimension n+1).
// Entry j corresponds to walker position -n + 2j.
struct TargetState {
    int half_width = 0;
    Eigen::VectorXcd amps;

    int dim() const { return static_cast<int>(amps.size()); }
    int position(int j) const { return -half_width + 2 * j; }
};

// |m> on the band of the given half width (m must share the band parity).
TargetState basis_target(int half_width, int m);

// (c1 |m1> + c2 |m2>) normalized.
TargetState superposition_target(int half_width, int m1, int m2, Complex c1, Complex c2);

// Haar-uniform random state: i.i.d. standard complex Gaussian entries,
// normalized. Deterministic for a fixed seed.
TargetState random_target(int band_dim, std::uint64_t rng_seed);

struct Projection {
    TargetState state;
    double success_probability = 0.0;
    // Set when the squared norm of the projected amplitudes falls below
    // 1e-12; state is all-zero in that case and must not be used.
    bool null_projection = false;
};

// Project the coin register onto the given (normalized) axis and restrict
// the walker amplitudes to the reachable band.
Projection project_coin(const WalkState& state, const Eigen::Vector2cd& coin_axis);

// |<a|b>|^2. Throws std::invalid_argument on band mismatch.
double fidelity(const TargetState& a, const TargetState& b);

// Orthonormal basis of the band whose first element is the target.
struct MeasurementBasis {
    std::vector<TargetState> vectors;

    int dim() const { return static_cast<int>(vectors.size()); }
};

// Gram-Schmidt over the fixed seed order (-n, -n+2, ..., n), skipping seeds
// whose residual norm falls below 1e-10.
MeasurementBasis gram_schmidt_basis(const TargetState& target);

}  // namespace qwopt
