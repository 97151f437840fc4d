#pragma once

#include <Eigen/Dense>

#include <array>
#include <optional>
#include <string>

namespace qwopt {

// Kernel table (phi(r), degree of the attached polynomial tail):
//   linear        r              0
//   cubic         r^3            1
//   multiquadric  sqrt(r^2+g^2)  0
//   thin_plate    r^2 log r      1
//   gaussian      exp(-g r^2)    none
enum class RbfKernel { linear, cubic, multiquadric, thin_plate, gaussian };

inline constexpr std::array<RbfKernel, 5> kAllKernels = {
    RbfKernel::linear, RbfKernel::cubic, RbfKernel::multiquadric,
    RbfKernel::thin_plate, RbfKernel::gaussian};

inline constexpr double kDefaultRbfGamma = 0.1;

const char* kernel_name(RbfKernel kind);
std::optional<RbfKernel> kernel_from_name(const std::string& name);

// Degree of the polynomial tail bound to the kernel (-1 means no tail).
int poly_degree(RbfKernel kind);

// Dimension of the polynomial space in N variables: 1 for degree 0,
// N+1 for degree 1, 0 for no tail.
int poly_dim(RbfKernel kind, int n_vars);

double kernel_value(RbfKernel kind, double r, double gamma = kDefaultRbfGamma);

// RBF interpolant s(x) = sum_i lambda_i phi(|x - node_i|) + p(x) over the
// scaled box [0,1]^N.
struct SurrogateModel {
    RbfKernel kernel = RbfKernel::cubic;
    double gamma = kDefaultRbfGamma;
    Eigen::MatrixXd nodes;       // k x N
    Eigen::VectorXd values;      // k
    Eigen::VectorXd rbf_coeffs;  // lambda, k
    Eigen::VectorXd poly_coeffs; // poly_dim(kernel, N)

    int dim() const { return static_cast<int>(nodes.cols()); }
    int size() const { return static_cast<int>(nodes.rows()); }

    double eval(const Eigen::VectorXd& point) const;
    // One row per point.
    Eigen::VectorXd eval_batch(const Eigen::MatrixXd& points) const;
};

// Solves the saddle system
//   [Phi + ridge*I  P] [lambda]   [values]
//   [P^T            0] [c     ] = [0     ]
// where Phi_ij = phi(|node_i - node_j|) and P is the polynomial design
// matrix. Returns nullopt when the system is singular or too ill-conditioned
// to reproduce the data; callers retry with a larger ridge or another kernel.
std::optional<SurrogateModel> fit_surrogate(const Eigen::MatrixXd& nodes,
                                            const Eigen::VectorXd& values,
                                            RbfKernel kernel,
                                            double gamma = kDefaultRbfGamma,
                                            double ridge = 0.0);

// Leave-one-out cross validation over at most max_points most recent nodes;
// returns the kernel with the smallest total absolute prediction error, ties
// broken by table order. Falls back to `current` when there are too few
// points or every kernel fails to fit.
RbfKernel select_kernel_loo(const Eigen::MatrixXd& nodes, const Eigen::VectorXd& values,
                            RbfKernel current, double gamma = kDefaultRbfGamma,
                            double ridge = 0.0, int max_points = 50);

}  // namespace qwopt
