#include "qwopt/rbf.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace qwopt {

const char* kernel_name(RbfKernel kind) {
    switch (kind) {
        case RbfKernel::linear: return "linear";
        case RbfKernel::cubic: return "cubic";
        case RbfKernel::multiquadric: return "multiquadric";
        case RbfKernel::thin_plate: return "thin_plate";
        case RbfKernel::gaussian: return "gaussian";
    }
    return "unknown";
}

std::optional<RbfKernel> kernel_from_name(const std::string& name) {
    for (RbfKernel k : kAllKernels) {
        if (name == kernel_name(k)) return k;
    }
    return std::nullopt;
}

int poly_degree(RbfKernel kind) {
    switch (kind) {
        case RbfKernel::linear: return 0;
        case RbfKernel::cubic: return 1;
        case RbfKernel::multiquadric: return 0;
        case RbfKernel::thin_plate: return 1;
        case RbfKernel::gaussian: return -1;
    }
    return -1;
}

int poly_dim(RbfKernel kind, int n_vars) {
    switch (poly_degree(kind)) {
        case 0: return 1;
        case 1: return n_vars + 1;
        default: return 0;
    }
}

double kernel_value(RbfKernel kind, double r, double gamma) {
    switch (kind) {
        case RbfKernel::linear: return r;
        case RbfKernel::cubic: return r * r * r;
        case RbfKernel::multiquadric: return std::sqrt(r * r + gamma * gamma);
        case RbfKernel::thin_plate: return r > 0.0 ? r * r * std::log(r) : 0.0;
        case RbfKernel::gaussian: return std::exp(-gamma * r * r);
    }
    return 0.0;
}

namespace {

// Pairwise distances ||A_i - B_j|| via the Gram-matrix identity; clamped at 0
// to absorb cancellation.
Eigen::MatrixXd pairwise_distances(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    Eigen::VectorXd a2 = a.rowwise().squaredNorm();
    Eigen::VectorXd b2 = b.rowwise().squaredNorm();
    Eigen::MatrixXd d2 = (-2.0 * a * b.transpose());
    d2.colwise() += a2;
    d2.rowwise() += b2.transpose();
    return d2.cwiseMax(0.0).cwiseSqrt();
}

Eigen::MatrixXd kernel_matrix(RbfKernel kind, double gamma, const Eigen::MatrixXd& dist) {
    Eigen::MatrixXd phi(dist.rows(), dist.cols());
    for (Eigen::Index i = 0; i < dist.rows(); ++i) {
        for (Eigen::Index j = 0; j < dist.cols(); ++j) {
            phi(i, j) = kernel_value(kind, dist(i, j), gamma);
        }
    }
    return phi;
}

Eigen::MatrixXd poly_design(RbfKernel kind, const Eigen::MatrixXd& points) {
    const int d = poly_dim(kind, static_cast<int>(points.cols()));
    Eigen::MatrixXd p(points.rows(), d);
    if (d == 0) return p;
    p.col(0).setOnes();
    if (d > 1) p.rightCols(points.cols()) = points;
    return p;
}

}  // namespace

double SurrogateModel::eval(const Eigen::VectorXd& point) const {
    Eigen::MatrixXd row = point.transpose();
    return eval_batch(row)(0);
}

Eigen::VectorXd SurrogateModel::eval_batch(const Eigen::MatrixXd& points) const {
    const Eigen::MatrixXd dist = pairwise_distances(points, nodes);
    Eigen::VectorXd out = kernel_matrix(kernel, gamma, dist) * rbf_coeffs;
    if (poly_coeffs.size() > 0) {
        out += poly_design(kernel, points) * poly_coeffs;
    }
    return out;
}

std::optional<SurrogateModel> fit_surrogate(const Eigen::MatrixXd& nodes,
                                            const Eigen::VectorXd& values,
                                            RbfKernel kernel, double gamma, double ridge) {
    const Eigen::Index k = nodes.rows();
    const int n = static_cast<int>(nodes.cols());
    const int dt = poly_dim(kernel, n);
    if (k == 0 || values.size() != k) {
        throw std::invalid_argument("fit_surrogate: node/value size mismatch");
    }
    if (k < dt) return std::nullopt;

    const Eigen::Index m = k + dt;
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, m);
    a.topLeftCorner(k, k) = kernel_matrix(kernel, gamma, pairwise_distances(nodes, nodes));
    a.topLeftCorner(k, k).diagonal().array() += ridge;
    if (dt > 0) {
        const Eigen::MatrixXd p = poly_design(kernel, nodes);
        a.topRightCorner(k, dt) = p;
        a.bottomLeftCorner(dt, k) = p.transpose();
    }
    Eigen::VectorXd b = Eigen::VectorXd::Zero(m);
    b.head(k) = values;

    Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
    Eigen::VectorXd x = lu.solve(b);
    if (!x.allFinite()) return std::nullopt;

    // A couple of iterative refinement passes keep node residuals near
    // machine precision even for poorly scaled kernels.
    const double btol = std::max(1.0, b.cwiseAbs().maxCoeff());
    for (int pass = 0; pass < 2; ++pass) {
        Eigen::VectorXd r = b - a * x;
        if (r.cwiseAbs().maxCoeff() < 1e-12 * btol) break;
        Eigen::VectorXd dx = lu.solve(r);
        if (!dx.allFinite()) break;
        x += dx;
    }
    const double residual = (b - a * x).cwiseAbs().maxCoeff();
    if (!std::isfinite(residual) || residual > 1e-6 * btol) return std::nullopt;

    SurrogateModel model;
    model.kernel = kernel;
    model.gamma = gamma;
    model.nodes = nodes;
    model.values = values;
    model.rbf_coeffs = x.head(k);
    model.poly_coeffs = x.tail(dt);
    return model;
}

RbfKernel select_kernel_loo(const Eigen::MatrixXd& nodes, const Eigen::VectorXd& values,
                            RbfKernel current, double gamma, double ridge, int max_points) {
    const int n = static_cast<int>(nodes.cols());
    int max_dt = 0;
    for (RbfKernel k : kAllKernels) max_dt = std::max(max_dt, poly_dim(k, n));
    const Eigen::Index total = nodes.rows();
    if (total < max_dt + 2) return current;

    const Eigen::Index count = std::min<Eigen::Index>(total, max_points);
    const Eigen::MatrixXd pts = nodes.bottomRows(count);
    const Eigen::VectorXd vals = values.tail(count);
    const double scale = 1.0 + vals.cwiseAbs().maxCoeff();

    bool found = false;
    RbfKernel best = current;
    double best_err = std::numeric_limits<double>::infinity();
    for (RbfKernel kind : kAllKernels) {
        double err = 0.0;
        bool ok = true;
        for (Eigen::Index j = 0; j < count && ok; ++j) {
            Eigen::MatrixXd train_x(count - 1, n);
            Eigen::VectorXd train_v(count - 1);
            Eigen::Index r = 0;
            for (Eigen::Index i = 0; i < count; ++i) {
                if (i == j) continue;
                train_x.row(r) = pts.row(i);
                train_v(r) = vals(i);
                ++r;
            }
            const auto model = fit_surrogate(train_x, train_v, kind, gamma, ridge);
            if (!model) {
                ok = false;
                break;
            }
            err += std::abs(model->eval(pts.row(j).transpose()) - vals(j));
        }
        if (!ok) continue;
        // Errors at rounding level count as exact so that ties resolve by
        // table order deterministically.
        if (err < 1e-8 * scale) err = 0.0;
        if (!found || err < best_err) {
            found = true;
            best = kind;
            best_err = err;
        }
    }
    return found ? best : current;
}

}  // namespace qwopt
