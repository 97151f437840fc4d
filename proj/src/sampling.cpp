#include "qwopt/sampling.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace qwopt {

namespace {

Eigen::MatrixXd one_design(int count, int dim, Rng& rng) {
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    Eigen::MatrixXd points(count, dim);
    std::vector<int> bins(count);
    for (int d = 0; d < dim; ++d) {
        std::iota(bins.begin(), bins.end(), 0);
        std::shuffle(bins.begin(), bins.end(), rng);
        for (int i = 0; i < count; ++i) {
            points(i, d) = (bins[i] + u01(rng)) / count;
        }
    }
    return points;
}

double min_pairwise_distance(const Eigen::MatrixXd& points) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        for (Eigen::Index j = i + 1; j < points.rows(); ++j) {
            best = std::min(best, (points.row(i) - points.row(j)).norm());
        }
    }
    return best;
}

}  // namespace

Eigen::MatrixXd latin_hypercube(int count, int dim, Rng& rng, int n_candidates) {
    if (count < 1 || dim < 1) throw std::invalid_argument("latin_hypercube: count and dim must be >= 1");
    Eigen::MatrixXd best = one_design(count, dim, rng);
    if (count == 1) return best;
    double best_score = min_pairwise_distance(best);
    for (int c = 1; c < n_candidates; ++c) {
        Eigen::MatrixXd candidate = one_design(count, dim, rng);
        const double score = min_pairwise_distance(candidate);
        if (score > best_score) {
            best = std::move(candidate);
            best_score = score;
        }
    }
    return best;
}

}  // namespace qwopt
