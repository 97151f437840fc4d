#pragma once

#include "qwopt/seeding.hpp"

#include <Eigen/Dense>

namespace qwopt {

// Latin hypercube design in [0,1]^dim: one point per bin per dimension.
// Draws n_candidates designs and keeps the one maximizing the minimum
// pairwise distance.
Eigen::MatrixXd latin_hypercube(int count, int dim, Rng& rng, int n_candidates = 50);

}  // namespace qwopt
