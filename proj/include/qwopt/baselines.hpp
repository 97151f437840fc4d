#pragma once

#include "qwopt/seeding.hpp"
#include "qwopt/trace.hpp"

#include <Eigen/Dense>

#include <functional>
#include <optional>

namespace qwopt {

struct BaselineConfig {
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
    std::uint64_t budget = 0;
    std::uint64_t seed = 0;

    // Powell only; scaled units. `start` defaults to the box center.
    std::optional<Eigen::VectorXd> start;
    double tolerance = 1e-6;
    int max_line_evals = 40;

    int dim() const { return static_cast<int>(lower.size()); }
    void validate() const;
};

using CostFn = std::function<double(const Eigen::VectorXd&)>;

// Budget i.i.d. uniform points in the box, each evaluated once.
Trace random_search(const CostFn& cost, const BaselineConfig& config);

// Direction-set minimization: per sweep, a derivative-free line search
// (bracketing plus golden section, clipped to the box) along each direction,
// then the direction of largest decrease is replaced by the net sweep
// displacement and searched once more. Stops on budget exhaustion or when a
// sweep improves the cost by less than the tolerance.
Trace powell(const CostFn& cost, const BaselineConfig& config);

}  // namespace qwopt
