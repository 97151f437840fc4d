#include "qwopt/baselines.hpp"
#include "qwopt/optimizer.hpp"
#include "qwopt/oracle.hpp"
#include "qwopt/sampling.hpp"
#include "qwopt/walk.hpp"

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace qwopt;

namespace {

TargetState target_from_amps(const Eigen::VectorXcd& amps) {
    if (amps.size() < 2) throw std::invalid_argument("target needs at least 2 amplitudes");
    TargetState t;
    t.half_width = static_cast<int>(amps.size()) - 1;
    t.amps = amps.normalized();
    return t;
}

py::dict trace_to_dict(const Trace& trace) {
    py::list evals, costs, bests, events;
    py::list thetas;
    for (const IterationRecord& rec : trace.records) {
        evals.append(rec.eval);
        costs.append(rec.cost);
        bests.append(rec.best);
        events.append(event_name(rec.event));
        Eigen::VectorXd deg = rec.theta;
        for (Eigen::Index i = 0; i < deg.size(); ++i) deg(i) = rad_to_deg(deg(i));
        thetas.append(deg);
    }
    py::dict out;
    out["eval"] = evals;
    out["cost"] = costs;
    out["best"] = bests;
    out["event"] = events;
    out["theta_deg"] = thetas;
    Eigen::VectorXd best_theta = trace.summary.best_theta;
    for (Eigen::Index i = 0; i < best_theta.size(); ++i) best_theta(i) = rad_to_deg(best_theta(i));
    out["best_theta_deg"] = best_theta;
    out["best_cost"] = trace.summary.best_cost;
    out["evaluations"] = trace.summary.evaluations;
    return out;
}

Eigen::VectorXd deg_vec_to_rad(const Eigen::VectorXd& deg) {
    Eigen::VectorXd rad = deg;
    for (Eigen::Index i = 0; i < rad.size(); ++i) rad(i) = deg_to_rad(deg(i));
    return rad;
}

// Wraps a python cost callable working in degrees.
SurrogateOptimizer::CostFn wrap_cost(const py::function& fn) {
    return [fn](const Eigen::VectorXd& theta_rad) {
        Eigen::VectorXd deg = theta_rad;
        for (Eigen::Index i = 0; i < deg.size(); ++i) deg(i) = rad_to_deg(deg(i));
        return fn(deg).cast<double>();
    };
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Quantum-walk state engineering sandbox: walk simulation, counting "
              "oracle, RBF surrogate optimizer, and baseline optimizers.";
    m.attr("__version__") = "0.1.0";

    m.def("param_count", &param_count, py::arg("steps"),
          "Free parameters of an n-step walk with the first coin constrained.");

    m.def(
        "coin_matrix",
        [](double t1_deg, double t2_deg, double t3_deg) {
            return coin_matrix({deg_to_rad(t1_deg), deg_to_rad(t2_deg), deg_to_rad(t3_deg)});
        },
        py::arg("theta1_deg"), py::arg("theta2_deg"), py::arg("theta3_deg"),
        "2x2 coin unitary for one waveplate triple (angles in degrees).");

    m.def(
        "evolve_walker",
        [](int steps, const Eigen::VectorXd& theta_deg) {
            const WalkParams params = WalkParams::from_flat(steps, deg_vec_to_rad(theta_deg));
            const WalkState out =
                evolve(params, WalkState::initial(steps, Oracle::Setup::default_input_coin()));
            return out.amplitudes();
        },
        py::arg("steps"), py::arg("theta_deg"),
        "Full (position, coin) amplitude vector after an n-step walk from the "
        "default input state.");

    m.def(
        "random_target",
        [](int band_dim, std::uint64_t seed) { return random_target(band_dim, seed).amps; },
        py::arg("band_dim"), py::arg("seed"),
        "Haar-random normalized state on the reachable band.");

    m.def(
        "fidelity",
        [](const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) {
            return fidelity(target_from_amps(a), target_from_amps(b));
        },
        py::arg("a"), py::arg("b"), "Squared overlap of two band states.");

    m.def(
        "gram_schmidt_basis",
        [](const Eigen::VectorXcd& target) {
            const MeasurementBasis basis = gram_schmidt_basis(target_from_amps(target));
            std::vector<Eigen::VectorXcd> out;
            for (const TargetState& v : basis.vectors) out.push_back(v.amps);
            return out;
        },
        py::arg("target"),
        "Orthonormal measurement basis whose first element is the target.");

    m.def(
        "latin_hypercube",
        [](int count, int dim, std::uint64_t seed) {
            Rng rng(seed);
            return latin_hypercube(count, dim, rng);
        },
        py::arg("count"), py::arg("dim"), py::arg("seed"),
        "Maximin Latin hypercube design in the unit box.");

    py::class_<Oracle>(m, "Oracle",
                       "Black-box cost oracle: noisy infidelity estimates from simulated "
                       "photon counting, with optional hidden waveplate offsets.")
        .def(py::init([](int steps, const Eigen::VectorXcd& target, std::uint64_t seed,
                         double lam, bool noise, double perturb_q) {
                 Oracle::Setup setup;
                 setup.steps = steps;
                 setup.target = target_from_amps(target);
                 setup.seed = seed;
                 setup.noise = {lam, noise};
                 if (perturb_q > 0.0) {
                     setup.perturbation.enabled = true;
                     setup.perturbation.probability_q = perturb_q;
                 }
                 return Oracle(std::move(setup));
             }),
             py::arg("steps"), py::arg("target"), py::arg("seed") = 0,
             py::arg("lam") = 1e4, py::arg("noise") = true, py::arg("perturb_q") = 0.0)
        .def("n_params", &Oracle::n_params)
        .def(
            "cost",
            [](Oracle& o, const Eigen::VectorXd& theta_deg) {
                return o.cost(deg_vec_to_rad(theta_deg));
            },
            py::arg("theta_deg"), "Noisy cost 1 - f_hat; counts as one evaluation.")
        .def(
            "evaluate_exact",
            [](const Oracle& o, const Eigen::VectorXd& theta_deg) {
                return o.evaluate_exact(deg_vec_to_rad(theta_deg));
            },
            py::arg("theta_deg"), "Noiseless fidelity (hidden offsets still apply).")
        .def(
            "estimate_fidelity",
            [](Oracle& o, const Eigen::VectorXd& theta_deg) {
                return o.estimate_fidelity(deg_vec_to_rad(theta_deg));
            },
            py::arg("theta_deg"))
        .def("evaluations", &Oracle::evaluations);

    m.def(
        "minimize_rbf",
        [](const py::function& fn, const Eigen::VectorXd& lower_deg,
           const Eigen::VectorXd& upper_deg, std::uint64_t budget, std::uint64_t seed,
           int init_points) {
            OptimizerConfig cfg;
            cfg.lower = deg_vec_to_rad(lower_deg);
            cfg.upper = deg_vec_to_rad(upper_deg);
            cfg.budget = budget;
            cfg.seed = seed;
            cfg.init_points = init_points;
            SurrogateOptimizer opt(cfg);
            return trace_to_dict(opt.run(wrap_cost(fn)));
        },
        py::arg("fn"), py::arg("lower_deg"), py::arg("upper_deg"), py::arg("budget"),
        py::arg("seed") = 0, py::arg("init_points") = 0,
        "RBF-surrogate global minimization of a black-box callable (degrees in, "
        "cost out). Returns the full trace as a dict.");

    m.def(
        "random_search",
        [](const py::function& fn, const Eigen::VectorXd& lower_deg,
           const Eigen::VectorXd& upper_deg, std::uint64_t budget, std::uint64_t seed) {
            BaselineConfig cfg;
            cfg.lower = deg_vec_to_rad(lower_deg);
            cfg.upper = deg_vec_to_rad(upper_deg);
            cfg.budget = budget;
            cfg.seed = seed;
            return trace_to_dict(random_search(wrap_cost(fn), cfg));
        },
        py::arg("fn"), py::arg("lower_deg"), py::arg("upper_deg"), py::arg("budget"),
        py::arg("seed") = 0);

    m.def(
        "powell",
        [](const py::function& fn, const Eigen::VectorXd& lower_deg,
           const Eigen::VectorXd& upper_deg, std::uint64_t budget, std::uint64_t seed) {
            BaselineConfig cfg;
            cfg.lower = deg_vec_to_rad(lower_deg);
            cfg.upper = deg_vec_to_rad(upper_deg);
            cfg.budget = budget;
            cfg.seed = seed;
            return trace_to_dict(powell(wrap_cost(fn), cfg));
        },
        py::arg("fn"), py::arg("lower_deg"), py::arg("upper_deg"), py::arg("budget"),
        py::arg("seed") = 0);
}
