#include "qwopt/io.hpp"

#include "qwopt/walk.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace qwopt {

using nlohmann::json;

std::string format_double(double value) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

std::string fnv1a_hex(const std::string& data) {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    std::ostringstream out;
    out << std::hex << hash;
    return out.str();
}

namespace {

json record_to_json(const IterationRecord& rec) {
    json theta = json::array();
    for (Eigen::Index i = 0; i < rec.theta.size(); ++i) {
        theta.push_back(rad_to_deg(rec.theta(i)));
    }
    return json{{"eval", rec.eval},
                {"theta_deg", theta},
                {"cost", rec.cost},
                {"best", rec.best},
                {"event", event_name(rec.event)}};
}

EventTag tag_from_name(const std::string& name) {
    for (int t = 0; t <= static_cast<int>(EventTag::perturbation); ++t) {
        if (name == event_name(static_cast<EventTag>(t))) return static_cast<EventTag>(t);
    }
    throw std::runtime_error("unknown event tag: " + name);
}

}  // namespace

void write_jsonl(const Trace& trace, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    for (const IterationRecord& rec : trace.records) {
        out << record_to_json(rec).dump() << "\n";
    }
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

Trace read_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path.string());
    Trace trace;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const json doc = json::parse(line);
        IterationRecord rec;
        rec.eval = doc.at("eval").get<std::uint64_t>();
        const json& theta = doc.at("theta_deg");
        rec.theta.resize(static_cast<Eigen::Index>(theta.size()));
        for (std::size_t i = 0; i < theta.size(); ++i) {
            rec.theta(static_cast<Eigen::Index>(i)) = deg_to_rad(theta[i].get<double>());
        }
        rec.cost = doc.at("cost").get<double>();
        rec.best = doc.at("best").get<double>();
        rec.event = tag_from_name(doc.at("event").get<std::string>());
        trace.records.push_back(std::move(rec));
    }
    if (!trace.records.empty()) {
        trace.summary.evaluations = trace.records.back().eval;
        const auto best = std::min_element(
            trace.records.begin(), trace.records.end(),
            [](const IterationRecord& a, const IterationRecord& b) { return a.cost < b.cost; });
        trace.summary.best_cost = best->cost;
        trace.summary.best_theta = best->theta;
        trace.summary.best_eval = best->eval;
    }
    return trace;
}

void write_text_file(const std::filesystem::path& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    out << contents;
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

json trace_run_entry(const Trace& trace, const std::string& file,
                     const std::vector<PerturbationEvent>& events) {
    json entry = {
        {"file", file},
        {"run_id", trace.info.run_id},
        {"algorithm", trace.info.algorithm},
        {"target", trace.info.target_name},
        {"state", trace.info.state_index},
        {"repeat", trace.info.repeat},
        {"steps", trace.info.steps},
        {"target_seed", trace.info.target_seed},
        {"oracle_seed", trace.info.oracle_seed},
        {"optimizer_seed", trace.info.optimizer_seed},
        {"evaluations", trace.summary.evaluations},
        {"best_cost", trace.summary.best_cost},
        {"best_eval", trace.summary.best_eval},
        {"stall_restarts", trace.summary.stall_restarts},
        {"degradation_restarts", trace.summary.degradation_restarts},
        {"perturbations", trace.summary.perturbations},
    };
    json best_theta = json::array();
    for (Eigen::Index i = 0; i < trace.summary.best_theta.size(); ++i) {
        best_theta.push_back(rad_to_deg(trace.summary.best_theta(i)));
    }
    entry["best_theta_deg"] = best_theta;
    if (trace.summary.exact_fidelity) entry["exact_fidelity"] = *trace.summary.exact_fidelity;
    if (trace.summary.evals_to_threshold) entry["evals_to_threshold"] = *trace.summary.evals_to_threshold;
    json evs = json::array();
    for (const PerturbationEvent& e : events) {
        evs.push_back({{"eval", e.eval},
                       {"step", e.handle.step + 1},
                       {"angle", e.handle.angle + 1},
                       {"delta_deg", rad_to_deg(e.delta_rad)},
                       {"forced", e.forced}});
    }
    entry["perturbation_events"] = evs;
    return entry;
}

AggregateCurve aggregate(const std::vector<std::vector<const Trace*>>& traces_by_state,
                         std::size_t length) {
    if (traces_by_state.empty()) throw std::invalid_argument("aggregate: no traces");
    for (const auto& group : traces_by_state) {
        if (group.empty()) throw std::invalid_argument("aggregate: empty state group");
        for (const Trace* t : group) {
            if (t->records.size() != group.front()->records.size()) {
                throw std::invalid_argument("aggregate: traces of unequal length");
            }
        }
    }

    const std::size_t n_states = traces_by_state.size();
    std::vector<std::vector<double>> state_means(n_states, std::vector<double>(length, 0.0));
    for (std::size_t s = 0; s < n_states; ++s) {
        const auto& group = traces_by_state[s];
        for (const Trace* t : group) {
            const std::vector<double> curve = best_curve(*t, length);
            for (std::size_t i = 0; i < length; ++i) state_means[s][i] += curve[i];
        }
        for (std::size_t i = 0; i < length; ++i) state_means[s][i] /= group.size();
    }

    AggregateCurve out;
    out.mean.assign(length, 0.0);
    out.std_across_states.assign(length, 0.0);
    out.std_of_mean.assign(length, 0.0);
    for (std::size_t i = 0; i < length; ++i) {
        double m = 0.0;
        for (std::size_t s = 0; s < n_states; ++s) m += state_means[s][i];
        m /= n_states;
        out.mean[i] = m;
        if (n_states > 1) {
            double var = 0.0;
            for (std::size_t s = 0; s < n_states; ++s) {
                const double d = state_means[s][i] - m;
                var += d * d;
            }
            var /= (n_states - 1);
            out.std_across_states[i] = std::sqrt(var);
            out.std_of_mean[i] = std::sqrt(var / n_states);
        }
    }
    return out;
}

std::string aggregate_csv(const AggregateCurve& curve, const std::string& label) {
    std::ostringstream out;
    out << "label,eval,mean_best_cost,std_across_states,std_of_mean\n";
    for (std::size_t i = 0; i < curve.mean.size(); ++i) {
        out << label << "," << (i + 1) << "," << format_double(curve.mean[i]) << ","
            << format_double(curve.std_across_states[i]) << ","
            << format_double(curve.std_of_mean[i]) << "\n";
    }
    return out.str();
}

}  // namespace qwopt
