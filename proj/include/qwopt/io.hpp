#pragma once

#include "qwopt/oracle.hpp"
#include "qwopt/trace.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace qwopt {

// Shortest round-trip decimal representation; stable across runs.
std::string format_double(double value);

// FNV-1a 64-bit, hex encoded; used as the config fingerprint in metadata.
std::string fnv1a_hex(const std::string& data);

// One IterationRecord per line with keys eval, theta_deg, cost, best, event.
// Angles are converted to degrees on the way out; no timestamps, so repeated
// runs produce byte-identical files.
void write_jsonl(const Trace& trace, const std::filesystem::path& path);

// Re-reads a JSONL trace written by write_jsonl (angles back to radians).
Trace read_jsonl(const std::filesystem::path& path);

void write_text_file(const std::filesystem::path& path, const std::string& contents);

nlohmann::json trace_run_entry(const Trace& trace, const std::string& file,
                               const std::vector<PerturbationEvent>& events);

// Pointwise mean of per-state average best-so-far curves, plus the standard
// deviation across states and the standard deviation of the mean.
struct AggregateCurve {
    std::vector<double> mean;
    std::vector<double> std_across_states;
    std::vector<double> std_of_mean;
};

AggregateCurve aggregate(const std::vector<std::vector<const Trace*>>& traces_by_state,
                         std::size_t length);

std::string aggregate_csv(const AggregateCurve& curve, const std::string& label);

}  // namespace qwopt
