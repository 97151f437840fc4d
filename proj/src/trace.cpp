#include "qwopt/trace.hpp"

#include <stdexcept>

namespace qwopt {

const char* event_name(EventTag tag) {
    switch (tag) {
        case EventTag::none: return "none";
        case EventTag::lhd_init: return "lhd_init";
        case EventTag::global_search: return "global";
        case EventTag::local_search: return "local";
        case EventTag::refine: return "refine";
        case EventTag::stall_restart: return "stall_restart";
        case EventTag::degradation_check: return "degradation_check";
        case EventTag::degradation_restart: return "degradation_restart";
        case EventTag::perturbation: return "perturbation";
    }
    return "none";
}

std::vector<double> best_curve(const Trace& trace, std::size_t length) {
    if (trace.records.empty()) throw std::invalid_argument("best_curve: empty trace");
    std::vector<double> curve(length);
    double last = trace.records.front().best;
    for (std::size_t i = 0; i < length; ++i) {
        if (i < trace.records.size()) last = trace.records[i].best;
        curve[i] = last;
    }
    return curve;
}

}  // namespace qwopt
