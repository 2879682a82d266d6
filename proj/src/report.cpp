#include "dncalc/report.hpp"

#include "dncalc/stats.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dncalc {

bool Requirement::satisfied(double v) const {
    if (!std::isfinite(v)) return false;
    switch (cmp) {
        case Comparison::less: return v < threshold;
        case Comparison::less_equal: return v <= threshold;
        case Comparison::greater: return v > threshold;
        case Comparison::greater_equal: return v >= threshold;
    }
    return false;
}

std::string to_string(Comparison c) {
    switch (c) {
        case Comparison::less: return "<";
        case Comparison::less_equal: return "<=";
        case Comparison::greater: return ">";
        case Comparison::greater_equal: return ">=";
    }
    return "?";
}

Summary summarize(const std::vector<double>& xs) {
    Summary s;
    s.count = xs.size();
    if (xs.empty()) return s;
    s.min = *std::min_element(xs.begin(), xs.end());
    s.max = *std::max_element(xs.begin(), xs.end());
    s.median = stats::median(xs);
    return s;
}

void EstimateReport::require(const std::string& metric, Comparison cmp, double threshold) {
    requirements.push_back({metric, cmp, threshold});
}

void EstimateReport::fail(const std::string& why) {
    notes.push_back("error: " + why);
    metrics["error"] = 1.0;
    require("error", Comparison::less, 0.5);
}

bool EstimateReport::passed() const {
    if (requirements.empty()) return false;
    for (const auto& r : requirements) {
        auto it = metrics.find(r.metric);
        if (it == metrics.end() || !r.satisfied(it->second)) return false;
    }
    return true;
}

std::vector<std::string> EstimateReport::failures() const {
    std::vector<std::string> out;
    for (const auto& r : requirements) {
        auto it = metrics.find(r.metric);
        std::ostringstream os;
        if (it == metrics.end()) {
            os << r.metric << " missing";
            out.push_back(os.str());
        } else if (!r.satisfied(it->second)) {
            os << r.metric << " = " << it->second << " (need " << to_string(r.cmp) << " "
               << r.threshold << ")";
            out.push_back(os.str());
        }
    }
    return out;
}

}  // namespace dncalc
