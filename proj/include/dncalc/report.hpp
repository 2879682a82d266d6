#pragma once

#include "dncalc/common.hpp"

#include <map>
#include <string>
#include <vector>

namespace dncalc {

enum class Comparison { less, less_equal, greater, greater_equal };

/// One verdict condition: metrics[metric] <cmp> threshold.
struct Requirement {
    std::string metric;
    Comparison cmp;
    double threshold;
    bool satisfied(double value) const;
};

struct RefinementPoint {
    int points = 0;
    int levels = 0;
    double value = 0.0;
};

struct Summary {
    double min = 0.0;
    double median = 0.0;
    double max = 0.0;
    std::size_t count = 0;
};

Summary summarize(const std::vector<double>& xs);

/// Record of one numerical check. The verdict is recomputed from the stored metrics.
struct EstimateReport {
    std::string name;
    std::string statement;
    std::string family;
    std::string cutoff;
    std::map<std::string, double> grid;      // dimension, length, points, height, levels
    std::map<std::string, double> ensemble;  // seed, size, decay, bandlimit
    std::vector<double> samples;
    Summary constants;
    std::vector<RefinementPoint> refinement;
    std::map<std::string, double> metrics;
    std::map<std::string, std::vector<double>> series;
    std::vector<Requirement> requirements;
    std::vector<std::string> notes;
    double elapsed_seconds = 0.0;

    void set(const std::string& key, double value) { metrics[key] = value; }
    void require(const std::string& metric, Comparison cmp, double threshold);
    /// Statement-level failure such as a solver refusal; forces a failing verdict.
    void fail(const std::string& why);
    bool passed() const;
    /// Unsatisfied requirements as readable strings.
    std::vector<std::string> failures() const;
};

std::string to_string(Comparison c);

}  // namespace dncalc
