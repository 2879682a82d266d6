#pragma once

#include <span>
#include <vector>

namespace dncalc::stats {

double median(std::vector<double> xs);

/// Kendall tau-b of the sequence against its index. Pairs whose values agree to
/// rel_tie relative tolerance count as ties.
double kendall_tau(std::span<const double> ys, double rel_tie = 0.0);

/// Least-squares slope of y against x.
double slope(std::span<const double> x, std::span<const double> y);

/// log2(e_coarse / e_fine) for consecutive refinement levels.
std::vector<double> orders(std::span<const double> errors);

}  // namespace dncalc::stats
