#include "dncalc/stats.hpp"

#include "dncalc/common.hpp"

#include <algorithm>
#include <cmath>

namespace dncalc::stats {

double median(std::vector<double> xs) {
    if (xs.empty()) return 0.0;
    std::sort(xs.begin(), xs.end());
    std::size_t n = xs.size();
    return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

double kendall_tau(std::span<const double> ys, double rel_tie) {
    std::size_t n = ys.size();
    if (n < 2) return 0.0;
    double concordant = 0, discordant = 0, ties_y = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            double d = ys[j] - ys[i];
            double scale = std::max(std::abs(ys[i]), std::abs(ys[j]));
            if (std::abs(d) <= rel_tie * scale || d == 0.0)
                ties_y += 1;
            else if (d > 0)
                concordant += 1;
            else
                discordant += 1;
        }
    double pairs = 0.5 * n * (n - 1);
    double denom = std::sqrt(pairs * (pairs - ties_y));
    return denom > 0 ? (concordant - discordant) / denom : 0.0;
}

double slope(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("slope needs >= 2 points");
    double n = static_cast<double>(x.size()), sx = 0, sy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
    }
    double mx = sx / n, my = sy / n, sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxx > 0 ? sxy / sxx : 0.0;
}

std::vector<double> orders(std::span<const double> e) {
    std::vector<double> out;
    for (std::size_t i = 0; i + 1 < e.size(); ++i) out.push_back(std::log2(e[i] / e[i + 1]));
    return out;
}

}  // namespace dncalc::stats
