#pragma once

#include <cmath>
#include <string>

namespace dncalc {

/// Smooth cutoff equal to 1 on [0, 1] and 0 on [2, inf):
/// chi(t) = psi(2 - t) / (psi(2 - t) + psi(t - 1)), psi(s) = exp(-1/s) for s > 0.
struct SmoothCutoff {
    static double psi(double s) { return s > 0 ? std::exp(-1.0 / s) : 0.0; }
    static double psi1(double s) { return s > 0 ? psi(s) / (s * s) : 0.0; }
    static double psi2(double s) { return s > 0 ? psi(s) * (1.0 - 2.0 * s) / (s * s * s * s) : 0.0; }

    static double value(double t) {
        if (t <= 1.0) return 1.0;
        if (t >= 2.0) return 0.0;
        double a = psi(2.0 - t), c = psi(t - 1.0);
        return a / (a + c);
    }

    static double derivative(double t) {
        if (t <= 1.0 || t >= 2.0) return 0.0;
        double a = psi(2.0 - t), c = psi(t - 1.0);
        double da = -psi1(2.0 - t), dc = psi1(t - 1.0);
        double D = a + c;
        return (da * c - a * dc) / (D * D);
    }

    static double second(double t) {
        if (t <= 1.0 || t >= 2.0) return 0.0;
        double a = psi(2.0 - t), c = psi(t - 1.0);
        double da = -psi1(2.0 - t), dc = psi1(t - 1.0);
        double dda = psi2(2.0 - t), ddc = psi2(t - 1.0);
        double D = a + c, dD = da + dc;
        double num = da * c - a * dc, dnum = dda * c - a * ddc;
        return dnum / (D * D) - 2.0 * num * dD / (D * D * D);
    }

    static std::string descriptor() {
        return "chi(t) = psi(2-t)/(psi(2-t)+psi(t-1)), psi(s) = exp(-1/s); 1 on [0,1], 0 on [2,inf)";
    }
};

}  // namespace dncalc
