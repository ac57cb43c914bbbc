#ifndef BEAMCORR_QUADRATURE_HPP
#define BEAMCORR_QUADRATURE_HPP

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "beamcorr/common.hpp"

namespace beamcorr {

namespace detail {

// 15-point Kronrod / 7-point Gauss pair on [-1, 1].
inline constexpr double gk15_x[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769, 0.741531185599394,
    0.586087235467691, 0.405845151377397, 0.207784955007898, 0.000000000000000};
inline constexpr double gk15_wk[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728};
inline constexpr double gk15_wg[4] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119, 0.417959183673469};

template <typename F>
inline std::pair<double, double> gauss_kronrod_15(const F& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    double fv[15];
    for (int j = 0; j < 7; ++j) {
        fv[j] = f(c - h * gk15_x[j]);
        fv[14 - j] = f(c + h * gk15_x[j]);
    }
    fv[7] = f(c);
    double kronrod = gk15_wk[7] * fv[7];
    double gauss = gk15_wg[3] * fv[7];
    for (int j = 0; j < 7; ++j) kronrod += gk15_wk[j] * (fv[j] + fv[14 - j]);
    for (int j = 0; j < 4; ++j) {
        int idx = 2 * j + 1;
        if (idx < 7) gauss += gk15_wg[j] * (fv[idx] + fv[14 - idx]);
    }
    kronrod *= h;
    gauss *= h;
    return {kronrod, std::fabs(kronrod - gauss)};
}

}  // namespace detail

// Adaptive bisection with the GK15 pair. Converges fast on smooth integrands;
// the velocity integrals here are smooth on their whole domain.
template <typename F>
double integrate(const F& f, double a, double b, double rel_tol = 1e-9, double abs_tol = 0.0) {
    if (!(b > a)) return 0.0;
    struct Segment {
        double a, b, value, error;
    };
    auto [v0, e0] = detail::gauss_kronrod_15(f, a, b);
    std::vector<Segment> segs{{a, b, v0, e0}};
    double total = v0;
    double total_err = e0;
    const int max_segments = 4000;
    while (total_err > std::max(rel_tol * std::fabs(total), abs_tol) &&
           static_cast<int>(segs.size()) < max_segments) {
        // split the worst segment
        std::size_t worst = 0;
        for (std::size_t i = 1; i < segs.size(); ++i)
            if (segs[i].error > segs[worst].error) worst = i;
        Segment seg = segs[worst];
        double mid = 0.5 * (seg.a + seg.b);
        if (mid <= seg.a || mid >= seg.b) break;  // interval exhausted in double precision
        auto [vl, el] = detail::gauss_kronrod_15(f, seg.a, mid);
        auto [vr, er] = detail::gauss_kronrod_15(f, mid, seg.b);
        total += vl + vr - seg.value;
        total_err += el + er - seg.error;
        segs[worst] = {seg.a, mid, vl, el};
        segs.push_back({mid, seg.b, vr, er});
    }
    return total;
}

// Gauss-Hermite nodes/weights for weight exp(-x^2) (physicists' convention),
// computed by Newton iteration on the Hermite recurrence.
struct GaussHermite {
    std::vector<double> nodes;
    std::vector<double> weights;  // sum of weights = sqrt(pi)
};

inline GaussHermite gauss_hermite(int n) {
    GaussHermite rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const double pim4 = 0.7511255444649425;  // pi^{-1/4}
    const int m = (n + 1) / 2;
    double z = 0.0;
    for (int i = 0; i < m; ++i) {
        if (i == 0)
            z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -0.16667);
        else if (i == 1)
            z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
        else if (i == 2)
            z = 1.86 * z - 0.86 * rule.nodes[0];
        else if (i == 3)
            z = 1.91 * z - 0.91 * rule.nodes[1];
        else
            z = 2.0 * z - rule.nodes[i - 2];
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p1 = pim4;
            double p2 = 0.0;
            for (int j = 0; j < n; ++j) {
                double p3 = p2;
                p2 = p1;
                p1 = z * std::sqrt(2.0 / (j + 1)) * p2 - std::sqrt(static_cast<double>(j) / (j + 1)) * p3;
            }
            pp = std::sqrt(2.0 * n) * p2;
            double z1 = z;
            z = z1 - p1 / pp;
            if (std::fabs(z - z1) <= 1e-15 * std::max(1.0, std::fabs(z))) break;
        }
        rule.nodes[i] = z;
        rule.nodes[n - 1 - i] = -z;
        rule.weights[i] = 2.0 / (pp * pp);
        rule.weights[n - 1 - i] = rule.weights[i];
    }
    return rule;
}

// Shared 64-node rule used for the Gaussian Rabi-frequency average.
inline const GaussHermite& gauss_hermite_64() {
    static const GaussHermite rule = gauss_hermite(64);
    return rule;
}

}  // namespace beamcorr

#endif
