#ifndef BEAMCORR_VELOCITY_PDF_HPP
#define BEAMCORR_VELOCITY_PDF_HPP

#include <cmath>
#include <functional>
#include <utility>

#include "beamcorr/common.hpp"
#include "beamcorr/quadrature.hpp"
#include "beamcorr/rng.hpp"

namespace beamcorr {

// Most probable speed parameter of the in-cell Maxwell distribution,
// v0 = sqrt(2 kB T / m). The flux distribution below is expressed in it.
inline double most_probable_speed(double temperature_k, double atom_mass_kg) {
    if (temperature_k <= 0.0) throw validation_error("temperature must be > 0 K");
    if (atom_mass_kg <= 0.0) throw validation_error("atom mass must be > 0");
    return std::sqrt(2.0 * constants::k_boltzmann * temperature_k / atom_mass_kg);
}

// Velocity distribution of the atoms crossing a plane (the flux pdf), as a
// first-class object so that transit and atom-number integrals work both for
// the physical Maxwell beam and for test distributions (deltas, custom pdfs).
class VelocityPdf {
public:
    static VelocityPdf maxwell_flux(double v0) {
        if (v0 <= 0.0) throw validation_error("v0 must be > 0");
        VelocityPdf pdf;
        pdf.v_max_ = 8.0 * v0;
        pdf.density_ = [v0](double v) {
            double r = v / v0;
            return 2.0 * r * r * r / v0 * std::exp(-r * r);
        };
        return pdf;
    }

    static VelocityPdf delta(double v1) {
        if (v1 <= 0.0) throw validation_error("delta velocity must be > 0");
        VelocityPdf pdf;
        pdf.is_delta_ = true;
        pdf.delta_v_ = v1;
        pdf.v_max_ = v1;
        return pdf;
    }

    static VelocityPdf from_density(std::function<double(double)> density, double v_max) {
        if (v_max <= 0.0) throw validation_error("v_max must be > 0");
        VelocityPdf pdf;
        pdf.v_max_ = v_max;
        pdf.density_ = std::move(density);
        return pdf;
    }

    bool is_delta() const { return is_delta_; }
    double delta_velocity() const { return delta_v_; }
    double support_max() const { return v_max_; }

    double density(double v) const {
        if (v < 0.0) throw validation_error("velocity must be >= 0");
        if (is_delta_) throw validation_error("density() undefined for a delta pdf");
        return density_(v);
    }

    // E[f(V); v_lo <= V <= v_hi]. For the delta pdf this is exact.
    double expect(const std::function<double(double)>& f, double v_lo, double v_hi,
                  double rel_tol = 1e-9) const {
        if (v_hi > v_max_) v_hi = v_max_;
        if (is_delta_) return (delta_v_ >= v_lo && delta_v_ <= v_hi) ? f(delta_v_) : 0.0;
        if (v_hi <= v_lo) return 0.0;
        return integrate([&](double v) { return f(v) * density_(v); }, v_lo, v_hi, rel_tol);
    }

    double expect(const std::function<double(double)>& f) const {
        return expect(f, 0.0, v_max_);
    }

private:
    VelocityPdf() = default;
    bool is_delta_ = false;
    double delta_v_ = 0.0;
    double v_max_ = 0.0;
    std::function<double(double)> density_;
};

// Closed-form pieces of the Maxwell flux pdf rho(v) = 2 v^3/v0^4 exp(-v^2/v0^2).
namespace maxwell_flux {

inline double density(double v, double v0) {
    if (v < 0.0) throw validation_error("velocity must be >= 0");
    double r = v / v0;
    return 2.0 * r * r * r / v0 * std::exp(-r * r);
}

// P(V <= v) = 1 - (1 + v^2/v0^2) exp(-v^2/v0^2)
inline double cdf(double v, double v0) {
    if (v <= 0.0) return 0.0;
    double x = (v / v0) * (v / v0);
    return 1.0 - (1.0 + x) * std::exp(-x);
}

inline double mode(double v0) { return std::sqrt(1.5) * v0; }

inline double mean(double v0) { return 0.75 * std::sqrt(constants::pi) * v0; }

// E[1/V] = sqrt(pi)/(2 v0); the weight that favors slow atoms in transit counts
inline double mean_inverse(double v0) { return 0.5 * std::sqrt(constants::pi) / v0; }

// V^2/v0^2 ~ Gamma(2,1), so V = v0 sqrt(E1 + E2) with two unit exponentials.
inline double sample(double v0, Rng& rng) {
    double g = rng.exponential(1.0) + rng.exponential(1.0);
    return v0 * std::sqrt(g);
}

}  // namespace maxwell_flux

}  // namespace beamcorr

#endif
