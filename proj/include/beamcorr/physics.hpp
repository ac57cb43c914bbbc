#ifndef BEAMCORR_PHYSICS_HPP
#define BEAMCORR_PHYSICS_HPP

#include <cmath>
#include <functional>

#include "beamcorr/common.hpp"
#include "beamcorr/quadrature.hpp"
#include "beamcorr/velocity_pdf.hpp"

namespace beamcorr {

// ---------------------------------------------------------------------------
// Parameter types. All angular frequencies are rad/s internally; the config
// layer converts from ordinary MHz.
// ---------------------------------------------------------------------------

struct BeamParameters {
    double temperature_k = celsius_to_kelvin(78.0);
    double atom_mass_kg = constants::rb87_mass;
    double flux = 0.0;              // atoms/s transiting the collection region
    double transverse_spread = 4.0; // m/s, half-width of the collimated spread

    double v0() const { return most_probable_speed(temperature_k, atom_mass_kg); }
    VelocityPdf flux_pdf() const { return VelocityPdf::maxwell_flux(v0()); }

    void validate() const {
        if (temperature_k <= 0.0) throw validation_error("beam: temperature must be > 0 K");
        if (atom_mass_kg <= 0.0) throw validation_error("beam: atom mass must be > 0");
        if (flux < 0.0) throw validation_error("beam: flux must be >= 0");
        if (transverse_spread < 0.0) throw validation_error("beam: transverse spread must be >= 0");
    }
};

struct OpticalParameters {
    double gamma = mhz_to_angular(constants::rb87_d2_gamma_mhz);  // rad/s
    double rabi_mean = 0.0;   // rad/s
    double rabi_sigma = 0.0;  // rad/s, 0 means deterministic Rabi frequency
    double wavelength = constants::rb87_d2_wavelength;  // m
    double beam_waist_radius = 60e-6;  // m, 1/e field radius w (2w ~ 120 um)

    void validate() const {
        if (gamma <= 0.0) throw validation_error("optics: gamma must be > 0");
        if (rabi_mean <= 0.0) throw validation_error("optics: rabi_mean must be > 0");
        if (rabi_sigma < 0.0) throw validation_error("optics: rabi_sigma must be >= 0");
        if (wavelength <= 0.0) throw validation_error("optics: wavelength must be > 0");
        if (beam_waist_radius <= 0.0) throw validation_error("optics: waist must be > 0");
    }
};

struct GeometryParameters {
    double fov_length = 25e-6;          // m, L along the beam
    double fiber_fov_diameter = 25e-6;  // m, d_f
    double fiber_separation = 55e-6;    // m, d in the atom plane

    void validate() const {
        if (fov_length <= 0.0) throw validation_error("geometry: fov_length must be > 0");
        if (fiber_fov_diameter <= 0.0) throw validation_error("geometry: fiber_fov_diameter must be > 0");
        if (fiber_separation <= 0.0) throw validation_error("geometry: fiber_separation must be > 0");
        if (fiber_fov_diameter >= fiber_separation)
            throw validation_error("geometry: fiber_fov_diameter must be < fiber_separation");
    }
};

struct SelectionParameters {
    double detuning = 0.0;   // rad/s, <= 0 selects forward velocity classes
    double angle = 47.0 * constants::pi / 180.0;  // rad, repump vs beam
    double linewidth = mhz_to_angular(6.0);       // rad/s, Lorentzian HWHM

    void validate() const {
        if (!(angle > 0.0 && angle < 0.5 * constants::pi))
            throw validation_error("selection: angle must be in (0, pi/2)");
        if (linewidth <= 0.0) throw validation_error("selection: linewidth must be > 0");
    }
};

// Gaussian distribution of the Rabi frequency, in units of Gamma. Sampled and
// averaged values are truncated to Omega > 0.
struct RabiDistribution {
    double mean = 6.0;   // units of Gamma
    double sigma = 1.5;  // units of Gamma

    void validate() const {
        if (mean <= 0.0) throw validation_error("rabi: mean must be > 0");
        if (sigma < 0.0) throw validation_error("rabi: sigma must be >= 0");
    }
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

// Flux velocity pdf rho(v) = 2 v^3/v0^4 exp(-v^2/v0^2); normalized on [0, inf).
inline double flux_velocity_pdf(double v, const BeamParameters& beam) {
    if (v < 0.0) throw validation_error("flux_velocity_pdf: v must be >= 0");
    return maxwell_flux::density(v, beam.v0());
}

// Second-order coherence of a single stationary driven two-level atom:
//   g2(tau) = 1 - exp(-3 Gamma tau / 4) (cos(Og tau) + 3 Gamma/(4 Og) sin(Og tau))
// with Og = sqrt(Omega^2 - (Gamma/4)^2). For Omega <= Gamma/4 the oscillatory
// functions continue analytically into their hyperbolic forms; both branches
// are evaluated through cos/cosh and the entire function sin(x)/x, so the
// curve is continuous through Omega = Gamma/4.
inline double g2_single(double tau, double omega, double gamma) {
    if (tau < 0.0) throw validation_error("g2_single: tau must be >= 0");
    if (omega <= 0.0) throw validation_error("g2_single: omega must be > 0");
    if (gamma <= 0.0) throw validation_error("g2_single: gamma must be > 0");
    const double u = omega * omega - 0.0625 * gamma * gamma;  // Og^2, may be negative
    double cos_term;
    double sinc_term;  // sin(Og tau)/Og, analytic in u
    if (u >= 0.0) {
        const double og = std::sqrt(u);
        const double x = og * tau;
        cos_term = std::cos(x);
        sinc_term = x < 1e-6 ? tau * (1.0 - x * x / 6.0) : std::sin(x) / og;
    } else {
        const double kappa = std::sqrt(-u);
        const double x = kappa * tau;
        cos_term = std::cosh(x);
        sinc_term = x < 1e-6 ? tau * (1.0 + x * x / 6.0) : std::sinh(x) / kappa;
    }
    return 1.0 - std::exp(-0.75 * gamma * tau) * (cos_term + 0.75 * gamma * sinc_term);
}

// Delay and value of the first Rabi maximum of g2_single (valid for
// Omega > Gamma/4, where the curve oscillates).
inline double g2_single_first_peak_tau(double omega, double gamma) {
    double og = std::sqrt(omega * omega - 0.0625 * gamma * gamma);
    return constants::pi / og;
}
inline double g2_single_first_peak_value(double omega, double gamma) {
    double og = std::sqrt(omega * omega - 0.0625 * gamma * gamma);
    return 1.0 + std::exp(-0.75 * constants::pi * gamma / og);
}

// g2_single averaged over a Gaussian-distributed Rabi frequency, truncated to
// Omega > 0, via 64-node Gauss-Hermite quadrature.
inline double g2_single_averaged(double tau, const RabiDistribution& rabi, double gamma) {
    rabi.validate();
    if (rabi.sigma == 0.0) return g2_single(tau, rabi.mean * gamma, gamma);
    const GaussHermite& rule = gauss_hermite_64();
    const double root2 = std::sqrt(2.0);
    double acc = 0.0;
    double wsum = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        double omega_gamma = rabi.mean + root2 * rabi.sigma * rule.nodes[i];
        if (omega_gamma <= 0.0) continue;  // truncate the unphysical tail
        acc += rule.weights[i] * g2_single(tau, omega_gamma * gamma, gamma);
        wsum += rule.weights[i];
    }
    if (wsum <= 0.0) throw validation_error("g2_single_averaged: distribution entirely truncated");
    return acc / wsum;
}

// Resonant velocity class of the angled repump, v_c = -Delta/(k cos theta).
inline double velocity_center(const SelectionParameters& sel, double wavelength) {
    sel.validate();
    if (wavelength <= 0.0) throw validation_error("velocity_center: wavelength must be > 0");
    if (sel.detuning > 0.0)
        throw validation_error("velocity_center: positive detuning selects no forward class");
    double k = 2.0 * constants::pi / wavelength;
    return -sel.detuning / (k * std::cos(sel.angle));
}

// Transit-time correction
//   xi(tau) = [int_0^{L/tau} (1 - v tau/L) rho(v)/v dv] / [int rho(v)/v dv],
// the 1/v weight reflecting that slower atoms contribute more photons per
// transit. Takes any velocity pdf so tests can use deltas.
inline double transit_correction(double tau, double fov_length, const VelocityPdf& pdf) {
    if (tau < 0.0) throw validation_error("transit_correction: tau must be >= 0");
    if (fov_length <= 0.0) throw validation_error("transit_correction: fov_length must be > 0");
    const double denom = pdf.expect([](double v) { return 1.0 / v; });
    if (denom <= 0.0) throw validation_error("transit_correction: degenerate velocity pdf");
    if (tau == 0.0) return 1.0;
    const double v_cut = fov_length / tau;
    const double slope = tau / fov_length;
    const double num = pdf.expect([slope](double v) { return (1.0 - slope * v) / v; }, 0.0, v_cut);
    double xi = num / denom;
    if (xi < 0.0) xi = 0.0;
    return xi;
}

inline double transit_correction(double tau, const GeometryParameters& geometry,
                                 const BeamParameters& beam) {
    return transit_correction(tau, geometry.fov_length, beam.flux_pdf());
}

// <N> = F_N * L * E[1/v]: mean atom number inside the field of view.
inline double mean_atom_number(double flux, double fov_length, const VelocityPdf& pdf) {
    if (flux < 0.0) throw validation_error("mean_atom_number: flux must be >= 0");
    if (fov_length <= 0.0) throw validation_error("mean_atom_number: fov_length must be > 0");
    if (flux == 0.0) return 0.0;
    return flux * fov_length * pdf.expect([](double v) { return 1.0 / v; });
}

inline double mean_atom_number(const BeamParameters& beam, const GeometryParameters& geometry) {
    return mean_atom_number(beam.flux, geometry.fov_length, beam.flux_pdf());
}

// Flux that produces a target <N> for the given field of view.
inline double flux_for_mean_atom_number(double mean_n, double fov_length, const VelocityPdf& pdf) {
    if (mean_n < 0.0) throw validation_error("flux_for_mean_atom_number: mean_n must be >= 0");
    double per_unit_flux = mean_atom_number(1.0, fov_length, pdf);
    return mean_n / per_unit_flux;
}

// Full thermal-beam theory curve:
//   g2(tau) = xi(tau) * g2_single_averaged(tau) / <N> + 1
inline double g2_theory(double tau, double mean_n, const GeometryParameters& geometry,
                        const BeamParameters& beam, const RabiDistribution& rabi, double gamma) {
    if (mean_n <= 0.0) throw validation_error("g2_theory: mean_n must be > 0");
    double xi = transit_correction(tau, geometry, beam);
    return xi * g2_single_averaged(tau, rabi, gamma) / mean_n + 1.0;
}

// Two-fiber cross-correlation theory:
//   C'(tau) = 1 + (d_f/d) rho(v_tau) / (<N> int rho(v)/v dv),  v_tau = d/tau.
// <N> here counts atoms in a single fiber's field of view.
inline double two_fiber_theory(double tau, const GeometryParameters& geometry,
                               const BeamParameters& beam, double mean_n) {
    if (tau <= 0.0) throw validation_error("two_fiber_theory: tau must be > 0 (v undefined at 0)");
    if (mean_n <= 0.0) throw validation_error("two_fiber_theory: mean_n must be > 0");
    geometry.validate();
    const double v_tau = geometry.fiber_separation / tau;
    const VelocityPdf pdf = beam.flux_pdf();
    if (v_tau > pdf.support_max()) return 1.0;
    const double inv_mean = pdf.expect([](double v) { return 1.0 / v; });
    const double ratio = geometry.fiber_fov_diameter / geometry.fiber_separation;
    return 1.0 + ratio * pdf.density(v_tau) / (mean_n * inv_mean);
}

// Lorentzian probability that an atom of longitudinal velocity v is pumped
// back to the bright state: resonance at v_c, HWHM set by the effective
// selection linewidth.
inline double selection_probability(double v, const SelectionParameters& sel, double wavelength) {
    if (v < 0.0) throw validation_error("selection_probability: v must be >= 0");
    sel.validate();
    double k = 2.0 * constants::pi / wavelength;
    double doppler_detuning = sel.detuning + k * v * std::cos(sel.angle);
    double x = doppler_detuning / sel.linewidth;
    return 1.0 / (1.0 + x * x);
}

}  // namespace beamcorr

#endif
