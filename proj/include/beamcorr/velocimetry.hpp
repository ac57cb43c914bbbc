#ifndef BEAMCORR_VELOCIMETRY_HPP
#define BEAMCORR_VELOCIMETRY_HPP

#include <cmath>
#include <cstdint>
#include <vector>

#include "beamcorr/common.hpp"
#include "beamcorr/correlator.hpp"

namespace beamcorr {

// Uniform velocity grid for reconstructed densities. Time bins are rebinned
// onto it mass-preservingly, so the grid does not have to match the tau bins.
struct VelocityGrid {
    double v_lo = 5.0;    // m/s
    double v_hi = 400.0;  // m/s
    double cell = 2.5;    // m/s

    std::size_t n_cells() const {
        return static_cast<std::size_t>(std::floor((v_hi - v_lo) / cell + 0.5));
    }
    double edge(std::size_t i) const { return v_lo + static_cast<double>(i) * cell; }
    double center(std::size_t i) const { return edge(i) + 0.5 * cell; }

    void validate() const {
        if (!(cell > 0.0) || !(v_hi > v_lo)) throw validation_error("velocity grid is degenerate");
        if (v_lo <= 0.0) throw validation_error("velocity grid must start above 0");
    }
};

enum class DensityKind { coincidence_density, atom_pdf };

struct VelocityDensity {
    VelocityGrid grid;
    std::vector<double> values;  // density per (m/s), one per cell
    DensityKind kind = DensityKind::coincidence_density;

    double integral() const {
        double sum = 0.0;
        for (double v : values) sum += v;
        return sum * grid.cell;
    }
    std::size_t argmax_cell() const {
        std::size_t best = 0;
        for (std::size_t i = 1; i < values.size(); ++i)
            if (values[i] > values[best]) best = i;
        return best;
    }
    double peak_velocity() const { return grid.center(argmax_cell()); }
};

// Normalized coincidence probability density in the time domain,
// n_AB(tau) = (g2(tau) - 1)_+ / integral, on the positive-delay bins.
struct TauDensity {
    double bin_width_s = 0.0;
    double tau_min_s = 0.0;  // left edge of the first stored bin, > 0 side only
    std::vector<double> values;
    std::size_t clamped_bins = 0;  // negative-excess bins clamped to zero

    double bin_lo(std::size_t k) const { return tau_min_s + static_cast<double>(k) * bin_width_s; }
    double integral() const {
        double sum = 0.0;
        for (double v : values) sum += v;
        return sum * bin_width_s;
    }
};

// Subtract the accidental level (1) from a normalized cross-correlation,
// clamp shot-noise negatives, renormalize to unit integral. Only positive
// delays carry time-of-flight information, so tau <= 0 bins are discarded.
inline TauDensity correlated_excess(const CoincidenceHistogram& hist) {
    if (!hist.normalized()) throw validation_error("correlated_excess: histogram not normalized");
    TauDensity density;
    density.bin_width_s = hist.bin_width_s();
    double total = 0.0;
    bool started = false;
    for (std::size_t k = 0; k < hist.n_bins(); ++k) {
        std::int64_t lo = hist.tau_min_ps + static_cast<std::int64_t>(k) * hist.bin_width_ps;
        if (lo <= 0) continue;
        if (!started) {
            density.tau_min_s = ps_to_seconds(lo);
            started = true;
        }
        double excess = hist.g2[k] - 1.0;
        if (excess < 0.0) {
            excess = 0.0;
            density.clamped_bins++;
        }
        density.values.push_back(excess);
        total += excess;
    }
    if (!started) throw validation_error("correlated_excess: no positive-delay bins");
    if (total <= 0.0) throw validation_error("correlated_excess: no correlated signal above accidentals");
    double norm = total * density.bin_width_s;
    for (double& v : density.values) v /= norm;
    return density;
}

// Change of variables tau -> v = d/tau with the Jacobian n(v) = n(tau) d/v^2,
// implemented as a mass-preserving rebin: each tau bin's probability mass is
// spread over the velocity interval it maps onto.
inline VelocityDensity tau_to_velocity(const TauDensity& n_tau, double fiber_separation,
                                       const VelocityGrid& grid = {}, bool renormalize = true) {
    grid.validate();
    if (fiber_separation <= 0.0) throw validation_error("tau_to_velocity: separation must be > 0");
    VelocityDensity out;
    out.grid = grid;
    out.kind = DensityKind::coincidence_density;
    out.values.assign(grid.n_cells(), 0.0);
    for (std::size_t k = 0; k < n_tau.values.size(); ++k) {
        double tau_lo = n_tau.bin_lo(k);
        double tau_hi = tau_lo + n_tau.bin_width_s;
        if (tau_lo <= 0.0) continue;
        double mass = n_tau.values[k] * n_tau.bin_width_s;
        if (mass <= 0.0) continue;
        double v_lo = fiber_separation / tau_hi;
        double v_hi = fiber_separation / tau_lo;
        double width = v_hi - v_lo;
        if (width <= 0.0) continue;
        // deposit uniformly over [v_lo, v_hi)
        double a = std::max(v_lo, grid.v_lo);
        double b = std::min(v_hi, grid.v_hi);
        if (b <= a) continue;
        std::size_t i_first = static_cast<std::size_t>((a - grid.v_lo) / grid.cell);
        for (std::size_t i = i_first; i < grid.n_cells(); ++i) {
            double cell_lo = grid.edge(i);
            if (cell_lo >= b) break;
            double cell_hi = cell_lo + grid.cell;
            double overlap = std::min(b, cell_hi) - std::max(a, cell_lo);
            if (overlap > 0.0) out.values[i] += mass * (overlap / width) / grid.cell;
        }
    }
    if (renormalize) {
        double total = out.integral();
        if (total > 0.0)
            for (double& v : out.values) v /= total;
    }
    return out;
}

// Undo the transit-time-squared weighting: rho(v) proportional to
// n_AB(v) v^2 / d_f^2, renormalized on the grid.
inline VelocityDensity to_atom_pdf(const VelocityDensity& n_v, double fiber_fov_diameter) {
    if (n_v.kind != DensityKind::coincidence_density)
        throw validation_error("to_atom_pdf: input must be a coincidence density");
    if (fiber_fov_diameter <= 0.0) throw validation_error("to_atom_pdf: d_f must be > 0");
    VelocityDensity out;
    out.grid = n_v.grid;
    out.kind = DensityKind::atom_pdf;
    out.values.resize(n_v.values.size());
    double df2 = fiber_fov_diameter * fiber_fov_diameter;
    for (std::size_t i = 0; i < n_v.values.size(); ++i) {
        double v = n_v.grid.center(i);
        out.values[i] = n_v.values[i] * v * v / df2;
    }
    double total = out.integral();
    if (total > 0.0)
        for (double& v : out.values) v /= total;
    return out;
}

struct SubtractionResult {
    CoincidenceHistogram hist;
    std::size_t clamped_bins = 0;
    double weight = 0.0;
};

// Remove a measured background correlation from a signal correlation. Both
// must be normalized with identical binning. In g2 space the background
// excess scales with the ratio of accidental rate products, which is the
// default weight; pass an explicit weight to override that assumption.
inline SubtractionResult subtract_background(const CoincidenceHistogram& signal,
                                             const CoincidenceHistogram& background,
                                             double weight = std::nan("")) {
    if (!signal.normalized() || !background.normalized())
        throw validation_error("subtract_background: inputs must be normalized");
    if (signal.bin_width_ps != background.bin_width_ps ||
        signal.tau_min_ps != background.tau_min_ps || signal.n_bins() != background.n_bins())
        throw validation_error("subtract_background: binning mismatch");
    SubtractionResult result;
    result.hist = signal;
    if (std::isnan(weight)) {
        double acc_sig = signal.rate_a_hz() * signal.rate_b_hz();
        double acc_bg = background.rate_a_hz() * background.rate_b_hz();
        if (acc_sig <= 0.0) throw validation_error("subtract_background: zero signal rates");
        weight = acc_bg / acc_sig;
    }
    result.weight = weight;
    for (std::size_t k = 0; k < signal.n_bins(); ++k) {
        double excess = (signal.g2[k] - 1.0) - weight * (background.g2[k] - 1.0);
        if (excess < 0.0) {
            excess = 0.0;
            result.clamped_bins++;
        }
        result.hist.g2[k] = 1.0 + excess;
    }
    return result;
}

}  // namespace beamcorr

#endif
