#include <cmath>

#include "beamcorr/physics.hpp"
#include "beamcorr/velocimetry.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace beamcorr;

namespace {
// normalized histogram with a synthetic g2 profile over [0, n) bins
CoincidenceHistogram synthetic_hist(std::int64_t bin_ps, std::size_t n,
                                    const std::function<double(double)>& g2_of_tau) {
    CoincidenceHistogram h;
    h.bin_width_ps = bin_ps;
    h.tau_min_ps = 0;
    h.duration_ps = seconds_to_ps(10.0);
    h.total_a = 1'000'000;
    h.total_b = 1'000'000;
    h.counts.assign(n, 1000);
    h.g2.resize(n);
    for (std::size_t k = 0; k < n; ++k) h.g2[k] = g2_of_tau(h.bin_center_s(k));
    return h;
}
}  // namespace

TEST_CASE("correlated excess: flat rejection, bump recovery, unit area") {
    auto flat = synthetic_hist(20'000, 500, [](double) { return 1.0; });
    CHECK_THROWS_AS(correlated_excess(flat), validation_error);

    double center = 550e-9, width = 40e-9;
    auto bump = synthetic_hist(20'000, 1000, [&](double tau) {
        double u = (tau - center) / width;
        return 1.0 + 3.0 * std::exp(-0.5 * u * u);
    });
    auto density = correlated_excess(bump);
    CHECK(density.integral() == doctest::Approx(1.0).epsilon(1e-9));
    // peak bin near 550 ns
    std::size_t best = 0;
    for (std::size_t k = 1; k < density.values.size(); ++k)
        if (density.values[k] > density.values[best]) best = k;
    CHECK(density.bin_lo(best) == doctest::Approx(center).epsilon(0.05));
}

TEST_CASE("tau to velocity: delta maps to d over tau, measure preserved") {
    TauDensity delta;
    delta.bin_width_s = 10e-9;
    delta.tau_min_s = 540e-9;
    delta.values = {0.0, 1.0 / 10e-9, 0.0};  // all mass in [550, 560) ns

    auto n_v = tau_to_velocity(delta, 55e-6, {}, false);
    CHECK(n_v.integral() == doctest::Approx(1.0).epsilon(1e-6));
    // v = d/tau lands at 100 m/s (55 um / 550 ns)
    CHECK(std::fabs(n_v.peak_velocity() - 100.0) <= 2.5);

    // uniform n(tau) on [tau1, tau2] converts to a 1/v^2 profile
    TauDensity uniform;
    uniform.bin_width_s = 5e-9;
    uniform.tau_min_s = 250e-9;
    uniform.values.assign(200, 1.0 / (200 * 5e-9));  // support [250, 1250] ns
    auto prof = tau_to_velocity(uniform, 55e-6, {}, true);
    // compare cells at 60 m/s and 120 m/s: density ratio = (120/60)^2
    auto cell_of = [&](double v) {
        return static_cast<std::size_t>((v - prof.grid.v_lo) / prof.grid.cell);
    };
    double r = prof.values[cell_of(60.0)] / prof.values[cell_of(120.0)];
    CHECK(r == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("delay-axis scaling rescales the velocity axis inversely") {
    TauDensity base;
    base.bin_width_s = 10e-9;
    base.tau_min_s = 500e-9;
    base.values = {1.0 / 10e-9};
    TauDensity doubled = base;
    doubled.bin_width_s *= 2.0;
    doubled.tau_min_s *= 2.0;
    doubled.values = {1.0 / 20e-9};
    auto v1 = tau_to_velocity(base, 55e-6);
    auto v2 = tau_to_velocity(doubled, 55e-6);
    CHECK(v2.peak_velocity() == doctest::Approx(0.5 * v1.peak_velocity()).epsilon(0.05));
}

TEST_CASE("atom pdf inversion flattens a 1/v^2 coincidence density") {
    VelocityDensity n_v;
    n_v.grid = VelocityGrid{};
    n_v.values.resize(n_v.grid.n_cells());
    for (std::size_t i = 0; i < n_v.values.size(); ++i) {
        double v = n_v.grid.center(i);
        n_v.values[i] = 1.0 / (v * v);
    }
    auto rho = to_atom_pdf(n_v, 25e-6);
    CHECK(rho.kind == DensityKind::atom_pdf);
    CHECK(rho.integral() == doctest::Approx(1.0).epsilon(1e-9));
    double lo = rho.values.front(), hi = rho.values.front();
    for (double v : rho.values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    CHECK((hi - lo) / hi < 1e-9);  // flat

    CHECK_THROWS_AS(to_atom_pdf(rho, 25e-6), validation_error);  // wrong kind
}

TEST_CASE("background subtraction: identity cases and binning mismatch") {
    double center = 400e-9, width = 50e-9;
    auto signal = synthetic_hist(20'000, 600, [&](double tau) {
        double u = (tau - center) / width;
        return 1.0 + 2.0 * std::exp(-0.5 * u * u);
    });

    auto same = subtract_background(signal, signal, 1.0);
    for (double v : same.hist.g2) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));

    auto zero_bg = synthetic_hist(20'000, 600, [](double) { return 1.0; });
    auto keep = subtract_background(signal, zero_bg, 1.0);
    for (std::size_t k = 0; k < signal.n_bins(); ++k)
        CHECK(keep.hist.g2[k] == doctest::Approx(signal.g2[k]).epsilon(1e-12));

    auto coarse = synthetic_hist(40'000, 300, [](double) { return 1.0; });
    CHECK_THROWS_AS(subtract_background(signal, coarse), validation_error);

    // default weight is the accidental-rate ratio: here (0.5*0.5) = 0.25, so a
    // background bump of amplitude 8 cancels the signal bump of amplitude 2
    auto weak_bg = synthetic_hist(20'000, 600, [&](double tau) {
        double u = (tau - center) / width;
        return 1.0 + 8.0 * std::exp(-0.5 * u * u);
    });
    weak_bg.total_a = 500'000;  // background run had lower rates
    weak_bg.total_b = 500'000;
    auto scaled = subtract_background(signal, weak_bg);
    CHECK(scaled.weight == doctest::Approx(0.25));
    for (double v : scaled.hist.g2) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("maxwell beam argmax survives the transform chain") {
    // drive the chain with the closed-form two-fiber curve: the recovered
    // atom pdf must put its mode at sqrt(3/2) v0 to within one grid cell
    BeamParameters beam;
    beam.temperature_k = celsius_to_kelvin(70.0);
    beam.flux = 1e6;
    GeometryParameters geom;
    const double d = geom.fiber_separation;
    CoincidenceHistogram hist;
    hist.bin_width_ps = seconds_to_ps(1e-9);
    hist.tau_min_ps = seconds_to_ps(100e-9);
    hist.duration_ps = seconds_to_ps(1.0);
    hist.total_a = hist.total_b = 1'000'000;
    std::size_t n = 3900;  // tau from 100 ns to 4 us
    hist.counts.assign(n, 1000);
    hist.g2.resize(n);
    for (std::size_t k = 0; k < n; ++k)
        hist.g2[k] = two_fiber_theory(hist.bin_center_s(k), geom, beam, 0.1);
    auto rho = to_atom_pdf(tau_to_velocity(correlated_excess(hist), d), geom.fiber_fov_diameter);
    double expected = maxwell_flux::mode(beam.v0());
    // the argmax cell may be the one containing the mode or its neighbor,
    // so centers can differ by up to 1.5 cells
    CHECK(std::fabs(rho.peak_velocity() - expected) <= 1.5 * rho.grid.cell);
}

TEST_CASE("single-velocity round trip through synthetic two-fiber tags") {
    // atoms at exactly v1 crossing windows separated by d: photon in A uniform
    // over the window, photon in B one flight later
    Rng rng(99);
    const double v1 = 100.0, d = 55e-6, df = 25e-6, duration = 20.0;
    const double window_time = df / v1, flight = d / v1;
    TimeTagStream a, b;
    a.resolution_ps = b.resolution_ps = 1;
    a.duration_ps = b.duration_ps = seconds_to_ps(duration);
    a.channel_id = 0;
    b.channel_id = 1;
    std::vector<std::int64_t> ta, tb;
    double t = rng.exponential(3000.0);
    while (t < duration - 1e-3) {
        // two photons per window on average
        for (int k = 0; k < 2; ++k) {
            ta.push_back(seconds_to_ps(t + rng.uniform() * window_time));
            tb.push_back(seconds_to_ps(t + flight + rng.uniform() * window_time));
        }
        t += rng.exponential(3000.0);
    }
    // uncorrelated floor
    for (int i = 0; i < 200'000; ++i) {
        ta.push_back(seconds_to_ps(rng.uniform() * duration));
        tb.push_back(seconds_to_ps(rng.uniform() * duration));
    }
    std::sort(ta.begin(), ta.end());
    ta.erase(std::unique(ta.begin(), ta.end()), ta.end());
    std::sort(tb.begin(), tb.end());
    tb.erase(std::unique(tb.begin(), tb.end()), tb.end());
    a.tags = ta;
    b.tags = tb;

    auto hist = normalize_g2(cross_correlate(a, b, seconds_to_ps(10e-9), 0, seconds_to_ps(4e-6)));
    auto density = correlated_excess(hist);
    auto n_v = tau_to_velocity(density, d);
    auto rho = to_atom_pdf(n_v, df);
    // reconstructed mass concentrates near v1: the window transit stretches
    // delays by up to +-d_f/d, i.e. roughly +-45%
    CHECK(std::fabs(n_v.peak_velocity() - v1) < 10.0);
    double mass_near = 0.0;
    for (std::size_t i = 0; i < rho.values.size(); ++i) {
        double v = rho.grid.center(i);
        if (v > v1 * 0.55 && v < v1 * 1.9) mass_near += rho.values[i] * rho.grid.cell;
    }
    CHECK(mass_near > 0.95);
}
