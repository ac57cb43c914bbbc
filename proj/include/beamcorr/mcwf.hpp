#ifndef BEAMCORR_MCWF_HPP
#define BEAMCORR_MCWF_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "beamcorr/common.hpp"
#include "beamcorr/detection.hpp"
#include "beamcorr/events.hpp"
#include "beamcorr/physics.hpp"
#include "beamcorr/rng.hpp"

namespace beamcorr {

// ---------------------------------------------------------------------------
// Engine configuration
// ---------------------------------------------------------------------------

enum class McwfEngine { fixed_dt, waiting_time };

// How the drive seen by a transiting atom is modeled:
//   constant        - per-atom Rabi frequency drawn from the RabiDistribution,
//                     held constant across the transit (the fitting model)
//   gaussian_profile- Omega(t) follows the Gaussian probe profile along the
//                     ballistic trajectory (realism studies)
enum class RabiMode { constant, gaussian_profile };

struct EngineOptions {
    McwfEngine engine = McwfEngine::fixed_dt;
    RabiMode mode = RabiMode::constant;
    double dt_factor = 0.01;   // dt = dt_factor / max(Omega, Gamma)
    double f_escape = 0.02;    // fraction of atoms that evade the pump filter
    double warmup_waists = 3.0;  // atoms start this many waists upstream of the windows
    double impact_sigma = 0.0;   // m, transverse offset spread (gaussian_profile mode)
    bool background_run = false;  // pump-only run: resonant selection off, escapees remain
    bool keep_dark_rows = false;
    std::uint64_t max_ledger_rows = 2'000'000;

    void validate() const {
        if (!(dt_factor > 0.0 && dt_factor <= 0.01))
            throw validation_error("engine: dt_factor must be in (0, 0.01]");
        if (f_escape < 0.0 || f_escape > 1.0)
            throw validation_error("engine: f_escape must be in [0, 1]");
        if (warmup_waists < 0.0) throw validation_error("engine: warmup must be >= 0");
        if (impact_sigma < 0.0) throw validation_error("engine: impact sigma must be >= 0");
        if (engine == McwfEngine::waiting_time && mode == RabiMode::gaussian_profile)
            throw validation_error("engine: waiting-time sampling requires constant Rabi mode");
    }
};

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

struct AtomTransit {
    std::uint64_t atom_id = 0;
    double entry_time = 0.0;           // s, crossing of the active-span start plane
    double velocity = 0.0;             // m/s, longitudinal, > 0
    double transverse_velocity = 0.0;  // m/s
    double impact_offset = 0.0;        // m, transverse offset from the probe axis
    double rabi_peak = 0.0;            // rad/s, per-atom peak Rabi frequency
    bool selected = false;
    bool bright = true;
};

struct SimulationPlanInput {
    BeamParameters beam;
    OpticalParameters optics;
    RabiDistribution rabi;
    std::optional<SelectionParameters> selection;
    FiberLayout layout;
    EngineOptions engine;
};

struct AtomRecord {
    std::uint64_t atom_id = 0;
    double entry_time = 0.0;
    double velocity = 0.0;
    double transverse_velocity = 0.0;
    double impact_offset = 0.0;
    double rabi_peak = 0.0;
    bool selected = false;
    bool bright = false;
    std::uint32_t emission_count = 0;  // emissions kept inside the detection span
    double fov_enter = 0.0;            // primary-window crossing, clipped to the run
    double fov_exit = 0.0;
};

// Per-atom truth for test oracles. Aggregates cover every atom; full rows are
// kept for bright atoms (dark too on request) up to max_ledger_rows.
struct TransitLedger {
    double duration = 0.0;
    std::uint64_t atoms_total = 0;
    std::uint64_t atoms_bright = 0;
    double sum_fov_time_all = 0.0;
    double sum_fov_time_bright = 0.0;
    double sum_velocity_bright = 0.0;
    std::uint64_t rows_dropped = 0;
    std::vector<AtomRecord> rows;

    double mean_atom_number_all() const { return sum_fov_time_all / duration; }
    double mean_atom_number_bright() const { return sum_fov_time_bright / duration; }
    double mean_bright_velocity() const {
        return atoms_bright ? sum_velocity_bright / static_cast<double>(atoms_bright) : 0.0;
    }
};

struct SimulationResult {
    std::vector<EmissionEvent> events;  // inside the detection span, time-sorted
    TransitLedger ledger;
};

// ---------------------------------------------------------------------------
// Two-level MCWF kernels. On resonance the state stays in the real manifold
// (c_g, -i c_e) with c_g, c_e real, so the evolution uses two reals:
//   dg/dt = -(Omega/2) e,   de/dt = (Omega/2) g - (Gamma/2) e.
// ---------------------------------------------------------------------------

namespace detail {

// One-step non-Hermitian propagator exp(A dt) for constant Omega, split as
// exp(-Gamma dt/4) [cos(w dt) I + sin(w dt)/w B], w^2 = Omega^2/4 - Gamma^2/16.
struct NoJumpStep {
    double decay;  // exp(-Gamma dt / 4)
    double c;      // cos or cosh term
    double s;      // sin(w dt)/w, analytic through w = 0
    double quarter_gamma;
    double half_omega;

    NoJumpStep(double omega, double gamma, double dt) {
        decay = std::exp(-0.25 * gamma * dt);
        quarter_gamma = 0.25 * gamma;
        half_omega = 0.5 * omega;
        double w2 = 0.25 * omega * omega - gamma * gamma / 16.0;
        if (w2 >= 0.0) {
            double w = std::sqrt(w2);
            double x = w * dt;
            c = std::cos(x);
            s = x < 1e-8 ? dt : std::sin(x) / w;
        } else {
            double k = std::sqrt(-w2);
            double x = k * dt;
            c = std::cosh(x);
            s = x < 1e-8 ? dt : std::sinh(x) / k;
        }
    }

    void apply(double& g, double& e) const {
        double g2 = decay * (c * g + s * (quarter_gamma * g - half_omega * e));
        double e2 = decay * (c * e + s * (half_omega * g - quarter_gamma * e));
        double n = std::sqrt(g2 * g2 + e2 * e2);
        g = g2 / n;
        e = e2 / n;
    }
};

// Exact sample of the inter-emission waiting time of a resonantly driven atom
// starting in the ground state. The density is
//   w(t) = Gamma (Omega^2 / 4 w^2) exp(-Gamma t/2) sin^2(w t),
// continued through w^2 = Omega^2/4 - Gamma^2/16 < 0 as sinh^2. Four rejection
// regimes keep the acceptance probability above ~0.2 everywhere:
//   oscillatory        Exp(Gamma/2) proposal, accept sin^2(w t)
//   near-critical +/-  Gamma(3) proposal, accept by the sinc-like ratio
//   deep overdamped    w(t) = C e^{-a t}(1 - e^{-2kt})^2 with a = Gamma/2 - 2k,
//                      so Exp(a) proposal accepts with (1 - e^{-2kt})^2
inline double sample_waiting_time(double omega, double gamma, Rng& rng) {
    const double w2 = 0.25 * omega * omega - gamma * gamma / 16.0;
    if (w2 >= 0.1 * omega * omega) {  // acceptance 2 w^2/Omega^2 >= 0.2
        const double w = std::sqrt(w2);
        for (;;) {
            double t = rng.exponential(0.5 * gamma);
            double sn = std::sin(w * t);
            if (rng.uniform() < sn * sn) return t;
        }
    }
    if (w2 >= 0.0) {
        const double w = std::sqrt(w2);
        for (;;) {
            double t = (rng.exponential(1.0) + rng.exponential(1.0) + rng.exponential(1.0)) /
                       (0.5 * gamma);
            double x = w * t;
            double sinc = x < 1e-8 ? 1.0 : std::sin(x) / x;
            if (rng.uniform() < sinc * sinc) return t;
        }
    }
    const double k = std::sqrt(-w2);
    const double a = 0.5 * gamma - 2.0 * k;  // positive since k < Gamma/4
    if (k >= 0.3 * a) {
        for (;;) {
            double t = rng.exponential(a);
            double u = 1.0 - std::exp(-2.0 * k * t);
            if (rng.uniform() < u * u) return t;
        }
    }
    // barely overdamped: sinh^2 still behaves like x^2 on the proposal scale
    for (;;) {
        double t = (rng.exponential(1.0) + rng.exponential(1.0) + rng.exponential(1.0)) / a;
        double x = k * t;
        double ratio = x < 1e-8 ? 1.0 : (1.0 - std::exp(-2.0 * x)) / (2.0 * x);
        if (rng.uniform() < ratio * ratio) return t;
    }
}

}  // namespace detail

// Steady-state photon scattering rate of the resonantly driven two-level atom,
// Gamma (Omega^2/4) / (Omega^2/2 + Gamma^2/4); the oracle for emission rates.
inline double stationary_emission_rate(double omega, double gamma) {
    double o2 = omega * omega;
    return gamma * (0.25 * o2) / (0.5 * o2 + 0.25 * gamma * gamma);
}

// Emission times of a stationary atom driven at constant Omega for a given
// duration; the velocity-zero test hook behind both engines.
template <typename Sink>
inline void mcwf_fixed_dt_run(double omega, double gamma, double t_begin, double t_end,
                              double dt_factor, Rng& rng, Sink&& emit) {
    if (!(dt_factor > 0.0 && dt_factor <= 0.01))
        throw validation_error("mcwf: dt too large, need dt <= 0.01/max(Omega, Gamma)");
    const double dt = dt_factor / std::max(omega, gamma);
    const detail::NoJumpStep step(omega, gamma, dt);
    double g = 1.0, e = 0.0;
    const double p_cap = 0.05;
    for (double t = t_begin; t < t_end; t += dt) {
        double p = gamma * e * e * dt;
        if (p >= p_cap) throw validation_error("mcwf: jump probability per step exceeded 0.05");
        if (rng.uniform() < p) {
            emit(t + dt);
            g = 1.0;
            e = 0.0;
        } else {
            step.apply(g, e);
        }
    }
}

template <typename Sink>
inline void mcwf_waiting_time_run(double omega, double gamma, double t_begin, double t_end,
                                  Rng& rng, Sink&& emit) {
    double t = t_begin;
    for (;;) {
        t += detail::sample_waiting_time(omega, gamma, rng);
        if (t >= t_end) return;
        emit(t);
    }
}

inline std::vector<double> mcwf_emission_times(double omega, double gamma, double duration,
                                               const EngineOptions& opts, Rng& rng) {
    if (omega < 0.0 || gamma <= 0.0) throw validation_error("mcwf: bad omega/gamma");
    std::vector<double> times;
    if (omega == 0.0) return times;  // ground-state atom never excited
    auto sink = [&times](double t) { times.push_back(t); };
    if (opts.engine == McwfEngine::waiting_time)
        mcwf_waiting_time_run(omega, gamma, 0.0, duration, rng, sink);
    else
        mcwf_fixed_dt_run(omega, gamma, 0.0, duration, opts.dt_factor, rng, sink);
    return times;
}

// ---------------------------------------------------------------------------
// Transit evolution
// ---------------------------------------------------------------------------

// Active span along the beam: atoms evolve from warm-up entry to the far edge
// of the detection windows; only emissions inside [detect_lo, detect_hi] are
// reported.
struct ActiveSpan {
    double detect_lo = 0.0;  // m
    double detect_hi = 0.0;  // m
    double start = 0.0;      // m, detect_lo - warmup
};

inline ActiveSpan make_active_span(const FiberLayout& layout, const OpticalParameters& optics,
                                   const EngineOptions& opts) {
    ActiveSpan span;
    span.detect_lo = layout.span_lo();
    span.detect_hi = layout.span_hi();
    span.start = span.detect_lo - opts.warmup_waists * optics.beam_waist_radius;
    return span;
}

// Appends the atom's detectable emissions to `out`; returns how many were
// added. Used directly by simulate_beam so worker threads reuse one buffer.
inline std::size_t evolve_atom_into(const AtomTransit& transit, const OpticalParameters& optics,
                                    const ActiveSpan& span, const EngineOptions& opts, Rng& rng,
                                    std::vector<EmissionEvent>& out) {
    if (transit.velocity <= 0.0) throw validation_error("evolve_atom: velocity must be > 0");
    const double v = transit.velocity;
    const double t0 = transit.entry_time;
    const double t1 = t0 + (span.detect_hi - span.start) / v;
    const double gamma = optics.gamma;
    if (!transit.bright || transit.rabi_peak <= 0.0) return 0;
    const std::size_t size_before = out.size();

    auto position_at = [&](double t) { return span.start + v * (t - t0); };
    auto record = [&](double t) {
        double x = position_at(t);
        if (x >= span.detect_lo && x <= span.detect_hi)
            out.push_back(EmissionEvent{t, x, static_cast<std::uint32_t>(transit.atom_id)});
    };

    if (opts.mode == RabiMode::constant) {
        if (opts.engine == McwfEngine::waiting_time)
            mcwf_waiting_time_run(transit.rabi_peak, gamma, t0, t1, rng, record);
        else
            mcwf_fixed_dt_run(transit.rabi_peak, gamma, t0, t1, opts.dt_factor, rng, record);
        return out.size() - size_before;
    }

    // gaussian_profile: Omega follows the probe amplitude along the ballistic
    // trajectory; fixed-dt stepping with the per-step propagator.
    const double w = optics.beam_waist_radius;
    const double dt = opts.dt_factor / std::max(transit.rabi_peak, gamma);
    double g = 1.0, e = 0.0;
    for (double t = t0; t < t1; t += dt) {
        double x = position_at(t);
        double y = transit.impact_offset + transit.transverse_velocity * (t - t0);
        double r2 = (x * x + y * y) / (w * w);
        double omega_t = transit.rabi_peak * std::exp(-r2);
        double p = gamma * e * e * dt;
        if (p >= 0.05) throw validation_error("mcwf: jump probability per step exceeded 0.05");
        if (rng.uniform() < p) {
            record(t + dt);
            g = 1.0;
            e = 0.0;
        } else {
            detail::NoJumpStep(omega_t, gamma, dt).apply(g, e);
        }
    }
    return out.size() - size_before;
}

inline std::vector<EmissionEvent> evolve_atom(const AtomTransit& transit,
                                              const OpticalParameters& optics,
                                              const ActiveSpan& span, const EngineOptions& opts,
                                              Rng& rng) {
    opts.validate();
    std::vector<EmissionEvent> events;
    evolve_atom_into(transit, optics, span, opts, rng, events);
    return events;
}

// ---------------------------------------------------------------------------
// Beam-level sampling
// ---------------------------------------------------------------------------

// Homogeneous Poisson arrival process with exponential gaps.
class ArrivalGenerator {
public:
    ArrivalGenerator(double flux, double duration, Rng rng)
        : flux_(flux), duration_(duration), rng_(rng) {
        if (flux_ < 0.0) throw validation_error("arrivals: flux must be >= 0");
        if (flux_ > 0.0) next_ = rng_.exponential(flux_);
    }
    // next arrival time, or nullopt when the run is exhausted
    std::optional<double> next() {
        if (flux_ <= 0.0 || next_ >= duration_) return std::nullopt;
        double t = next_;
        next_ += rng_.exponential(flux_);
        return t;
    }

private:
    double flux_;
    double duration_;
    Rng rng_;
    double next_ = 0.0;
};

inline std::vector<double> sample_atom_arrivals(double flux, double duration, Rng& rng) {
    ArrivalGenerator gen(flux, duration, rng);
    std::vector<double> times;
    while (auto t = gen.next()) times.push_back(*t);
    return times;
}

inline double sample_velocity(const BeamParameters& beam, Rng& rng) {
    beam.validate();
    return maxwell_flux::sample(beam.v0(), rng);
}

inline double sample_truncated_rabi(const RabiDistribution& rabi, double gamma, Rng& rng) {
    if (rabi.sigma == 0.0) return rabi.mean * gamma;
    for (;;) {
        double x = rng.normal(rabi.mean, rabi.sigma);
        if (x > 0.0) return x * gamma;
    }
}

// ---------------------------------------------------------------------------
// Full beam simulation
// ---------------------------------------------------------------------------

namespace detail {

// Reserved substream index for the arrival process; atom substreams use
// 1 + atom_id so they never collide with it.
inline constexpr std::uint64_t arrivals_substream = 0;

}  // namespace detail

// Simulate the beam for `duration` seconds. Atom trajectories are independent
// and evaluated in parallel; every atom draws from its own counter-derived
// substream, and block results are folded in atom order, so the output is
// bit-identical for any thread count.
inline SimulationResult simulate_beam(const SimulationPlanInput& input, double duration,
                                      std::uint64_t master_seed) {
    input.beam.validate();
    input.optics.validate();
    input.rabi.validate();
    input.layout.validate();
    input.engine.validate();
    if (input.selection) input.selection->validate();
    if (duration < 0.0) throw validation_error("simulate_beam: duration must be >= 0");

    SimulationResult result;
    result.ledger.duration = duration;
    if (duration == 0.0 || input.beam.flux == 0.0) return result;

    const ActiveSpan span = make_active_span(input.layout, input.optics, input.engine);
    const double v0 = input.beam.v0();
    // primary window for the atom-number ledger: the first fiber's window
    const double fov_lo = input.layout.window_lo(0);
    const double fov_hi = input.layout.window_hi(0);

    ArrivalGenerator arrivals(input.beam.flux, duration,
                              Rng::substream(master_seed, detail::arrivals_substream));

    const std::size_t block_size = 1 << 18;
    const unsigned workers = std::max(1u, thread_count());
    std::vector<double> entry_times;
    entry_times.reserve(block_size);
    std::vector<AtomRecord> records;
    // per-worker event buffers persist across blocks; events of one atom are
    // emitted by exactly one worker, and the final total-order sort makes the
    // output independent of the buffer layout
    std::vector<std::vector<EmissionEvent>> worker_events(workers);
    std::uint64_t next_atom_id = 0;
    bool exhausted = false;

    while (!exhausted) {
        entry_times.clear();
        while (entry_times.size() < block_size) {
            auto t = arrivals.next();
            if (!t) {
                exhausted = true;
                break;
            }
            entry_times.push_back(*t);
        }
        if (entry_times.empty()) break;
        const std::uint64_t base_id = next_atom_id;
        next_atom_id += entry_times.size();
        records.assign(entry_times.size(), {});
        const std::size_t chunk = (entry_times.size() + workers - 1) / workers;

        parallel_for(entry_times.size(), [&](std::size_t lo, std::size_t hi) {
            std::vector<EmissionEvent>& events_out = worker_events[lo / chunk];
            for (std::size_t i = lo; i < hi; ++i) {
                const std::uint64_t atom_id = base_id + i;
                Rng rng = Rng::substream(master_seed, 1 + atom_id);
                AtomTransit transit;
                transit.atom_id = atom_id;
                transit.entry_time = entry_times[i];
                transit.velocity = maxwell_flux::sample(v0, rng);
                transit.transverse_velocity =
                    rng.uniform(-input.beam.transverse_spread, input.beam.transverse_spread);
                transit.impact_offset =
                    input.engine.impact_sigma > 0.0 ? rng.normal(0.0, input.engine.impact_sigma) : 0.0;
                if (input.selection) {
                    bool escaped = rng.bernoulli(input.engine.f_escape);
                    if (escaped) {
                        transit.selected = false;
                        transit.bright = true;
                    } else if (input.engine.background_run) {
                        transit.selected = false;
                        transit.bright = false;
                    } else {
                        double p = selection_probability(transit.velocity, *input.selection,
                                                         input.optics.wavelength);
                        transit.selected = rng.bernoulli(p);
                        transit.bright = transit.selected;
                    }
                } else {
                    transit.bright = true;
                }
                transit.rabi_peak = input.engine.mode == RabiMode::constant
                                        ? sample_truncated_rabi(input.rabi, input.optics.gamma, rng)
                                        : input.optics.rabi_mean;

                std::size_t emitted = 0;
                if (transit.bright) {
                    std::size_t before = events_out.size();
                    evolve_atom_into(transit, input.optics, span, input.engine, rng, events_out);
                    // drop emissions past the end of the run
                    std::size_t kept = before;
                    for (std::size_t e = before; e < events_out.size(); ++e)
                        if (events_out[e].time < duration) events_out[kept++] = events_out[e];
                    events_out.resize(kept);
                    emitted = kept - before;
                }
                AtomRecord& rec = records[i];
                rec.atom_id = atom_id;
                rec.entry_time = transit.entry_time;
                rec.velocity = transit.velocity;
                rec.transverse_velocity = transit.transverse_velocity;
                rec.impact_offset = transit.impact_offset;
                rec.rabi_peak = transit.rabi_peak;
                rec.selected = transit.selected;
                rec.bright = transit.bright;
                rec.emission_count = static_cast<std::uint32_t>(emitted);
                double enter = transit.entry_time + (fov_lo - span.start) / transit.velocity;
                double exit = transit.entry_time + (fov_hi - span.start) / transit.velocity;
                rec.fov_enter = std::clamp(enter, 0.0, duration);
                rec.fov_exit = std::clamp(exit, 0.0, duration);
            }
        });

        // sequential fold in atom order keeps aggregates and row order
        // independent of the worker count
        TransitLedger& ledger = result.ledger;
        for (const AtomRecord& rec : records) {
            ledger.atoms_total++;
            double fov_time = rec.fov_exit - rec.fov_enter;
            ledger.sum_fov_time_all += fov_time;
            if (rec.bright) {
                ledger.atoms_bright++;
                ledger.sum_fov_time_bright += fov_time;
                ledger.sum_velocity_bright += rec.velocity;
            }
            if (rec.bright || input.engine.keep_dark_rows) {
                if (ledger.rows.size() < input.engine.max_ledger_rows)
                    ledger.rows.push_back(rec);
                else
                    ledger.rows_dropped++;
            }
        }
    }

    std::size_t total_events = 0;
    for (const auto& buf : worker_events) total_events += buf.size();
    result.events.reserve(total_events);
    for (auto& buf : worker_events) {
        result.events.insert(result.events.end(), buf.begin(), buf.end());
        buf.clear();
        buf.shrink_to_fit();
    }
    std::sort(result.events.begin(), result.events.end(),
              [](const EmissionEvent& a, const EmissionEvent& b) {
                  return a.time != b.time ? a.time < b.time : a.atom_id < b.atom_id;
              });
    return result;
}

}  // namespace beamcorr

#endif
