#ifndef BEAMCORR_DETECTION_HPP
#define BEAMCORR_DETECTION_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "beamcorr/common.hpp"
#include "beamcorr/events.hpp"
#include "beamcorr/rng.hpp"
#include "beamcorr/time_tags.hpp"

namespace beamcorr {

struct DetectorParameters {
    double collection_efficiency = 1.0;  // optics x quantum efficiency
    double dead_time = 45e-9;            // s, non-paralyzable
    double timing_jitter_sigma = 350e-12;  // s
    double dark_rate = 0.0;        // counts/s
    double background_rate = 0.0;  // counts/s, uncorrelated scatter/vapor
    std::int64_t resolution_ps = 1;

    void validate() const {
        if (collection_efficiency < 0.0 || collection_efficiency > 1.0)
            throw validation_error("detector: collection efficiency must be in [0, 1]");
        if (dead_time < 0.0) throw validation_error("detector: dead time must be >= 0");
        if (timing_jitter_sigma < 0.0) throw validation_error("detector: jitter must be >= 0");
        if (dark_rate < 0.0 || background_rate < 0.0)
            throw validation_error("detector: rates must be >= 0");
        if (resolution_ps <= 0) throw validation_error("detector: resolution must be > 0 ps");
    }
};

enum class FiberMode { single_hbt, dual_fiber };

// Longitudinal detection windows in the atom plane. Single-HBT mode is one
// window of width fov_diameter feeding a 50:50 splitter; dual mode is two
// disjoint windows, one SPCM each.
struct FiberLayout {
    FiberMode mode = FiberMode::single_hbt;
    std::vector<double> centers = {0.0};  // m, longitudinal positions
    double fov_diameter = 25e-6;          // m, d_f (equals L for single fiber runs)

    static FiberLayout single(double fov_diameter) {
        return FiberLayout{FiberMode::single_hbt, {0.0}, fov_diameter};
    }
    static FiberLayout dual(double separation, double fov_diameter) {
        return FiberLayout{FiberMode::dual_fiber, {-0.5 * separation, 0.5 * separation},
                           fov_diameter};
    }

    std::size_t fiber_count() const { return centers.size(); }
    double window_lo(std::size_t i) const { return centers[i] - 0.5 * fov_diameter; }
    double window_hi(std::size_t i) const { return centers[i] + 0.5 * fov_diameter; }
    double span_lo() const {
        double lo = window_lo(0);
        for (std::size_t i = 1; i < centers.size(); ++i) lo = std::min(lo, window_lo(i));
        return lo;
    }
    double span_hi() const {
        double hi = window_hi(0);
        for (std::size_t i = 1; i < centers.size(); ++i) hi = std::max(hi, window_hi(i));
        return hi;
    }

    void validate() const {
        if (fov_diameter <= 0.0) throw validation_error("layout: fov diameter must be > 0");
        if (mode == FiberMode::single_hbt) {
            if (centers.size() != 1) throw validation_error("layout: single mode needs one center");
        } else {
            if (centers.size() != 2) throw validation_error("layout: dual mode needs two centers");
            if (std::fabs(centers[1] - centers[0]) < fov_diameter)
                throw validation_error("layout: dual-fiber windows overlap");
        }
    }
};

// Assign each emission to the window that contains it. Windows are hard-edged
// and, in dual mode, disjoint, so an event reaches at most one fiber; events
// between or outside the windows are dropped.
inline std::vector<std::vector<EmissionEvent>> gate_by_fov(const std::vector<EmissionEvent>& events,
                                                           const FiberLayout& layout) {
    layout.validate();
    std::vector<std::vector<EmissionEvent>> per_fiber(layout.fiber_count());
    const double half = 0.5 * layout.fov_diameter;
    for (const auto& ev : events) {
        for (std::size_t i = 0; i < layout.fiber_count(); ++i) {
            if (std::fabs(ev.longitudinal_position - layout.centers[i]) <= half) {
                per_fiber[i].push_back(ev);
                break;
            }
        }
    }
    return per_fiber;
}

// Bernoulli thinning at the collection efficiency, then (for HBT) a 50:50
// route of every kept event to output A or B.
inline std::vector<std::vector<EmissionEvent>> thin_and_split(const std::vector<EmissionEvent>& events,
                                                              double collection_efficiency, bool hbt,
                                                              Rng& rng) {
    if (collection_efficiency < 0.0 || collection_efficiency > 1.0)
        throw validation_error("thin_and_split: efficiency must be in [0, 1]");
    std::vector<std::vector<EmissionEvent>> out(hbt ? 2 : 1);
    for (const auto& ev : events) {
        if (collection_efficiency < 1.0 && !rng.bernoulli(collection_efficiency)) continue;
        if (hbt)
            out[rng.bernoulli(0.5) ? 1 : 0].push_back(ev);
        else
            out[0].push_back(ev);
    }
    return out;
}

// SPCM model: inject Poisson dark+background tags, jitter every tag, re-sort,
// apply non-paralyzable dead time on the continuous times, quantize to the
// tagger resolution. With everything zeroed this is the identity on the
// (quantized) input.
inline TimeTagStream apply_detector(const std::vector<double>& arrival_times_s,
                                    const DetectorParameters& det, double duration_s, Rng& rng,
                                    std::uint16_t channel_id = 0) {
    det.validate();
    if (duration_s <= 0.0) throw validation_error("apply_detector: duration must be > 0");
    std::vector<double> times;
    times.reserve(arrival_times_s.size() + 64);
    times = arrival_times_s;
    const double extra_rate = det.dark_rate + det.background_rate;
    if (extra_rate > 0.0) {
        double t = rng.exponential(extra_rate);
        while (t < duration_s) {
            times.push_back(t);
            t += rng.exponential(extra_rate);
        }
    }
    if (det.timing_jitter_sigma > 0.0)
        for (auto& t : times) t += det.timing_jitter_sigma * rng.normal();
    std::sort(times.begin(), times.end());

    TimeTagStream stream;
    stream.channel_id = channel_id;
    stream.resolution_ps = det.resolution_ps;
    stream.duration_ps = seconds_to_ps(duration_s);
    stream.tags.reserve(times.size());
    double last_accepted = -1.0;
    bool any = false;
    std::int64_t last_tag = -1;
    for (double t : times) {
        if (t < 0.0 || t >= duration_s) continue;  // jittered outside the run
        if (any && t - last_accepted <= det.dead_time) continue;
        std::int64_t q = static_cast<std::int64_t>(std::llround(t * 1e12 / static_cast<double>(det.resolution_ps))) *
                         det.resolution_ps;
        if (q <= last_tag) continue;  // quantization collapse, keep the first
        if (q > stream.duration_ps) q = stream.duration_ps;
        stream.tags.push_back(q);
        last_tag = q;
        last_accepted = t;
        any = true;
    }
    return stream;
}

inline std::vector<double> event_times(const std::vector<EmissionEvent>& events) {
    std::vector<double> t;
    t.reserve(events.size());
    for (const auto& ev : events) t.push_back(ev.time);
    return t;
}

}  // namespace beamcorr

#endif
