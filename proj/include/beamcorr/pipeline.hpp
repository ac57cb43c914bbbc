#ifndef BEAMCORR_PIPELINE_HPP
#define BEAMCORR_PIPELINE_HPP

#include <vector>

#include "beamcorr/config.hpp"
#include "beamcorr/detection.hpp"
#include "beamcorr/mcwf.hpp"

namespace beamcorr {

// Full experiment: beam simulation, field-of-view gating, thinning/splitting,
// and the SPCM chain, producing the two detector channels an actual run
// records. Detector randomness uses substream indices far above any atom id.
struct ExperimentRun {
    SimulationResult sim;
    std::vector<TimeTagStream> channels;  // A, B
};

inline ExperimentRun run_experiment(const SimulationPlan& plan) {
    constexpr std::uint64_t detector_substream_base = 0xFFFFFFFF00000000ULL;
    plan.validate();
    const ExperimentConfig& cfg = plan.config;
    ExperimentRun run;
    run.sim = simulate_beam(cfg.sim_input(), plan.duration, plan.master_seed);
    FiberLayout layout = cfg.layout();
    auto gated = gate_by_fov(run.sim.events, layout);
    if (layout.mode == FiberMode::single_hbt) {
        Rng split_rng = Rng::substream(plan.master_seed, detector_substream_base + 0);
        auto split = thin_and_split(gated[0], cfg.detectors.collection_efficiency, true, split_rng);
        for (std::size_t ch = 0; ch < 2; ++ch) {
            Rng det_rng = Rng::substream(plan.master_seed, detector_substream_base + 1 + ch);
            run.channels.push_back(apply_detector(event_times(split[ch]), cfg.detectors,
                                                  plan.duration, det_rng,
                                                  static_cast<std::uint16_t>(ch)));
        }
    } else {
        for (std::size_t ch = 0; ch < 2; ++ch) {
            Rng split_rng = Rng::substream(plan.master_seed, detector_substream_base + 4 + ch);
            auto kept =
                thin_and_split(gated[ch], cfg.detectors.collection_efficiency, false, split_rng);
            Rng det_rng = Rng::substream(plan.master_seed, detector_substream_base + 6 + ch);
            run.channels.push_back(apply_detector(event_times(kept[0]), cfg.detectors,
                                                  plan.duration, det_rng,
                                                  static_cast<std::uint16_t>(ch)));
        }
    }
    return run;
}

}  // namespace beamcorr

#endif
