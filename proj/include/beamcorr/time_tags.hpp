#ifndef BEAMCORR_TIME_TAGS_HPP
#define BEAMCORR_TIME_TAGS_HPP

#include <algorithm>
#include <cstdint>
#include <vector>

#include "beamcorr/common.hpp"

namespace beamcorr {

// One detector channel's photon detections as integer picosecond timestamps,
// strictly increasing, quantized to resolution_ps. This is the interchange
// object between simulation, files, and analysis.
struct TimeTagStream {
    std::uint16_t channel_id = 0;
    std::int64_t resolution_ps = 1;
    std::int64_t duration_ps = 0;
    std::vector<std::int64_t> tags;  // ps, strictly ascending, multiples of resolution_ps

    double duration_s() const { return static_cast<double>(duration_ps) * 1e-12; }
    std::size_t size() const { return tags.size(); }
    double rate_hz() const {
        if (duration_ps <= 0) throw validation_error("time tag stream has no duration");
        return static_cast<double>(tags.size()) / duration_s();
    }

    bool strictly_sorted() const {
        return std::adjacent_find(tags.begin(), tags.end(),
                                  [](std::int64_t a, std::int64_t b) { return a >= b; }) == tags.end();
    }

    void validate() const {
        if (resolution_ps <= 0) throw validation_error("resolution_ps must be > 0");
        if (!strictly_sorted()) throw validation_error("tags must be strictly increasing");
        if (!tags.empty() && (tags.front() < 0 || tags.back() > duration_ps))
            throw validation_error("tags must lie within [0, duration]");
    }
};

inline std::int64_t seconds_to_ps(double t_s) {
    return static_cast<std::int64_t>(std::llround(t_s * 1e12));
}
inline double ps_to_seconds(std::int64_t t_ps) { return static_cast<double>(t_ps) * 1e-12; }

}  // namespace beamcorr

#endif
