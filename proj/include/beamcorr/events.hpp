#ifndef BEAMCORR_EVENTS_HPP
#define BEAMCORR_EVENTS_HPP

#include <cstdint>

namespace beamcorr {

// One spontaneous-emission event of a transiting atom. Position is the
// longitudinal coordinate along the beam, relative to the field-of-view
// center.
struct EmissionEvent {
    double time = 0.0;                   // s
    double longitudinal_position = 0.0;  // m
    std::uint32_t atom_id = 0;
};

}  // namespace beamcorr

#endif
