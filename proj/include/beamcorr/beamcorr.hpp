#ifndef BEAMCORR_BEAMCORR_HPP
#define BEAMCORR_BEAMCORR_HPP

#include "beamcorr/common.hpp"
#include "beamcorr/config.hpp"
#include "beamcorr/correlator.hpp"
#include "beamcorr/detection.hpp"
#include "beamcorr/events.hpp"
#include "beamcorr/fitting.hpp"
#include "beamcorr/mcwf.hpp"
#include "beamcorr/physics.hpp"
#include "beamcorr/pipeline.hpp"
#include "beamcorr/quadrature.hpp"
#include "beamcorr/rng.hpp"
#include "beamcorr/tagio.hpp"
#include "beamcorr/time_tags.hpp"
#include "beamcorr/velocimetry.hpp"
#include "beamcorr/velocity_pdf.hpp"

#endif
