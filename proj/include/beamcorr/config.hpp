#ifndef BEAMCORR_CONFIG_HPP
#define BEAMCORR_CONFIG_HPP

#include <cctype>
#include <cstdint>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "beamcorr/common.hpp"
#include "beamcorr/detection.hpp"
#include "beamcorr/mcwf.hpp"
#include "beamcorr/physics.hpp"

namespace beamcorr {

// Full parameter set driving a simulation or theory curve. The config file
// format is line-based `key = value` with `#` comments and dotted keys; units
// are part of the key names and converted here, so everything downstream is
// SI with angular frequencies in rad/s.
struct ExperimentConfig {
    BeamParameters beam;
    std::optional<double> mean_n_target;  // overrides beam.flux via the layout window
    std::optional<double> bright_mean_n_target;  // like mean_n_target but counts emitting atoms only
    OpticalParameters optics;
    RabiDistribution rabi;
    GeometryParameters geometry;
    std::optional<SelectionParameters> selection;
    DetectorParameters detectors;
    FiberMode layout_mode = FiberMode::single_hbt;
    EngineOptions engine;
    std::uint64_t seed = 1;

    // Single-fiber HBT runs use the fov length L as the one window; dual runs
    // place two d_f windows at +-d/2.
    FiberLayout layout() const {
        return layout_mode == FiberMode::single_hbt
                   ? FiberLayout::single(geometry.fov_length)
                   : FiberLayout::dual(geometry.fiber_separation, geometry.fiber_fov_diameter);
    }

    // Window length defining <N> for a mean-atom-number target: L for single
    // fiber, d_f for dual fiber (the single fiber's field of view).
    double mean_n_window_length() const {
        return layout_mode == FiberMode::single_hbt ? geometry.fov_length
                                                    : geometry.fiber_fov_diameter;
    }

    // Mean number of *emitting* atoms in the detection window per unit flux.
    // Without selection every atom is bright; with it, escapees plus the
    // Lorentzian-selected class contribute. The resonance is integrated on
    // its own subinterval so the quadrature cannot miss the narrow line.
    double bright_mean_n_per_flux() const {
        const VelocityPdf pdf = beam.flux_pdf();
        const double window = mean_n_window_length();
        const double inv_v = pdf.expect([](double v) { return 1.0 / v; });
        if (!selection) return window * inv_v;
        double selected = 0.0;
        if (!engine.background_run) {
            const SelectionParameters& sel = *selection;
            const double k_cos = 2.0 * constants::pi / optics.wavelength * std::cos(sel.angle);
            const double vc = -sel.detuning / k_cos;
            const double gv = sel.linewidth / k_cos;
            auto f = [&](double v) {
                return selection_probability(v, sel, optics.wavelength) / v;
            };
            const double cut_lo = std::max(0.0, vc - 50.0 * gv);
            const double cut_hi = std::min(pdf.support_max(), vc + 50.0 * gv);
            selected = pdf.expect(f, 0.0, cut_lo) + pdf.expect(f, cut_lo, cut_hi) +
                       pdf.expect(f, cut_hi, pdf.support_max());
        }
        return window * (engine.f_escape * inv_v + (1.0 - engine.f_escape) * selected);
    }

    void finalize() {
        // the Rabi distribution is configured in units of Gamma, so the
        // absolute optics values are derived here, after Gamma is known
        optics.rabi_mean = rabi.mean * optics.gamma;
        optics.rabi_sigma = rabi.sigma * optics.gamma;
        if (mean_n_target && bright_mean_n_target)
            throw validation_error("beam: mean_n_target and bright_mean_n_target are exclusive");
        if (mean_n_target) {
            beam.flux = flux_for_mean_atom_number(*mean_n_target, mean_n_window_length(),
                                                  beam.flux_pdf());
        } else if (bright_mean_n_target) {
            double per_flux = bright_mean_n_per_flux();
            if (per_flux <= 0.0)
                throw validation_error("beam: bright_mean_n_target with no bright atoms");
            beam.flux = *bright_mean_n_target / per_flux;
        }
        validate();
    }

    void validate() const {
        beam.validate();
        optics.validate();
        rabi.validate();
        geometry.validate();
        detectors.validate();
        engine.validate();
        layout().validate();
        if (selection) {
            selection->validate();
            if (selection->detuning > 0.0)
                throw validation_error("sel: detuning must be <= 0 (red detuning selects forward classes)");
        }
    }

    SimulationPlanInput sim_input() const {
        return SimulationPlanInput{beam, optics, rabi, selection, layout(), engine};
    }

    std::string dump() const;
};

struct SimulationPlan {
    ExperimentConfig config;
    double duration = 0.0;  // s
    std::uint64_t master_seed = 1;

    void validate() const {
        config.validate();
        if (duration <= 0.0) throw validation_error("plan: duration must be > 0");
    }
};

inline SimulationResult simulate_beam(const SimulationPlan& plan) {
    plan.validate();
    return simulate_beam(plan.config.sim_input(), plan.duration, plan.master_seed);
}

// ---------------------------------------------------------------------------
// Schema
// ---------------------------------------------------------------------------

struct ConfigKey {
    std::string key;
    std::string unit;
    std::string description;
    std::function<void(ExperimentConfig&, const std::string&)> set;
    std::function<std::string(const ExperimentConfig&)> get;
};

namespace detail {

inline double parse_double(const std::string& value) {
    std::size_t used = 0;
    double x = std::stod(value, &used);
    while (used < value.size() && std::isspace(static_cast<unsigned char>(value[used]))) ++used;
    if (used != value.size()) throw std::invalid_argument("trailing characters");
    return x;
}

inline std::uint64_t parse_u64(const std::string& value) {
    std::size_t used = 0;
    if (!value.empty() && value[0] == '-') throw std::invalid_argument("negative");
    unsigned long long x = std::stoull(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing characters");
    return x;
}

inline bool parse_bool(const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw std::invalid_argument("expected true/false");
}

inline std::string fmt(double x) {
    std::ostringstream os;
    os.precision(15);
    os << x;
    return os.str();
}

inline SelectionParameters& ensure_selection(ExperimentConfig& cfg) {
    if (!cfg.selection) cfg.selection.emplace();
    return *cfg.selection;
}

}  // namespace detail

inline const std::vector<ConfigKey>& config_schema() {
    using detail::ensure_selection;
    using detail::fmt;
    static const std::vector<ConfigKey> schema = {
        {"beam.temp_c", "degC", "oven temperature",
         [](ExperimentConfig& c, const std::string& v) {
             c.beam.temperature_k = celsius_to_kelvin(detail::parse_double(v));
         },
         [](const ExperimentConfig& c) { return fmt(c.beam.temperature_k - 273.15); }},
        {"beam.mass_kg", "kg", "atomic mass (default 87Rb)",
         [](ExperimentConfig& c, const std::string& v) { c.beam.atom_mass_kg = detail::parse_double(v); },
         [](const ExperimentConfig& c) { return fmt(c.beam.atom_mass_kg); }},
        {"beam.flux_hz", "atoms/s", "mean atoms transiting the collection region per second",
         [](ExperimentConfig& c, const std::string& v) { c.beam.flux = detail::parse_double(v); },
         [](const ExperimentConfig& c) { return fmt(c.beam.flux); }},
        {"beam.mean_n_target", "dimensionless", "target mean atom number in the detection window; overrides beam.flux_hz",
         [](ExperimentConfig& c, const std::string& v) { c.mean_n_target = detail::parse_double(v); },
         [](const ExperimentConfig& c) {
             return c.mean_n_target ? fmt(*c.mean_n_target) : std::string();
         }},
        {"beam.bright_mean_n_target", "dimensionless", "target mean number of emitting atoms in the window (selection-aware); overrides beam.flux_hz",
         [](ExperimentConfig& c, const std::string& v) {
             c.bright_mean_n_target = detail::parse_double(v);
         },
         [](const ExperimentConfig& c) {
             return c.bright_mean_n_target ? fmt(*c.bright_mean_n_target) : std::string();
         }},
        {"beam.transverse_spread_mps", "m/s", "half-width of the collimated transverse velocity spread",
         [](ExperimentConfig& c, const std::string& v) {
             c.beam.transverse_spread = detail::parse_double(v);
         },
         [](const ExperimentConfig& c) { return fmt(c.beam.transverse_spread); }},
        {"optics.gamma_mhz", "MHz", "natural linewidth Gamma/2pi",
         [](ExperimentConfig& c, const std::string& v) {
             c.optics.gamma = mhz_to_angular(detail::parse_double(v));
         },
         [](const ExperimentConfig& c) { return fmt(angular_to_mhz(c.optics.gamma)); }},
        {"optics.rabi_mean_gamma", "Gamma", "mean Rabi frequency in units of Gamma",
         [](ExperimentConfig& c, const std::string& v) { c.rabi.mean = detail::parse_double(v); },
         [](const ExperimentConfig& c) { return fmt(c.rabi.mean); }},
        {"optics.rabi_sigma_gamma", "Gamma", "std dev of the Rabi frequency in units of Gamma (0 = deterministic)",
         [](ExperimentConfig& c, const std::string& v) { c.rabi.sigma = detail::parse_double(v); },
         [](const ExperimentConfig& c) { return fmt(c.rabi.sigma); }},
        {"optics.wavelength_nm", "nm", "probe/repump wavelength",
         [](ExperimentConfig& c, const std::string& v) {
             c.optics.wavelength = detail::parse_double(v) * 1e-9;
         },
         [](const ExperimentConfig& c) { return fmt(c.optics.wavelength * 1e9); }},
        {"optics.waist_um", "um", "probe beam 1/e field radius w",
         [](ExperimentConfig& c, const std::string& v) {
             c.optics.beam_waist_radius = detail::parse_double(v) * 1e-6;
         },
         [](const ExperimentConfig& c) { return fmt(c.optics.beam_waist_radius * 1e6); }},
        {"geom.fov_um", "um", "field-of-view length L along the beam",
         [](ExperimentConfig& c, const std::string& v) {
             c.geometry.fov_length = detail::parse_double(v) * 1e-6;
         },
         [](const ExperimentConfig& c) { return fmt(c.geometry.fov_length * 1e6); }},
        {"geom.fiber_fov_um", "um", "single fiber field-of-view diameter d_f",
         [](ExperimentConfig& c, const std::string& v) {
             c.geometry.fiber_fov_diameter = detail::parse_double(v) * 1e-6;
         },
         [](const ExperimentConfig& c) { return fmt(c.geometry.fiber_fov_diameter * 1e6); }},
        {"geom.fiber_sep_um", "um", "fiber separation d in the atom plane",
         [](ExperimentConfig& c, const std::string& v) {
             c.geometry.fiber_separation = detail::parse_double(v) * 1e-6;
         },
         [](const ExperimentConfig& c) { return fmt(c.geometry.fiber_separation * 1e6); }},
        {"sel.detuning_mhz", "MHz", "repump detuning (<= 0); presence of any sel.* key enables selection",
         [](ExperimentConfig& c, const std::string& v) {
             ensure_selection(c).detuning = mhz_to_angular(detail::parse_double(v));
         },
         [](const ExperimentConfig& c) {
             return c.selection ? fmt(angular_to_mhz(c.selection->detuning)) : std::string();
         }},
        {"sel.angle_deg", "deg", "angle between repump and atomic beam",
         [](ExperimentConfig& c, const std::string& v) {
             ensure_selection(c).angle = detail::parse_double(v) * constants::pi / 180.0;
         },
         [](const ExperimentConfig& c) {
             return c.selection ? fmt(c.selection->angle * 180.0 / constants::pi) : std::string();
         }},
        {"sel.linewidth_mhz", "MHz", "effective selection linewidth (Lorentzian HWHM)",
         [](ExperimentConfig& c, const std::string& v) {
             ensure_selection(c).linewidth = mhz_to_angular(detail::parse_double(v));
         },
         [](const ExperimentConfig& c) {
             return c.selection ? fmt(angular_to_mhz(c.selection->linewidth)) : std::string();
         }},
        {"sel.background_run", "bool", "pump-only background run: resonant selection off, escapees remain",
         [](ExperimentConfig& c, const std::string& v) {
             ensure_selection(c);
             c.engine.background_run = detail::parse_bool(v);
         },
         [](const ExperimentConfig& c) {
             return c.selection ? std::string(c.engine.background_run ? "true" : "false")
                                : std::string();
         }},
        {"det.ceff", "probability", "combined collection x quantum efficiency",
         [](ExperimentConfig& c, const std::string& v) {
             c.detectors.collection_efficiency = detail::parse_double(v);
         },
         [](const ExperimentConfig& c) { return fmt(c.detectors.collection_efficiency); }},
        {"det.dead_time_ns", "ns", "non-paralyzable SPCM dead time",
         [](ExperimentConfig& c, const std::string& v) {
             c.detectors.dead_time = detail::parse_double(v) * 1e-9;
         },
         [](const ExperimentConfig& c) { return fmt(c.detectors.dead_time * 1e9); }},
        {"det.jitter_ps", "ps", "gaussian timing jitter sigma",
         [](ExperimentConfig& c, const std::string& v) {
             c.detectors.timing_jitter_sigma = detail::parse_double(v) * 1e-12;
         },
         [](const ExperimentConfig& c) { return fmt(c.detectors.timing_jitter_sigma * 1e12); }},
        {"det.dark_hz", "counts/s", "dark count rate per SPCM",
         [](ExperimentConfig& c, const std::string& v) { c.detectors.dark_rate = detail::parse_double(v); },
         [](const ExperimentConfig& c) { return fmt(c.detectors.dark_rate); }},
        {"det.bg_hz", "counts/s", "uncorrelated background count rate per SPCM",
         [](ExperimentConfig& c, const std::string& v) {
             c.detectors.background_rate = detail::parse_double(v);
         },
         [](const ExperimentConfig& c) { return fmt(c.detectors.background_rate); }},
        {"det.resolution_ps", "ps", "time tagger resolution",
         [](ExperimentConfig& c, const std::string& v) {
             c.detectors.resolution_ps = static_cast<std::int64_t>(detail::parse_u64(v));
         },
         [](const ExperimentConfig& c) { return std::to_string(c.detectors.resolution_ps); }},
        {"layout.mode", "single-hbt|dual-fiber", "collection layout",
         [](ExperimentConfig& c, const std::string& v) {
             if (v == "single-hbt")
                 c.layout_mode = FiberMode::single_hbt;
             else if (v == "dual-fiber")
                 c.layout_mode = FiberMode::dual_fiber;
             else
                 throw std::invalid_argument("expected single-hbt or dual-fiber");
         },
         [](const ExperimentConfig& c) {
             return std::string(c.layout_mode == FiberMode::single_hbt ? "single-hbt" : "dual-fiber");
         }},
        {"engine.kind", "fixed-dt|waiting-time", "trajectory engine",
         [](ExperimentConfig& c, const std::string& v) {
             if (v == "fixed-dt")
                 c.engine.engine = McwfEngine::fixed_dt;
             else if (v == "waiting-time")
                 c.engine.engine = McwfEngine::waiting_time;
             else
                 throw std::invalid_argument("expected fixed-dt or waiting-time");
         },
         [](const ExperimentConfig& c) {
             return std::string(c.engine.engine == McwfEngine::fixed_dt ? "fixed-dt" : "waiting-time");
         }},
        {"engine.rabi_mode", "constant|gaussian-profile", "per-atom drive model",
         [](ExperimentConfig& c, const std::string& v) {
             if (v == "constant")
                 c.engine.mode = RabiMode::constant;
             else if (v == "gaussian-profile")
                 c.engine.mode = RabiMode::gaussian_profile;
             else
                 throw std::invalid_argument("expected constant or gaussian-profile");
         },
         [](const ExperimentConfig& c) {
             return std::string(c.engine.mode == RabiMode::constant ? "constant" : "gaussian-profile");
         }},
        {"engine.dt_factor", "dimensionless", "dt = dt_factor / max(Omega, Gamma), must be <= 0.01",
         [](ExperimentConfig& c, const std::string& v) { c.engine.dt_factor = detail::parse_double(v); },
         [](const ExperimentConfig& c) { return fmt(c.engine.dt_factor); }},
        {"engine.f_escape", "probability", "fraction of atoms evading the pump filter",
         [](ExperimentConfig& c, const std::string& v) { c.engine.f_escape = detail::parse_double(v); },
         [](const ExperimentConfig& c) { return fmt(c.engine.f_escape); }},
        {"engine.warmup_waists", "waists", "upstream start distance in units of the probe waist",
         [](ExperimentConfig& c, const std::string& v) {
             c.engine.warmup_waists = detail::parse_double(v);
         },
         [](const ExperimentConfig& c) { return fmt(c.engine.warmup_waists); }},
        {"engine.impact_sigma_um", "um", "transverse impact-offset spread (gaussian-profile mode)",
         [](ExperimentConfig& c, const std::string& v) {
             c.engine.impact_sigma = detail::parse_double(v) * 1e-6;
         },
         [](const ExperimentConfig& c) { return fmt(c.engine.impact_sigma * 1e6); }},
        {"engine.keep_dark_rows", "bool", "keep ledger rows for dark atoms too",
         [](ExperimentConfig& c, const std::string& v) {
             c.engine.keep_dark_rows = detail::parse_bool(v);
         },
         [](const ExperimentConfig& c) {
             return std::string(c.engine.keep_dark_rows ? "true" : "false");
         }},
        {"engine.max_ledger_rows", "rows", "cap on stored per-atom ledger rows",
         [](ExperimentConfig& c, const std::string& v) {
             c.engine.max_ledger_rows = detail::parse_u64(v);
         },
         [](const ExperimentConfig& c) { return std::to_string(c.engine.max_ledger_rows); }},
        {"seed", "integer", "master seed for all random substreams",
         [](ExperimentConfig& c, const std::string& v) { c.seed = detail::parse_u64(v); },
         [](const ExperimentConfig& c) { return std::to_string(c.seed); }},
    };
    return schema;
}

inline const ConfigKey* find_config_key(const std::string& key) {
    for (const auto& entry : config_schema())
        if (entry.key == key) return &entry;
    return nullptr;
}

// Apply one `key = value` assignment (used by the loader and by CLI
// overrides).
inline void apply_config_entry(ExperimentConfig& cfg, const std::string& key,
                               const std::string& value, const std::string& where) {
    const ConfigKey* entry = find_config_key(key);
    if (!entry) throw validation_error(where + ": unknown key '" + key + "'");
    try {
        entry->set(cfg, value);
    } catch (const validation_error&) {
        throw;
    } catch (const std::exception& e) {
        throw validation_error(where + ": bad value '" + value + "' for " + key + " (" + e.what() + ")");
    }
}

namespace detail {
inline std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}
}  // namespace detail

inline ExperimentConfig parse_config(std::istream& in, const std::string& name) {
    ExperimentConfig cfg;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string s = line;
        auto hash = s.find('#');
        if (hash != std::string::npos) s = s.substr(0, hash);
        s = detail::trim(s);
        if (s.empty()) continue;
        auto eq = s.find('=');
        if (eq == std::string::npos)
            throw validation_error(name + ":" + std::to_string(lineno) + ": expected key = value");
        std::string key = detail::trim(s.substr(0, eq));
        std::string value = detail::trim(s.substr(eq + 1));
        apply_config_entry(cfg, key, value, name + ":" + std::to_string(lineno));
    }
    cfg.finalize();
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw validation_error("cannot open config: " + path);
    return parse_config(in, path);
}

inline std::string ExperimentConfig::dump() const {
    std::ostringstream os;
    for (const auto& entry : config_schema()) {
        std::string value = entry.get(*this);
        if (value.empty()) continue;  // inactive optional block
        os << entry.key << " = " << value << "\n";
    }
    return os.str();
}

inline std::uint64_t fnv1a_hash(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace beamcorr

#endif
