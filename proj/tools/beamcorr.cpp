// beamcorr - command-line front end: simulate photon time-tag streams from a
// thermal-beam experiment config, and analyze tag files into g2/g3/velocity
// curves and theory fits.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "beamcorr/beamcorr.hpp"
#include "beamcorr/pipeline.hpp"

namespace fs = std::filesystem;
using namespace beamcorr;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitCorruption = 3;
constexpr int kExitNonConvergence = 4;

std::string config_help_epilog() {
    std::ostringstream os;
    os << "Config keys (key = value per line, '#' comments):\n";
    for (const auto& entry : config_schema())
        os << "  " << entry.key << " [" << entry.unit << "]  " << entry.description << "\n";
    return os.str();
}

std::string resolve_preset(const std::string& name) {
    std::vector<fs::path> candidates;
    if (const char* env = std::getenv("BEAMCORR_PRESET_DIR"))
        candidates.push_back(fs::path(env) / (name + ".cfg"));
    candidates.push_back(fs::path("presets") / (name + ".cfg"));
#ifdef BEAMCORR_PRESET_SOURCE_DIR
    candidates.push_back(fs::path(BEAMCORR_PRESET_SOURCE_DIR) / (name + ".cfg"));
#endif
    for (const auto& p : candidates)
        if (fs::exists(p)) return p.string();
    throw validation_error("preset not found: " + name);
}

std::int64_t ns_to_ps(double ns) { return seconds_to_ps(ns * 1e-9); }

void write_g2_csv(const std::string& path, const CoincidenceHistogram& hist) {
    std::vector<std::vector<double>> rows;
    rows.reserve(hist.n_bins());
    for (std::size_t k = 0; k < hist.n_bins(); ++k)
        rows.push_back({hist.bin_lo_s(k), static_cast<double>(hist.counts[k]),
                        hist.normalized() ? hist.g2[k] : 0.0});
    csv::write(path, {"tau_s", "counts", "g2"}, rows);
}

void write_g3_csv(const std::string& path, const G3Histogram& hist) {
    std::vector<std::vector<double>> rows;
    rows.reserve(hist.bins_per_axis * hist.bins_per_axis);
    for (std::size_t i1 = 0; i1 < hist.bins_per_axis; ++i1)
        for (std::size_t i2 = 0; i2 < hist.bins_per_axis; ++i2) {
            double g3 = hist.masked(i2) ? std::nan("") : hist.g3[i1 * hist.bins_per_axis + i2];
            rows.push_back({hist.bin_center_s(i1) - 0.5 * hist.bin_width_s(),
                            hist.bin_center_s(i2) - 0.5 * hist.bin_width_s(),
                            static_cast<double>(hist.at(i1, i2)), g3});
        }
    csv::write(path, {"tau1_s", "tau2_s", "counts", "g3"}, rows);
}

void write_density_csv(const std::string& path, const VelocityDensity& density) {
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < density.values.size(); ++i)
        rows.push_back({density.grid.center(i), density.values[i]});
    csv::write(path, {"v_mps", "density"}, rows);
}

struct SimulateArgs {
    std::string config_path;
    std::string preset;
    std::vector<std::string> overrides;
    double duration_s = 1.0;
    std::optional<std::uint64_t> seed;
    std::string outdir = ".";
    bool dump_emissions = false;
};

ExperimentConfig load_simulation_config(const SimulateArgs& args) {
    if (args.config_path.empty() == args.preset.empty())
        throw validation_error("simulate: give exactly one of --config or --preset");
    std::string path = args.config_path.empty() ? resolve_preset(args.preset) : args.config_path;
    ExperimentConfig cfg = load_config(path);
    for (const auto& ov : args.overrides) {
        auto eq = ov.find('=');
        if (eq == std::string::npos)
            throw validation_error("override must be key=value: " + ov);
        apply_config_entry(cfg, ov.substr(0, eq), ov.substr(eq + 1), "--override");
    }
    cfg.finalize();
    if (args.seed) cfg.seed = *args.seed;
    return cfg;
}

void cmd_simulate(const SimulateArgs& args, const std::string& recipe) {
    ExperimentConfig cfg = load_simulation_config(args);
    fs::create_directories(args.outdir);
    SimulationPlan plan{cfg, args.duration_s, cfg.seed};
    ExperimentRun result = run_experiment(plan);
    SimulationResult& sim = result.sim;
    std::vector<TimeTagStream>& channels = result.channels;

    fs::path out(args.outdir);
    write_tags(channels[0], (out / "A.attg").string());
    write_tags(channels[1], (out / "B.attg").string());

    {
        std::vector<std::vector<double>> rows;
        rows.reserve(sim.ledger.rows.size());
        for (const auto& rec : sim.ledger.rows)
            rows.push_back({static_cast<double>(rec.atom_id), rec.entry_time, rec.velocity,
                            rec.transverse_velocity, rec.impact_offset * 1e6,
                            rec.rabi_peak / cfg.optics.gamma, rec.selected ? 1.0 : 0.0,
                            rec.bright ? 1.0 : 0.0, static_cast<double>(rec.emission_count),
                            rec.fov_enter, rec.fov_exit});
        csv::write((out / "ledger.csv").string(),
                   {"atom_id", "entry_time_s", "velocity_mps", "transverse_mps", "impact_um",
                    "rabi_peak_gamma", "selected", "bright", "emissions", "fov_enter_s",
                    "fov_exit_s"},
                   rows);
    }

    if (args.dump_emissions) {
        TimeTagStream raw;
        raw.channel_id = 0xFFFF;
        raw.resolution_ps = 1;
        raw.duration_ps = seconds_to_ps(args.duration_s);
        std::vector<std::vector<double>> sidecar;
        std::int64_t last = -1;
        for (const auto& ev : sim.events) {
            std::int64_t q = seconds_to_ps(ev.time);
            if (q <= last) q = last + 1;  // keep the dump strictly sorted
            raw.tags.push_back(q);
            last = q;
            sidecar.push_back({static_cast<double>(q) * 1e-12, static_cast<double>(ev.atom_id),
                               ev.longitudinal_position * 1e6});
        }
        write_tags(raw, (out / "emissions.attg").string());
        csv::write((out / "emissions_atoms.csv").string(), {"time_s", "atom_id", "position_um"},
                   sidecar);
    }

    std::string dump = cfg.dump();
    std::ostringstream manifest;
    manifest << "tool = beamcorr\n"
             << "recipe = " << recipe << "\n"
             << "duration_s = " << args.duration_s << "\n"
             << "seed = " << cfg.seed << "\n"
             << "config_hash = " << std::hex << fnv1a_hash(dump) << std::dec << "\n"
             << "atoms_total = " << sim.ledger.atoms_total << "\n"
             << "atoms_bright = " << sim.ledger.atoms_bright << "\n"
             << "mean_n_all = " << sim.ledger.mean_atom_number_all() << "\n"
             << "mean_n_bright = " << sim.ledger.mean_atom_number_bright() << "\n"
             << "ledger_rows_dropped = " << sim.ledger.rows_dropped << "\n"
             << "emissions_in_span = " << sim.events.size() << "\n"
             << "tags_a = " << channels[0].size() << "\n"
             << "tags_b = " << channels[1].size() << "\n"
             << "--- config ---\n"
             << dump;
    std::ofstream mf(out / "manifest.txt", std::ios::trunc);
    mf << manifest.str();
    if (!mf) throw corruption_error("cannot write manifest");
    std::cout << "simulate: " << sim.ledger.atoms_total << " atoms, " << channels[0].size()
              << " + " << channels[1].size() << " tags -> " << args.outdir << "\n";
}

struct CorrArgs {
    std::string a_path, b_path, out;
    double bin_ns = 2.0;
    double tau_min_ns = 0.0;
    double tau_max_ns = 2000.0;
    std::string norm = "rates";
    double plateau_from_us = 0.0;
    double plateau_to_us = 0.0;
};

CoincidenceHistogram run_xcorr(const CorrArgs& args) {
    TimeTagStream a = read_tags(args.a_path);
    TimeTagStream b = read_tags(args.b_path);
    auto hist = cross_correlate(a, b, ns_to_ps(args.bin_ns), ns_to_ps(args.tau_min_ns),
                                ns_to_ps(args.tau_max_ns));
    G2Norm norm = args.norm == "plateau" ? G2Norm::plateau : G2Norm::rates;
    return normalize_g2(hist, norm, seconds_to_ps(args.plateau_from_us * 1e-6),
                        seconds_to_ps(args.plateau_to_us * 1e-6));
}

struct G3Args {
    std::string a_path, b_path, out;
    double bin_ns = 100.0;
    double tau_min_ns = 0.0;
    double tau_max_ns = 2000.0;
    double theta_ns = 45.0;
};

struct VelocityArgs {
    std::string a_path, b_path, out, rho_out;
    std::string bg_a, bg_b;
    double distance_um = 55.0;
    double fiber_um = 25.0;
    double bin_ns = 20.0;
    double tau_max_us = 20.0;
    double weight = std::nan("");
    double v_lo = 5.0, v_hi = 400.0, v_cell = 2.5;
};

void cmd_velocity(const VelocityArgs& args) {
    CorrArgs corr;
    corr.a_path = args.a_path;
    corr.b_path = args.b_path;
    corr.bin_ns = args.bin_ns;
    corr.tau_min_ns = 0.0;
    corr.tau_max_ns = args.tau_max_us * 1000.0;
    auto hist = run_xcorr(corr);
    if (!args.bg_a.empty() || !args.bg_b.empty()) {
        if (args.bg_a.empty() || args.bg_b.empty())
            throw validation_error("velocity: background needs both --bg-a and --bg-b");
        CorrArgs bg = corr;
        bg.a_path = args.bg_a;
        bg.b_path = args.bg_b;
        auto bg_hist = run_xcorr(bg);
        auto sub = subtract_background(hist, bg_hist, args.weight);
        std::cout << "velocity: background weight " << sub.weight << ", " << sub.clamped_bins
                  << " bins clamped\n";
        hist = sub.hist;
    }
    auto density = correlated_excess(hist);
    VelocityGrid grid{args.v_lo, args.v_hi, args.v_cell};
    auto n_v = tau_to_velocity(density, args.distance_um * 1e-6, grid);
    write_density_csv(args.out, n_v);
    std::cout << "velocity: coincidence density peak at " << n_v.peak_velocity() << " m/s\n";
    if (!args.rho_out.empty()) {
        auto rho = to_atom_pdf(n_v, args.fiber_um * 1e-6);
        write_density_csv(args.rho_out, rho);
        std::cout << "velocity: atom pdf peak at " << rho.peak_velocity() << " m/s\n";
    }
}

struct TheoryArgs {
    std::string out;
    double temp_c = 78.0;
    double mass_kg = constants::rb87_mass;
    double mean_n = 0.138;
    double fov_um = 25.0;
    double rabi_mean = 6.0;
    double rabi_sigma = 1.5;
    double gamma_mhz = constants::rb87_d2_gamma_mhz;
    double tau_max_ns = 600.0;
    double step_ns = 1.0;
    bool two_fiber = false;
    double distance_um = 55.0;
    double fiber_um = 25.0;
};

void cmd_theory(const TheoryArgs& args) {
    BeamParameters beam;
    beam.temperature_k = celsius_to_kelvin(args.temp_c);
    beam.atom_mass_kg = args.mass_kg;
    beam.flux = 1.0;
    GeometryParameters geom;
    geom.fov_length = args.fov_um * 1e-6;
    geom.fiber_fov_diameter = args.fiber_um * 1e-6;
    geom.fiber_separation = args.distance_um * 1e-6;
    RabiDistribution rabi{args.rabi_mean, args.rabi_sigma};
    double gamma = mhz_to_angular(args.gamma_mhz);
    std::vector<std::vector<double>> rows;
    for (double tau_ns = 0.0; tau_ns <= args.tau_max_ns + 1e-9; tau_ns += args.step_ns) {
        double tau = tau_ns * 1e-9;
        double value = args.two_fiber
                           ? (tau > 0.0 ? two_fiber_theory(tau, geom, beam, args.mean_n) : 1.0)
                           : g2_theory(tau, args.mean_n, geom, beam, rabi, gamma);
        rows.push_back({tau, value});
    }
    csv::write(args.out, {"tau_s", "g2"}, rows);
}

struct FitArgs {
    std::string g2_path, out, curve_out;
    double temp_c = 78.0;
    double gamma_mhz = constants::rb87_d2_gamma_mhz;
    double init_mean_n = 0.1;
    double init_fov_um = 25.0;
    double init_rabi_mean = 6.0;
    double init_rabi_sigma = 1.5;
    std::vector<std::string> fixed;
    double tau_min_ns = 2.0;
    double min_counts = 10.0;
};

int cmd_fit(const FitArgs& args) {
    csv::Table table = csv::read(args.g2_path);
    int tau_col = table.column("tau_s");
    int counts_col = table.column("counts");
    int g2_col = table.column("g2");
    if (tau_col < 0 || counts_col < 0 || g2_col < 0)
        throw corruption_error(args.g2_path + ": need tau_s,counts,g2 columns");
    G2Data data;
    for (const auto& row : table.rows) {
        data.tau.push_back(row[tau_col]);
        data.counts.push_back(row[counts_col]);
        data.g2.push_back(row[g2_col]);
    }
    BeamParameters beam;
    beam.temperature_k = celsius_to_kelvin(args.temp_c);
    beam.flux = 1.0;
    double gamma = mhz_to_angular(args.gamma_mhz);
    FitParameters init{args.init_mean_n, args.init_fov_um * 1e-6, args.init_rabi_mean,
                       args.init_rabi_sigma};
    FitOptions options;
    options.tau_min_s = args.tau_min_ns * 1e-9;
    options.min_counts = args.min_counts;
    for (const auto& fix : args.fixed) {
        auto eq = fix.find('=');
        std::string name = eq == std::string::npos ? fix : fix.substr(0, eq);
        double value = eq == std::string::npos ? 0.0 : std::stod(fix.substr(eq + 1));
        if (name == "mean-n") {
            options.fixed[0] = true;
            if (eq != std::string::npos) init.mean_n = value;
        } else if (name == "fov-um") {
            options.fixed[1] = true;
            if (eq != std::string::npos) init.fov_length = value * 1e-6;
        } else if (name == "mu" || name == "rabi-mean") {
            options.fixed[2] = true;
            if (eq != std::string::npos) init.rabi_mean = value;
        } else if (name == "sigma" || name == "rabi-sigma") {
            options.fixed[3] = true;
            if (eq != std::string::npos) init.rabi_sigma = value;
        } else {
            throw validation_error("fit: unknown --fix parameter " + name);
        }
    }
    FitResult result = fit_g2(data, beam, gamma, init, options);

    csv::write(args.out, {"name", "value"},
               {{0, result.params.mean_n},
                {1, result.params.fov_length * 1e6},
                {2, result.params.rabi_mean},
                {3, result.params.rabi_sigma},
                {4, result.residual_rms},
                {5, static_cast<double>(result.iterations)},
                {6, result.converged ? 1.0 : 0.0},
                {7, result.gradient_norm}});
    // named parameter file alongside the numeric one
    {
        std::ofstream pf(args.out + ".txt", std::ios::trunc);
        pf << "mean_n = " << result.params.mean_n << "\n"
           << "fov_um = " << result.params.fov_length * 1e6 << "\n"
           << "rabi_mean_gamma = " << result.params.rabi_mean << "\n"
           << "rabi_sigma_gamma = " << result.params.rabi_sigma << "\n"
           << "residual_rms = " << result.residual_rms << "\n"
           << "iterations = " << result.iterations << "\n"
           << "converged = " << (result.converged ? "true" : "false") << "\n"
           << "gradient_norm = " << result.gradient_norm << "\n";
    }
    std::string curve_path = args.curve_out.empty() ? args.out + ".curve.csv" : args.curve_out;
    {
        G2TheoryModel model(beam, gamma);
        std::vector<std::vector<double>> rows;
        for (std::size_t k = 0; k < data.tau.size(); ++k) {
            double m = model(data.tau[k], result.params);
            rows.push_back({data.tau[k], data.g2[k], m, data.g2[k] - m});
        }
        csv::write(curve_path, {"tau_s", "g2_data", "g2_model", "residual"}, rows);
    }
    std::cout << "fit: mean_n = " << result.params.mean_n << ", L = "
              << result.params.fov_length * 1e6 << " um, mu = " << result.params.rabi_mean
              << " Gamma, sigma = " << result.params.rabi_sigma << " Gamma, "
              << (result.converged ? "converged" : "NOT converged") << "\n";
    return result.converged ? 0 : kExitNonConvergence;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"beamcorr: single-atom photon statistics in thermal atomic beams -- "
                 "Monte Carlo wave-function simulation and time-tag analysis"};
    app.require_subcommand(1);

    std::ostringstream recipe;
    for (int i = 0; i < argc; ++i) recipe << (i ? " " : "") << argv[i];

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "run the beam simulation and detector chain");
    simulate->footer(config_help_epilog());
    auto* cfg_opt = simulate->add_option("--config", sim.config_path, "experiment config file");
    simulate->add_option("--preset", sim.preset, "named preset (fig1c, fig2a-f, fig3a-c, fig4a-b, figS2, figS4)")
        ->excludes(cfg_opt);
    simulate->add_option("--override", sim.overrides, "config override key=value (repeatable)");
    simulate->add_option("--duration-s", sim.duration_s, "simulated run length in seconds")->required();
    std::uint64_t seed_value = 0;
    auto* seed_opt = simulate->add_option("--seed", seed_value, "override the config seed");
    simulate->add_option("--outdir", sim.outdir, "output directory")->required();
    simulate->add_flag("--dump-emissions", sim.dump_emissions,
                       "also write raw emission times with an atom-id sidecar");

    CorrArgs g2_args;
    auto* g2cmd = app.add_subcommand("g2", "pair-correlation histogram, normalized to g2");
    CorrArgs xcorr_args;
    xcorr_args.tau_min_ns = -2000.0;
    auto* xcorrcmd = app.add_subcommand("xcorr", "signed-delay cross-correlation of two channels");
    for (auto [cmd, args] : {std::pair{g2cmd, &g2_args}, std::pair{xcorrcmd, &xcorr_args}}) {
        cmd->add_option("--a", args->a_path, "channel A .attg file")->required();
        cmd->add_option("--b", args->b_path, "channel B .attg file")->required();
        cmd->add_option("--bin-ns", args->bin_ns, "bin width in ns");
        cmd->add_option("--tau-min-ns", args->tau_min_ns, "lower delay edge in ns");
        cmd->add_option("--tau-max-ns", args->tau_max_ns, "upper delay edge in ns");
        cmd->add_option("--norm", args->norm, "normalization: rates or plateau")
            ->check(CLI::IsMember({"rates", "plateau"}));
        cmd->add_option("--plateau-from-us", args->plateau_from_us, "plateau window start (us)");
        cmd->add_option("--plateau-to-us", args->plateau_to_us, "plateau window end (us)");
        cmd->add_option("--out", args->out, "output CSV (tau_s,counts,g2)")->required();
    }

    G3Args g3_args;
    auto* g3cmd = app.add_subcommand("g3", "partial third-order correlation with channel C = A");
    g3cmd->add_option("--a", g3_args.a_path, "channel A .attg file")->required();
    g3cmd->add_option("--b", g3_args.b_path, "channel B .attg file")->required();
    g3cmd->add_option("--bin-ns", g3_args.bin_ns, "bin width in ns (per axis)");
    g3cmd->add_option("--tau-min-ns", g3_args.tau_min_ns, "lower delay edge in ns");
    g3cmd->add_option("--tau-max-ns", g3_args.tau_max_ns, "upper delay edge in ns");
    g3cmd->add_option("--theta-ns", g3_args.theta_ns, "dead-time mask on tau2 in ns");
    g3cmd->add_option("--out", g3_args.out, "output CSV (tau1_s,tau2_s,counts,g3)")->required();

    VelocityArgs vel;
    auto* velcmd = app.add_subcommand("velocity", "two-fiber velocity reconstruction");
    velcmd->add_option("--a", vel.a_path, "upstream fiber .attg file")->required();
    velcmd->add_option("--b", vel.b_path, "downstream fiber .attg file")->required();
    velcmd->add_option("--distance-um", vel.distance_um, "fiber separation d in um")->required();
    velcmd->add_option("--fiber-um", vel.fiber_um, "fiber field-of-view diameter d_f in um")->required();
    velcmd->add_option("--bin-ns", vel.bin_ns, "correlation bin width in ns");
    velcmd->add_option("--tau-max-us", vel.tau_max_us, "correlation window in us");
    velcmd->add_option("--bg-a", vel.bg_a, "background run channel A");
    velcmd->add_option("--bg-b", vel.bg_b, "background run channel B");
    velcmd->add_option("--weight", vel.weight, "background weight (default: accidental-rate ratio)");
    velcmd->add_option("--v-min", vel.v_lo, "velocity grid start (m/s)");
    velcmd->add_option("--v-max", vel.v_hi, "velocity grid end (m/s)");
    velcmd->add_option("--v-cell", vel.v_cell, "velocity grid cell (m/s)");
    velcmd->add_option("--out", vel.out, "coincidence density CSV (v_mps,density)")->required();
    velcmd->add_option("--rho-out", vel.rho_out, "atom probability density CSV");

    TheoryArgs theory;
    auto* theorycmd = app.add_subcommand("theory", "closed-form correlation curves");
    theorycmd->add_option("--temp-c", theory.temp_c, "beam temperature in C");
    theorycmd->add_option("--mass-kg", theory.mass_kg, "atom mass in kg");
    theorycmd->add_option("--mean-n", theory.mean_n, "mean atom number in the window");
    theorycmd->add_option("--fov-um", theory.fov_um, "field-of-view length in um");
    theorycmd->add_option("--rabi-mean", theory.rabi_mean, "Rabi mean in Gamma units");
    theorycmd->add_option("--rabi-sigma", theory.rabi_sigma, "Rabi sigma in Gamma units");
    theorycmd->add_option("--gamma-mhz", theory.gamma_mhz, "natural linewidth in MHz");
    theorycmd->add_option("--tau-max-ns", theory.tau_max_ns, "last delay in ns");
    theorycmd->add_option("--step-ns", theory.step_ns, "delay step in ns");
    theorycmd->add_flag("--two-fiber", theory.two_fiber, "emit the two-fiber correlation curve");
    theorycmd->add_option("--distance-um", theory.distance_um, "fiber separation for --two-fiber");
    theorycmd->add_option("--fiber-um", theory.fiber_um, "fiber fov diameter for --two-fiber");
    theorycmd->add_option("--out", theory.out, "output CSV (tau_s,g2)")->required();

    FitArgs fit;
    auto* fitcmd = app.add_subcommand("fit", "fit the thermal-beam theory curve to g2 data");
    fitcmd->add_option("--g2", fit.g2_path, "input CSV with tau_s,counts,g2")->required();
    fitcmd->add_option("--temp-c", fit.temp_c, "beam temperature in C");
    fitcmd->add_option("--gamma-mhz", fit.gamma_mhz, "natural linewidth in MHz");
    fitcmd->add_option("--init-mean-n", fit.init_mean_n, "initial <N>");
    fitcmd->add_option("--init-fov-um", fit.init_fov_um, "initial L in um");
    fitcmd->add_option("--init-rabi-mean", fit.init_rabi_mean, "initial mu in Gamma units");
    fitcmd->add_option("--init-rabi-sigma", fit.init_rabi_sigma, "initial sigma in Gamma units");
    fitcmd->add_option("--fix", fit.fixed, "fix a parameter, e.g. sigma=1.5 (repeatable)");
    fitcmd->add_option("--tau-min-ns", fit.tau_min_ns, "exclude bins below this delay");
    fitcmd->add_option("--min-counts", fit.min_counts, "exclude bins with fewer counts");
    fitcmd->add_option("--out", fit.out, "parameter CSV output")->required();
    fitcmd->add_option("--curve-out", fit.curve_out, "residual curve CSV output");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*simulate) {
            if (*seed_opt) sim.seed = seed_value;
            cmd_simulate(sim, recipe.str());
        } else if (*g2cmd) {
            write_g2_csv(g2_args.out, run_xcorr(g2_args));
        } else if (*xcorrcmd) {
            write_g2_csv(xcorr_args.out, run_xcorr(xcorr_args));
        } else if (*g3cmd) {
            TimeTagStream a = read_tags(g3_args.a_path);
            TimeTagStream b = read_tags(g3_args.b_path);
            auto hist = normalize_g3(g3_partial(a, b, ns_to_ps(g3_args.theta_ns),
                                                ns_to_ps(g3_args.bin_ns),
                                                ns_to_ps(g3_args.tau_min_ns),
                                                ns_to_ps(g3_args.tau_max_ns)));
            write_g3_csv(g3_args.out, hist);
        } else if (*velcmd) {
            cmd_velocity(vel);
        } else if (*theorycmd) {
            cmd_theory(theory);
        } else if (*fitcmd) {
            return cmd_fit(fit);
        }
    } catch (const validation_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const corruption_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitCorruption;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
