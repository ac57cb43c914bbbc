#ifndef BEAMCORR_FITTING_HPP
#define BEAMCORR_FITTING_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "beamcorr/common.hpp"
#include "beamcorr/correlator.hpp"
#include "beamcorr/physics.hpp"

namespace beamcorr {

// Normalized g2 samples with Poisson counting weights.
struct G2Data {
    std::vector<double> tau;     // s, bin centers
    std::vector<double> g2;
    std::vector<double> counts;  // raw coincidence counts behind each bin

    static G2Data from_histogram(const CoincidenceHistogram& hist) {
        if (!hist.normalized()) throw validation_error("G2Data: histogram not normalized");
        G2Data data;
        for (std::size_t k = 0; k < hist.n_bins(); ++k) {
            data.tau.push_back(hist.bin_center_s(k));
            data.g2.push_back(hist.g2[k]);
            data.counts.push_back(static_cast<double>(hist.counts[k]));
        }
        return data;
    }
};

// Theory-curve parameters under fit: (<N>, L, mu, sigma) with the Rabi moments
// in units of Gamma.
struct FitParameters {
    double mean_n = 0.1;
    double fov_length = 25e-6;  // m
    double rabi_mean = 6.0;     // Gamma units
    double rabi_sigma = 1.5;    // Gamma units

    std::array<double, 4> to_array() const {
        return {mean_n, fov_length * 1e6, rabi_mean, rabi_sigma};  // L in um for conditioning
    }
    static FitParameters from_array(const std::array<double, 4>& p) {
        return FitParameters{p[0], p[1] * 1e-6, p[2], p[3]};
    }
};

struct FitBounds {
    FitParameters lo{1e-3, 5e-6, 0.5, 0.0};
    FitParameters hi{5.0, 100e-6, 20.0, 5.0};
};

struct FitOptions {
    FitBounds bounds;
    std::array<bool, 4> fixed = {false, false, false, false};
    int max_iterations = 500;
    double rel_tol = 1e-6;
    double tau_min_s = 2e-9;  // first bins carry the detector jitter
    double min_counts = 10.0;
};

struct FitResult {
    FitParameters params;
    double residual_rms = 0.0;
    double objective = 0.0;
    int iterations = 0;
    bool converged = false;
    std::array<bool, 4> parameter_bounds_hit = {false, false, false, false};
    double gradient_norm = 0.0;
    double gradient_scale = 1.0;
};

// Evaluates the thermal-beam theory curve for a candidate parameter set. The
// beam's 1/v moment is cached; the transit integral is recomputed because L
// is a fit parameter.
class G2TheoryModel {
public:
    G2TheoryModel(const BeamParameters& beam, double gamma)
        : pdf_(beam.flux_pdf()), gamma_(gamma) {
        inv_v_moment_ = pdf_.expect([](double v) { return 1.0 / v; });
    }

    double operator()(double tau, const FitParameters& p) const {
        RabiDistribution rabi{p.rabi_mean, p.rabi_sigma};
        double xi = transit(tau, p.fov_length);
        return xi * g2_single_averaged(tau, rabi, gamma_) / p.mean_n + 1.0;
    }

    double transit(double tau, double fov_length) const {
        if (tau <= 0.0) return 1.0;
        const double v_cut = fov_length / tau;
        const double slope = tau / fov_length;
        double num =
            pdf_.expect([slope](double v) { return (1.0 - slope * v) / v; }, 0.0, v_cut, 1e-8);
        double xi = num / inv_v_moment_;
        return xi < 0.0 ? 0.0 : xi;
    }

private:
    VelocityPdf pdf_;
    double gamma_;
    double inv_v_moment_;
};

namespace detail {

struct FitWorkspace {
    const G2Data* data;
    const G2TheoryModel* model;
    std::vector<std::size_t> bins;   // indices surviving the fit window
    std::vector<double> sigma;       // per-bin Poisson error on g2

    std::vector<double> residuals(const FitParameters& p) const {
        std::vector<double> r(bins.size());
        for (std::size_t i = 0; i < bins.size(); ++i) {
            std::size_t k = bins[i];
            r[i] = (data->g2[k] - (*model)(data->tau[k], p)) / sigma[i];
        }
        return r;
    }
    double objective(const FitParameters& p) const {
        double sum = 0.0;
        for (std::size_t i = 0; i < bins.size(); ++i) {
            std::size_t k = bins[i];
            double r = (data->g2[k] - (*model)(data->tau[k], p)) / sigma[i];
            sum += r * r;
        }
        return sum;
    }
};

// Solve a small symmetric positive system by Gaussian elimination with
// partial pivoting; n <= 4 here.
inline bool solve_linear(std::vector<double>& a, std::vector<double>& b, int n) {
    for (int col = 0; col < n; ++col) {
        int pivot = col;
        for (int row = col + 1; row < n; ++row)
            if (std::fabs(a[row * n + col]) > std::fabs(a[pivot * n + col])) pivot = row;
        if (std::fabs(a[pivot * n + col]) < 1e-300) return false;
        if (pivot != col) {
            for (int j = 0; j < n; ++j) std::swap(a[col * n + j], a[pivot * n + j]);
            std::swap(b[col], b[pivot]);
        }
        for (int row = col + 1; row < n; ++row) {
            double f = a[row * n + col] / a[col * n + col];
            for (int j = col; j < n; ++j) a[row * n + j] -= f * a[col * n + j];
            b[row] -= f * b[col];
        }
    }
    for (int row = n - 1; row >= 0; --row) {
        double s = b[row];
        for (int j = row + 1; j < n; ++j) s -= a[row * n + j] * b[j];
        b[row] = s / a[row * n + row];
    }
    return true;
}

// Nelder-Mead on the free coordinates with an out-of-bounds penalty.
inline std::vector<double> nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                                       std::vector<double> x0, const std::vector<double>& step,
                                       int max_iter, double ftol, int& iterations) {
    const std::size_t n = x0.size();
    std::vector<std::vector<double>> simplex(n + 1, x0);
    for (std::size_t i = 0; i < n; ++i) simplex[i + 1][i] += step[i];
    std::vector<double> fv(n + 1);
    for (std::size_t i = 0; i <= n; ++i) fv[i] = f(simplex[i]);
    for (int iter = 0; iter < max_iter; ++iter) {
        ++iterations;
        std::vector<std::size_t> order(n + 1);
        for (std::size_t i = 0; i <= n; ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
        std::size_t best = order[0], worst = order[n], second = order[n - 1];
        if (std::fabs(fv[worst] - fv[best]) <= ftol * (std::fabs(fv[best]) + ftol)) break;
        std::vector<double> centroid(n, 0.0);
        for (std::size_t i = 0; i <= n; ++i) {
            if (i == worst) continue;
            for (std::size_t j = 0; j < n; ++j) centroid[j] += simplex[i][j];
        }
        for (double& c : centroid) c /= static_cast<double>(n);
        auto blend = [&](double t) {
            std::vector<double> x(n);
            for (std::size_t j = 0; j < n; ++j)
                x[j] = centroid[j] + t * (simplex[worst][j] - centroid[j]);
            return x;
        };
        std::vector<double> xr = blend(-1.0);
        double fr = f(xr);
        if (fr < fv[best]) {
            std::vector<double> xe = blend(-2.0);
            double fe = f(xe);
            if (fe < fr) {
                simplex[worst] = xe;
                fv[worst] = fe;
            } else {
                simplex[worst] = xr;
                fv[worst] = fr;
            }
        } else if (fr < fv[second]) {
            simplex[worst] = xr;
            fv[worst] = fr;
        } else {
            std::vector<double> xc = blend(fr < fv[worst] ? -0.5 : 0.5);
            double fc = f(xc);
            if (fc < std::min(fr, fv[worst])) {
                simplex[worst] = xc;
                fv[worst] = fc;
            } else {
                for (std::size_t i = 0; i <= n; ++i) {
                    if (i == best) continue;
                    for (std::size_t j = 0; j < n; ++j)
                        simplex[i][j] = simplex[best][j] + 0.5 * (simplex[i][j] - simplex[best][j]);
                    fv[i] = f(simplex[i]);
                }
            }
        }
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i <= n; ++i)
        if (fv[i] < fv[best]) best = i;
    return simplex[best];
}

}  // namespace detail

// Weighted least-squares fit of the thermal-beam theory curve. Derivative-free
// simplex with one restart locates the basin; a damped Gauss-Newton polish
// with central-difference Jacobian sharpens the optimum. Non-convergence is
// reported through the flag, never silently.
inline FitResult fit_g2(const G2Data& data, const BeamParameters& beam, double gamma,
                        const FitParameters& init, const FitOptions& options = {}) {
    if (data.tau.size() != data.g2.size() || data.tau.size() != data.counts.size())
        throw validation_error("fit_g2: data arrays differ in length");
    G2TheoryModel model(beam, gamma);
    detail::FitWorkspace ws;
    ws.data = &data;
    ws.model = &model;
    for (std::size_t k = 0; k < data.tau.size(); ++k) {
        if (data.tau[k] < options.tau_min_s) continue;
        if (data.counts[k] < options.min_counts) continue;
        if (data.g2[k] <= 0.0) continue;
        ws.bins.push_back(k);
        ws.sigma.push_back(data.g2[k] / std::sqrt(data.counts[k]));
    }
    if (ws.bins.size() < 50)
        throw validation_error("fit_g2: need at least 50 usable bins across the peak and tail");
    double g2_lo = data.g2[ws.bins.front()], g2_hi = g2_lo;
    for (std::size_t k : ws.bins) {
        g2_lo = std::min(g2_lo, data.g2[k]);
        g2_hi = std::max(g2_hi, data.g2[k]);
    }
    if (g2_hi - g2_lo < 1e-6) throw validation_error("fit_g2: data is flat, nothing to fit");

    const std::array<double, 4> lo = options.bounds.lo.to_array();
    const std::array<double, 4> hi = options.bounds.hi.to_array();
    std::array<double, 4> full = init.to_array();
    for (int i = 0; i < 4; ++i) {
        if (full[i] < lo[i] || full[i] > hi[i])
            throw validation_error("fit_g2: initial guess outside bounds");
    }
    std::vector<int> free_idx;
    for (int i = 0; i < 4; ++i)
        if (!options.fixed[i]) free_idx.push_back(i);
    if (free_idx.empty()) throw validation_error("fit_g2: all parameters fixed");

    auto assemble = [&](const std::vector<double>& x) {
        std::array<double, 4> p = full;
        for (std::size_t i = 0; i < free_idx.size(); ++i) p[free_idx[i]] = x[i];
        return FitParameters::from_array(p);
    };
    auto penalized = [&](const std::vector<double>& x) {
        double penalty = 0.0;
        for (std::size_t i = 0; i < free_idx.size(); ++i) {
            int j = free_idx[i];
            if (x[i] < lo[j]) penalty += 1e6 * (1.0 + lo[j] - x[i]);
            if (x[i] > hi[j]) penalty += 1e6 * (1.0 + x[i] - hi[j]);
        }
        if (penalty > 0.0) return 1e20 + penalty;
        return ws.objective(assemble(x));
    };

    FitResult result;
    int iterations = 0;
    std::vector<double> x;
    for (int i : free_idx) x.push_back(full[i]);
    std::vector<double> step;
    for (int i : free_idx) {
        double s = 0.1 * std::fabs(full[i]);
        if (s < 0.05) s = 0.05;
        step.push_back(s);
    }
    x = detail::nelder_mead(penalized, x, step, options.max_iterations, 1e-12, iterations);
    for (auto& s : step) s *= 0.2;  // restart tighter around the found basin
    x = detail::nelder_mead(penalized, x, step, options.max_iterations, 1e-14, iterations);

    // clamp into bounds before the polish
    for (std::size_t i = 0; i < free_idx.size(); ++i)
        x[i] = std::clamp(x[i], lo[free_idx[i]], hi[free_idx[i]]);

    // damped Gauss-Newton with central-difference Jacobian
    const int n_free = static_cast<int>(free_idx.size());
    const std::size_t m = ws.bins.size();
    double lambda = 1e-4;
    std::vector<double> r = ws.residuals(assemble(x));
    double obj = 0.0;
    for (double v : r) obj += v * v;
    std::vector<double> jac(m * free_idx.size());
    bool converged = false;
    auto compute_jacobian = [&]() {
        for (int c = 0; c < n_free; ++c) {
            double h = std::max(1e-5 * std::fabs(x[c]), 1e-7);
            std::vector<double> xp = x, xm = x;
            xp[c] += h;
            xm[c] -= h;
            std::vector<double> rp = ws.residuals(assemble(xp));
            std::vector<double> rm = ws.residuals(assemble(xm));
            for (std::size_t row = 0; row < m; ++row)
                jac[row * n_free + c] = (rp[row] - rm[row]) / (2.0 * h);
        }
    };
    const int lm_max = std::min(60, options.max_iterations);
    for (int iter = 0; iter < lm_max && !converged; ++iter) {
        ++iterations;
        compute_jacobian();
        std::vector<double> jtj(n_free * n_free, 0.0), jtr(n_free, 0.0);
        for (std::size_t row = 0; row < m; ++row) {
            for (int a = 0; a < n_free; ++a) {
                jtr[a] += jac[row * n_free + a] * r[row];
                for (int b = a; b < n_free; ++b)
                    jtj[a * n_free + b] += jac[row * n_free + a] * jac[row * n_free + b];
            }
        }
        for (int a = 0; a < n_free; ++a)
            for (int b = 0; b < a; ++b) jtj[a * n_free + b] = jtj[b * n_free + a];
        bool accepted = false;
        double rel = std::numeric_limits<double>::infinity();
        for (int attempt = 0; attempt < 12 && !accepted; ++attempt) {
            std::vector<double> lhs = jtj;
            for (int a = 0; a < n_free; ++a)
                lhs[a * n_free + a] += lambda * std::max(jtj[a * n_free + a], 1e-12);
            std::vector<double> delta(n_free);
            for (int a = 0; a < n_free; ++a) delta[a] = -jtr[a];
            if (!detail::solve_linear(lhs, delta, n_free)) {
                lambda *= 10.0;
                continue;
            }
            std::vector<double> xt = x;
            rel = 0.0;
            for (int a = 0; a < n_free; ++a) {
                xt[a] = std::clamp(x[a] + delta[a], lo[free_idx[a]], hi[free_idx[a]]);
                rel = std::max(rel, std::fabs(xt[a] - x[a]) / std::max(std::fabs(x[a]), 1e-12));
            }
            std::vector<double> rt = ws.residuals(assemble(xt));
            double obj_t = 0.0;
            for (double v : rt) obj_t += v * v;
            if (obj_t <= obj) {
                x = xt;
                r = rt;
                obj = obj_t;
                lambda = std::max(lambda * 0.3, 1e-12);
                accepted = true;
            } else {
                lambda *= 10.0;
            }
        }
        // no acceptable descent step means the point is numerically
        // stationary; a tiny accepted step is the rel-change criterion
        if (!accepted || rel < options.rel_tol) converged = true;
    }

    result.params = assemble(x);
    full = result.params.to_array();
    result.objective = obj;
    result.iterations = iterations;
    result.converged = converged;
    result.residual_rms = std::sqrt(obj / static_cast<double>(m));
    for (int i = 0; i < 4; ++i) {
        double span = hi[i] - lo[i];
        result.parameter_bounds_hit[i] =
            !options.fixed[i] &&
            (std::fabs(full[i] - lo[i]) < 1e-9 * span || std::fabs(full[i] - hi[i]) < 1e-9 * span);
    }

    // finite-difference gradient of the objective at the reported optimum,
    // with the scale-invariant reference 2 ||J||_F ||r||
    compute_jacobian();
    double jf = 0.0, rn = 0.0;
    for (double v : jac) jf += v * v;
    for (double v : r) rn += v * v;
    result.gradient_scale = std::max(1.0, 2.0 * std::sqrt(jf) * std::sqrt(rn));
    double gnorm = 0.0;
    for (int c = 0; c < n_free; ++c) {
        // finer step than the Jacobian's: the check should not be limited by
        // the curvature term of the central difference
        double h = std::max(1e-6 * std::fabs(x[c]), 1e-9);
        std::vector<double> xp = x, xm = x;
        xp[c] += h;
        xm[c] -= h;
        double gp = ws.objective(assemble(xp));
        double gm = ws.objective(assemble(xm));
        double g = (gp - gm) / (2.0 * h);
        gnorm += g * g;
    }
    result.gradient_norm = std::sqrt(gnorm);
    return result;
}

// 1-D slice of the weighted objective through the optimum, for
// identifiability inspection. param_index: 0 <N>, 1 L, 2 mu, 3 sigma.
inline std::vector<double> profile_objective(const G2Data& data, const BeamParameters& beam,
                                             double gamma, const FitParameters& optimum,
                                             int param_index, const std::vector<double>& grid,
                                             const FitOptions& options = {}) {
    if (param_index < 0 || param_index > 3) throw validation_error("profile_objective: bad index");
    G2TheoryModel model(beam, gamma);
    detail::FitWorkspace ws;
    ws.data = &data;
    ws.model = &model;
    for (std::size_t k = 0; k < data.tau.size(); ++k) {
        if (data.tau[k] < options.tau_min_s) continue;
        if (data.counts[k] < options.min_counts) continue;
        if (data.g2[k] <= 0.0) continue;
        ws.bins.push_back(k);
        ws.sigma.push_back(data.g2[k] / std::sqrt(data.counts[k]));
    }
    std::vector<double> out;
    out.reserve(grid.size());
    for (double value : grid) {
        std::array<double, 4> p = optimum.to_array();
        p[param_index] = param_index == 1 ? value * 1e6 : value;
        out.push_back(ws.objective(FitParameters::from_array(p)));
    }
    return out;
}

}  // namespace beamcorr

#endif
