#ifndef BEAMCORR_CORRELATOR_HPP
#define BEAMCORR_CORRELATOR_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "beamcorr/common.hpp"
#include "beamcorr/time_tags.hpp"

namespace beamcorr {

namespace detail {
inline std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    std::int64_t r = a % b;
    return (r != 0 && ((r < 0) != (b < 0))) ? q - 1 : q;
}
}  // namespace detail

// Pair-coincidence histogram over delay tau = t_b - t_a. Bins are half-open
// [k*bw, (k+1)*bw) so tau = 0 always falls in the bin starting at zero. The
// covered range is [tau_min, tau_min + n*bw) with tau_min a multiple of bw.
struct CoincidenceHistogram {
    std::int64_t bin_width_ps = 0;
    std::int64_t tau_min_ps = 0;
    std::vector<std::uint64_t> counts;
    std::uint64_t total_a = 0;
    std::uint64_t total_b = 0;
    std::int64_t duration_ps = 0;
    std::int64_t resolution_ps = 1;
    std::vector<double> g2;  // filled by normalize_g2

    std::size_t n_bins() const { return counts.size(); }
    std::int64_t tau_max_ps() const {
        return tau_min_ps + static_cast<std::int64_t>(counts.size()) * bin_width_ps;
    }
    double bin_width_s() const { return ps_to_seconds(bin_width_ps); }
    double duration_s() const { return ps_to_seconds(duration_ps); }
    double bin_center_s(std::size_t k) const {
        return ps_to_seconds(tau_min_ps + static_cast<std::int64_t>(k) * bin_width_ps) +
               0.5 * bin_width_s();
    }
    double bin_lo_s(std::size_t k) const {
        return ps_to_seconds(tau_min_ps + static_cast<std::int64_t>(k) * bin_width_ps);
    }
    double rate_a_hz() const { return static_cast<double>(total_a) / duration_s(); }
    double rate_b_hz() const { return static_cast<double>(total_b) / duration_s(); }
    bool normalized() const { return !g2.empty(); }
};

namespace detail {

struct BinRange {
    std::int64_t bin_width_ps;
    std::int64_t k_min;  // first bin index (global floor(tau/bw) indexing)
    std::int64_t k_end;  // one past last
    std::int64_t tau_lo() const { return k_min * bin_width_ps; }
    std::int64_t tau_hi() const { return k_end * bin_width_ps; }
    std::size_t n() const { return static_cast<std::size_t>(k_end - k_min); }
};

inline BinRange make_bin_range(std::int64_t bin_width_ps, std::int64_t tau_min_ps,
                               std::int64_t tau_max_ps) {
    if (bin_width_ps <= 0) throw validation_error("bin width must be > 0");
    if (tau_max_ps <= tau_min_ps) throw validation_error("tau range is empty");
    BinRange r;
    r.bin_width_ps = bin_width_ps;
    r.k_min = floor_div(tau_min_ps, bin_width_ps);
    r.k_end = floor_div(tau_max_ps - 1, bin_width_ps) + 1;
    return r;
}

inline void check_pair(const TimeTagStream& a, const TimeTagStream& b) {
    if (a.resolution_ps != b.resolution_ps)
        throw validation_error("cross_correlate: streams have mismatched resolution");
}

inline std::int64_t common_duration(const TimeTagStream& a, const TimeTagStream& b) {
    return a.duration_ps > b.duration_ps ? a.duration_ps : b.duration_ps;
}

// Two-pointer sweep over the a-index range [i_lo, i_hi); counts land in hist.
inline void sweep_range(const std::vector<std::int64_t>& ta, const std::vector<std::int64_t>& tb,
                        const BinRange& range, bool exclude_self, std::size_t i_lo,
                        std::size_t i_hi, std::vector<std::uint64_t>& hist) {
    const std::int64_t lo_off = range.tau_lo();
    const std::int64_t hi_off = range.tau_hi();
    std::size_t j_lo = 0, j_hi = 0;
    const std::size_t nb = tb.size();
    for (std::size_t i = i_lo; i < i_hi; ++i) {
        const std::int64_t t = ta[i];
        while (j_lo < nb && tb[j_lo] < t + lo_off) ++j_lo;
        if (j_hi < j_lo) j_hi = j_lo;
        while (j_hi < nb && tb[j_hi] < t + hi_off) ++j_hi;
        for (std::size_t j = j_lo; j < j_hi; ++j) {
            if (exclude_self && j == i) continue;
            std::int64_t k = floor_div(tb[j] - t, range.bin_width_ps) - range.k_min;
            hist[static_cast<std::size_t>(k)]++;
        }
    }
}

}  // namespace detail

// Streaming cross-correlator: O(n + m + pairs) sweep, parallelized by chunking
// the a-tags; integer bin counts merge by addition so the result is identical
// for any chunk count. Set exclude_self_pairs only when a and b are the same
// physical channel (the same tag list), to drop each tag's pairing with itself.
inline CoincidenceHistogram cross_correlate(const TimeTagStream& a, const TimeTagStream& b,
                                            std::int64_t bin_width_ps, std::int64_t tau_min_ps,
                                            std::int64_t tau_max_ps,
                                            bool exclude_self_pairs = false,
                                            unsigned n_chunks = 0) {
    detail::check_pair(a, b);
    const detail::BinRange range = detail::make_bin_range(bin_width_ps, tau_min_ps, tau_max_ps);
    CoincidenceHistogram hist;
    hist.bin_width_ps = bin_width_ps;
    hist.tau_min_ps = range.tau_lo();
    hist.counts.assign(range.n(), 0);
    hist.total_a = a.tags.size();
    hist.total_b = b.tags.size();
    hist.duration_ps = detail::common_duration(a, b);
    hist.resolution_ps = a.resolution_ps;

    if (a.tags.empty() || b.tags.empty()) return hist;
    if (n_chunks == 0) n_chunks = thread_count();
    if (n_chunks > a.tags.size()) n_chunks = static_cast<unsigned>(a.tags.size());

    if (n_chunks <= 1) {
        detail::sweep_range(a.tags, b.tags, range, exclude_self_pairs, 0, a.tags.size(), hist.counts);
        return hist;
    }
    std::vector<std::vector<std::uint64_t>> partial(n_chunks,
                                                    std::vector<std::uint64_t>(range.n(), 0));
    const std::size_t n = a.tags.size();
    const std::size_t chunk = (n + n_chunks - 1) / n_chunks;
    parallel_for(n_chunks, [&](std::size_t c_lo, std::size_t c_hi) {
        for (std::size_t c = c_lo; c < c_hi; ++c) {
            std::size_t i_lo = c * chunk;
            std::size_t i_hi = i_lo + chunk < n ? i_lo + chunk : n;
            if (i_lo < i_hi)
                detail::sweep_range(a.tags, b.tags, range, exclude_self_pairs, i_lo, i_hi, partial[c]);
        }
    });
    for (const auto& p : partial)
        for (std::size_t k = 0; k < p.size(); ++k) hist.counts[k] += p[k];
    return hist;
}

// All-pairs oracle; definitionally correct, quadratic, size-guarded.
inline CoincidenceHistogram brute_force_coincidences(const TimeTagStream& a, const TimeTagStream& b,
                                                     std::int64_t bin_width_ps,
                                                     std::int64_t tau_min_ps,
                                                     std::int64_t tau_max_ps,
                                                     bool exclude_self_pairs = false) {
    detail::check_pair(a, b);
    if (static_cast<double>(a.tags.size()) * static_cast<double>(b.tags.size()) > 1e8)
        throw validation_error("brute_force_coincidences: |a|*|b| exceeds 1e8 guard");
    const detail::BinRange range = detail::make_bin_range(bin_width_ps, tau_min_ps, tau_max_ps);
    CoincidenceHistogram hist;
    hist.bin_width_ps = bin_width_ps;
    hist.tau_min_ps = range.tau_lo();
    hist.counts.assign(range.n(), 0);
    hist.total_a = a.tags.size();
    hist.total_b = b.tags.size();
    hist.duration_ps = detail::common_duration(a, b);
    hist.resolution_ps = a.resolution_ps;
    for (std::size_t i = 0; i < a.tags.size(); ++i) {
        for (std::size_t j = 0; j < b.tags.size(); ++j) {
            if (exclude_self_pairs && i == j) continue;
            std::int64_t tau = b.tags[j] - a.tags[i];
            if (tau < range.tau_lo() || tau >= range.tau_hi()) continue;
            hist.counts[static_cast<std::size_t>(detail::floor_div(tau, bin_width_ps) - range.k_min)]++;
        }
    }
    return hist;
}

enum class G2Norm { rates, plateau };

// Normalize counts to g2. "rates" divides by the accidental rate product over
// the whole run; "plateau" divides by the mean count in a far-delay window
// (default: the outer quarter of the covered |tau| range), which is what one
// does when the absolute rates are distorted (e.g. by dead time).
inline CoincidenceHistogram normalize_g2(CoincidenceHistogram hist, G2Norm norm = G2Norm::rates,
                                         std::int64_t plateau_from_ps = 0,
                                         std::int64_t plateau_to_ps = 0) {
    if (hist.duration_ps <= 0) throw validation_error("normalize_g2: histogram has no duration");
    if (hist.total_a == 0 || hist.total_b == 0)
        throw validation_error("normalize_g2: zero rates");
    double denom = 0.0;
    if (norm == G2Norm::rates) {
        denom = hist.rate_a_hz() * hist.rate_b_hz() * hist.bin_width_s() * hist.duration_s();
    } else {
        if (plateau_to_ps <= plateau_from_ps) {
            std::int64_t span = std::max(std::llabs(hist.tau_min_ps), std::llabs(hist.tau_max_ps()));
            plateau_from_ps = span - span / 4;
            plateau_to_ps = span;
        }
        double sum = 0.0;
        std::size_t n = 0;
        for (std::size_t k = 0; k < hist.n_bins(); ++k) {
            std::int64_t lo = hist.tau_min_ps + static_cast<std::int64_t>(k) * hist.bin_width_ps;
            std::int64_t abs_lo = std::llabs(lo + hist.bin_width_ps / 2);
            if (abs_lo >= plateau_from_ps && abs_lo < plateau_to_ps) {
                sum += static_cast<double>(hist.counts[k]);
                ++n;
            }
        }
        if (n == 0) throw validation_error("normalize_g2: empty plateau window");
        denom = sum / static_cast<double>(n);
    }
    if (denom <= 0.0) throw validation_error("normalize_g2: zero accidental level");
    hist.g2.resize(hist.n_bins());
    for (std::size_t k = 0; k < hist.n_bins(); ++k)
        hist.g2[k] = static_cast<double>(hist.counts[k]) / denom;
    return hist;
}

// Partial third-order histogram over (tau1, tau2) with channel C identified
// with channel A: triples (t_a, t_b = t_a + tau1, t_c = t_a + tau2), t_c a
// different tag than t_a. Bins whose tau2 interval intersects [-theta, theta]
// are masked when theta > 0, reflecting that a shared detector cannot fire
// twice within its dead time.
struct G3Histogram {
    std::int64_t bin_width_ps = 0;
    std::int64_t tau_min_ps = 0;
    std::size_t bins_per_axis = 0;
    std::int64_t theta_ps = 0;
    std::vector<std::uint64_t> counts;  // row-major [i1 * bins_per_axis + i2]
    std::vector<std::uint8_t> tau2_masked;
    std::uint64_t total_a = 0;
    std::uint64_t total_b = 0;
    std::int64_t duration_ps = 0;
    std::int64_t resolution_ps = 1;
    std::vector<double> g3;  // filled by normalize_g3

    double bin_width_s() const { return ps_to_seconds(bin_width_ps); }
    double duration_s() const { return ps_to_seconds(duration_ps); }
    std::uint64_t at(std::size_t i1, std::size_t i2) const {
        return counts[i1 * bins_per_axis + i2];
    }
    bool masked(std::size_t i2) const { return tau2_masked[i2] != 0; }
    double bin_center_s(std::size_t k) const {
        return ps_to_seconds(tau_min_ps + static_cast<std::int64_t>(k) * bin_width_ps) +
               0.5 * bin_width_s();
    }
};

inline G3Histogram g3_partial(const TimeTagStream& a, const TimeTagStream& b,
                              std::int64_t theta_ps, std::int64_t bin_width_ps,
                              std::int64_t tau_min_ps, std::int64_t tau_max_ps) {
    detail::check_pair(a, b);
    if (theta_ps < 0) throw validation_error("g3_partial: theta must be >= 0");
    const detail::BinRange range = detail::make_bin_range(bin_width_ps, tau_min_ps, tau_max_ps);
    G3Histogram hist;
    hist.bin_width_ps = bin_width_ps;
    hist.tau_min_ps = range.tau_lo();
    hist.bins_per_axis = range.n();
    hist.theta_ps = theta_ps;
    hist.counts.assign(range.n() * range.n(), 0);
    hist.tau2_masked.assign(range.n(), 0);
    hist.total_a = a.tags.size();
    hist.total_b = b.tags.size();
    hist.duration_ps = detail::common_duration(a, b);
    hist.resolution_ps = a.resolution_ps;
    for (std::size_t k = 0; k < range.n(); ++k) {
        std::int64_t lo = hist.tau_min_ps + static_cast<std::int64_t>(k) * bin_width_ps;
        std::int64_t hi = lo + bin_width_ps;
        if (theta_ps > 0 && lo <= theta_ps && hi > -theta_ps) hist.tau2_masked[k] = 1;
    }
    if (a.tags.empty() || b.tags.empty()) return hist;

    const std::int64_t lo_off = range.tau_lo();
    const std::int64_t hi_off = range.tau_hi();
    const auto& ta = a.tags;
    const auto& tb = b.tags;
    unsigned n_chunks = thread_count();
    if (n_chunks > ta.size()) n_chunks = static_cast<unsigned>(ta.size());
    if (n_chunks == 0) n_chunks = 1;
    std::vector<std::vector<std::uint64_t>> partial(
        n_chunks, std::vector<std::uint64_t>(hist.counts.size(), 0));
    const std::size_t n = ta.size();
    const std::size_t chunk = (n + n_chunks - 1) / n_chunks;
    parallel_for(n_chunks, [&](std::size_t c_lo, std::size_t c_hi) {
        for (std::size_t c = c_lo; c < c_hi; ++c) {
            std::size_t i_lo = c * chunk;
            std::size_t i_hi = i_lo + chunk < n ? i_lo + chunk : n;
            auto& out = partial[c];
            std::size_t jb_lo = 0, jb_hi = 0, jc_lo = 0, jc_hi = 0;
            // reposition window starts for this chunk
            for (std::size_t i = i_lo; i < i_hi; ++i) {
                const std::int64_t t = ta[i];
                while (jb_lo < tb.size() && tb[jb_lo] < t + lo_off) ++jb_lo;
                if (jb_hi < jb_lo) jb_hi = jb_lo;
                while (jb_hi < tb.size() && tb[jb_hi] < t + hi_off) ++jb_hi;
                while (jc_lo < ta.size() && ta[jc_lo] < t + lo_off) ++jc_lo;
                if (jc_hi < jc_lo) jc_hi = jc_lo;
                while (jc_hi < ta.size() && ta[jc_hi] < t + hi_off) ++jc_hi;
                if (jb_lo == jb_hi) continue;
                for (std::size_t jc = jc_lo; jc < jc_hi; ++jc) {
                    if (jc == i) continue;
                    std::size_t k2 = static_cast<std::size_t>(
                        detail::floor_div(ta[jc] - t, bin_width_ps) - range.k_min);
                    if (hist.tau2_masked[k2]) continue;
                    for (std::size_t jb = jb_lo; jb < jb_hi; ++jb) {
                        std::size_t k1 = static_cast<std::size_t>(
                            detail::floor_div(tb[jb] - t, bin_width_ps) - range.k_min);
                        out[k1 * range.n() + k2]++;
                    }
                }
            }
        }
    });
    for (const auto& p : partial)
        for (std::size_t k = 0; k < p.size(); ++k) hist.counts[k] += p[k];
    return hist;
}

// g3 = counts / (rate_a^2 * rate_b * bw^2 * T); masked cells stay zero.
inline G3Histogram normalize_g3(G3Histogram hist) {
    if (hist.duration_ps <= 0) throw validation_error("normalize_g3: histogram has no duration");
    if (hist.total_a == 0 || hist.total_b == 0) throw validation_error("normalize_g3: zero rates");
    const double ra = static_cast<double>(hist.total_a) / hist.duration_s();
    const double rb = static_cast<double>(hist.total_b) / hist.duration_s();
    const double bw = hist.bin_width_s();
    const double denom = ra * ra * rb * bw * bw * hist.duration_s();
    if (denom <= 0.0) throw validation_error("normalize_g3: zero accidental level");
    hist.g3.assign(hist.counts.size(), 0.0);
    for (std::size_t i1 = 0; i1 < hist.bins_per_axis; ++i1)
        for (std::size_t i2 = 0; i2 < hist.bins_per_axis; ++i2)
            if (!hist.masked(i2))
                hist.g3[i1 * hist.bins_per_axis + i2] =
                    static_cast<double>(hist.at(i1, i2)) / denom;
    return hist;
}

}  // namespace beamcorr

#endif
