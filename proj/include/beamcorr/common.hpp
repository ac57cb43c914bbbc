#ifndef BEAMCORR_COMMON_HPP
#define BEAMCORR_COMMON_HPP

#include <cstdint>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace beamcorr {

// Thrown for invalid parameters, malformed configs, broken preconditions.
// CLI maps this to exit code 2.
class validation_error : public std::runtime_error {
public:
    explicit validation_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Thrown for unreadable or inconsistent data files. CLI exit code 3.
class corruption_error : public std::runtime_error {
public:
    explicit corruption_error(const std::string& msg) : std::runtime_error(msg) {}
};

namespace constants {
inline constexpr double k_boltzmann = 1.380649e-23;   // J/K (exact, SI)
inline constexpr double rb87_mass = 1.44316060e-25;   // kg
inline constexpr double rb87_d2_wavelength = 780.241209e-9;  // m
inline constexpr double rb87_d2_gamma_mhz = 6.0666;   // natural linewidth, Gamma/2pi
inline constexpr double pi = std::numbers::pi;
}  // namespace constants

inline double mhz_to_angular(double f_mhz) { return 2.0 * constants::pi * f_mhz * 1e6; }
inline double angular_to_mhz(double w) { return w / (2.0 * constants::pi) * 1e-6; }
inline double celsius_to_kelvin(double c) { return c + 273.15; }

// Worker count for parallel sections. BEAMCORR_THREADS caps it; 0 or unset
// means hardware concurrency.
inline unsigned thread_count() {
    if (const char* env = std::getenv("BEAMCORR_THREADS")) {
        char* end = nullptr;
        long n = std::strtol(env, &end, 10);
        if (end != env && n > 0) return static_cast<unsigned>(n);
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

// Static partition of [0, n) over worker threads. Safe only for bodies that
// touch disjoint state per index; merging is the caller's job.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body) {
    unsigned workers = thread_count();
    if (n == 0) return;
    if (workers <= 1 || n == 1) {
        body(0, n);
        return;
    }
    if (workers > n) workers = static_cast<unsigned>(n);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::size_t chunk = (n + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
        std::size_t lo = static_cast<std::size_t>(w) * chunk;
        std::size_t hi = lo + chunk < n ? lo + chunk : n;
        if (lo >= hi) break;
        pool.emplace_back(body, lo, hi);
    }
    for (auto& t : pool) t.join();
}

}  // namespace beamcorr

#endif
