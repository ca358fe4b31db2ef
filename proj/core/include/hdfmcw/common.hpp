#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace hdfmcw {

using cplx = std::complex<double>;

inline constexpr double kSpeedOfLight = 299792458.0; // m/s
inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Square-wave fundamental amplitude relative to the full square wave.
inline constexpr double kSquareWaveFundamental = 2.0 / std::numbers::pi;

inline double db_to_power(double db) { return std::pow(10.0, db / 10.0); }
inline double db_to_amplitude(double db) { return std::pow(10.0, db / 20.0); }
inline double power_to_db(double p) { return 10.0 * std::log10(p); }

// --- deterministic seed derivation -----------------------------------------
// Streams for independent noise realizations are derived from a base seed and
// a stable label (radar id, antenna index, trial number).  splitmix64 is the
// usual finalizer; FNV-1a folds the label in.

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t derive_seed(std::uint64_t base, std::string_view label,
                                 std::uint64_t index = 0) {
    return splitmix64(base ^ splitmix64(fnv1a64(label) + 0x632be59bd9b4e019ULL * index));
}

} // namespace hdfmcw
