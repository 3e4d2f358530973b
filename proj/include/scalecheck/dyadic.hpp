#pragma once

#include <bit>
#include <cstdint>
#include <vector>

namespace scalecheck {

/// Embedding of Z into the sequence space {0,1} x {0,1}^N: a sign slot
/// followed by the dyadic digits of k (k >= 0) or of -(k+1) (k < 0),
/// least significant digit first, trailing zeros trimmed.
struct SignedDyadicCode {
    bool negative = false;            // omega_0
    std::vector<std::uint8_t> digits; // omega_1, omega_2, ... (canonical)

    bool operator==(const SignedDyadicCode&) const = default;
};

SignedDyadicCode encode(long long k);
long long decode(const SignedDyadicCode& code);

/// Magnitude of the nonnegative integer whose bits the code carries.
inline unsigned long long magnitude(long long k) {
    return static_cast<unsigned long long>(k >= 0 ? k : -(k + 1));
}

/// Largest index i >= 1 with omega_i(k) = 1; 0 for k in {0, -1}.
inline int msb_index(long long k) {
    return std::bit_width(magnitude(k));
}

/// The level-N cylinder {omega : omega_i = omega_i(k), 0 <= i <= N}.
struct CylinderIndex {
    int level = 0;
    SignedDyadicCode prefix; // truncated to omega_0 .. omega_N
};

CylinderIndex cylinder(long long k, int level);
bool cylinder_contains(const CylinderIndex& cyl, long long k);

} // namespace scalecheck
