#include "scalecheck/dyadic.hpp"

namespace scalecheck {

SignedDyadicCode encode(long long k) {
    SignedDyadicCode code;
    code.negative = k < 0;
    unsigned long long m = magnitude(k);
    while (m != 0) {
        code.digits.push_back(static_cast<std::uint8_t>(m & 1u));
        m >>= 1u;
    }
    return code;
}

long long decode(const SignedDyadicCode& code) {
    unsigned long long m = 0;
    for (std::size_t i = code.digits.size(); i-- > 0;)
        m = (m << 1u) | code.digits[i];
    const auto v = static_cast<long long>(m);
    return code.negative ? -(v + 1) : v;
}

CylinderIndex cylinder(long long k, int level) {
    CylinderIndex cyl;
    cyl.level = level;
    cyl.prefix = encode(k);
    if (cyl.prefix.digits.size() > static_cast<std::size_t>(level))
        cyl.prefix.digits.resize(static_cast<std::size_t>(level));
    return cyl;
}

bool cylinder_contains(const CylinderIndex& cyl, long long k) {
    if ((k < 0) != cyl.prefix.negative) return false;
    unsigned long long m = magnitude(k);
    for (int i = 0; i < cyl.level; ++i) {
        const std::uint8_t bit =
            (static_cast<std::size_t>(i) < cyl.prefix.digits.size()) ? cyl.prefix.digits[i] : 0;
        if ((m & 1u) != bit) return false;
        m >>= 1u;
    }
    return true;
}

} // namespace scalecheck
