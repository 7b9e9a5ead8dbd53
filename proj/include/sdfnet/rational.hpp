#pragma once

#include <boost/rational.hpp>
#include <cstdint>
#include <string>

namespace sdfnet {

// Exact rate arithmetic. Rank/consistency checks must not see float noise.
using Rat = boost::rational<std::int64_t>;

inline Rat rat_abs(const Rat& r) { return r < Rat(0) ? -r : r; }

inline std::int64_t rat_floor(const Rat& r) {
    std::int64_t q = r.numerator() / r.denominator();
    if (r.numerator() % r.denominator() != 0 && r.numerator() < 0) --q;
    return q;
}

inline std::int64_t rat_ceil(const Rat& r) {
    std::int64_t q = r.numerator() / r.denominator();
    if (r.numerator() % r.denominator() != 0 && r.numerator() > 0) ++q;
    return q;
}

inline double rat_double(const Rat& r) {
    return static_cast<double>(r.numerator()) / static_cast<double>(r.denominator());
}

/// Render as "p" or "p/q" for CSV dumps.
inline std::string rat_str(const Rat& r) {
    if (r.denominator() == 1) return std::to_string(r.numerator());
    return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

}  // namespace sdfnet
