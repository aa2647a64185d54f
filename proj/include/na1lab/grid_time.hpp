#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <vector>

namespace na1lab {

/// A dyadic time m / 2^k. Comparisons are exact rational comparisons.
///
/// Membership in the trading grid of resolution k requires 0 <= m <= k * 2^k;
/// `on_own_grid()` checks that. Values with a different resolution can still
/// denote the same time (1/2 == 2/4) and compare equal.
class GridTime {
public:
    static constexpr int kMaxResolution = 56;

    constexpr GridTime() = default;
    GridTime(std::int64_t numerator, int resolution);

    std::int64_t numerator() const { return m_; }
    int resolution() const { return k_; }

    /// true iff 0 <= m <= k 2^k.
    bool on_own_grid() const;
    /// Smallest resolution at which this time is representable (m odd or m == 0).
    GridTime reduced() const;
    /// Same time at a finer resolution; throws if `finer` < resolution().
    GridTime at_resolution(int finer) const;

    double to_double() const;
    std::string to_string() const;

    friend bool operator==(const GridTime& a, const GridTime& b);
    friend std::strong_ordering operator<=>(const GridTime& a, const GridTime& b);

private:
    std::int64_t m_ = 0;
    int k_ = 0;
};

/// The grid {m / 2^k : 0 <= m <= k 2^k} in increasing order.
std::vector<GridTime> dyadic_grid(int k);

/// Largest time of the resolution-k grid that does not exceed `t` (t >= 0).
GridTime floor_to_grid(double t, int k);

}  // namespace na1lab
