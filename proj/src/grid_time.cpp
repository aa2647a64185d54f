#include "na1lab/grid_time.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace na1lab {

namespace {

using i128 = __int128;

i128 scaled(const GridTime& t, int to) {
    return static_cast<i128>(t.numerator()) << (to - t.resolution());
}

}  // namespace

GridTime::GridTime(std::int64_t numerator, int resolution) : m_(numerator), k_(resolution) {
    if (resolution < 0 || resolution > kMaxResolution)
        throw std::invalid_argument("GridTime: resolution out of range: " + std::to_string(resolution));
    if (numerator < 0)
        throw std::invalid_argument("GridTime: negative numerator");
}

bool GridTime::on_own_grid() const {
    return static_cast<i128>(m_) <= static_cast<i128>(k_) * (static_cast<i128>(1) << k_);
}

GridTime GridTime::reduced() const {
    std::int64_t m = m_;
    int k = k_;
    while (k > 0 && m % 2 == 0 && m != 0) {
        m /= 2;
        --k;
    }
    if (m == 0) k = 0;
    return GridTime(m, k);
}

GridTime GridTime::at_resolution(int finer) const {
    if (finer < k_) throw std::invalid_argument("GridTime::at_resolution: cannot coarsen");
    if (finer > kMaxResolution) throw std::invalid_argument("GridTime::at_resolution: resolution too large");
    const i128 m = scaled(*this, finer);
    if (m > static_cast<i128>(INT64_MAX)) throw std::overflow_error("GridTime::at_resolution: overflow");
    return GridTime(static_cast<std::int64_t>(m), finer);
}

double GridTime::to_double() const { return std::ldexp(static_cast<double>(m_), -k_); }

std::string GridTime::to_string() const {
    return std::to_string(m_) + "/2^" + std::to_string(k_);
}

bool operator==(const GridTime& a, const GridTime& b) {
    const int k = std::max(a.k_, b.k_);
    return scaled(a, k) == scaled(b, k);
}

std::strong_ordering operator<=>(const GridTime& a, const GridTime& b) {
    const int k = std::max(a.k_, b.k_);
    const i128 x = scaled(a, k);
    const i128 y = scaled(b, k);
    if (x < y) return std::strong_ordering::less;
    if (x > y) return std::strong_ordering::greater;
    return std::strong_ordering::equal;
}

std::vector<GridTime> dyadic_grid(int k) {
    if (k < 0 || k > 24) throw std::invalid_argument("dyadic_grid: resolution must be in [0, 24]");
    const std::int64_t last = static_cast<std::int64_t>(k) << k;
    std::vector<GridTime> grid;
    grid.reserve(static_cast<std::size_t>(last + 1));
    for (std::int64_t m = 0; m <= last; ++m) grid.emplace_back(m, k);
    return grid;
}

GridTime floor_to_grid(double t, int k) {
    if (!(t >= 0.0)) throw std::invalid_argument("floor_to_grid: negative or NaN time");
    const double m = std::floor(std::ldexp(t, k));
    const double last = std::ldexp(static_cast<double>(k), k);
    return GridTime(static_cast<std::int64_t>(std::min(m, last)), k);
}

}  // namespace na1lab
