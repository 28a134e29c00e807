// peaks.hpp — local-maximum extraction on sampled 1-D traces: prominence,
// sub-grid position refinement, and half-power linewidths. Used to seed fits
// and to read branch positions off simulated maps.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "magnonics/spectrum.hpp" // detail::parabola_vertex

namespace magnonics {

/// One detected local maximum of a sampled trace.
struct Peak {
    std::size_t index = 0;    // sample index of the discrete maximum
    double position = 0.0;    // parabola-refined abscissa
    double height = 0.0;      // parabola-refined ordinate
    double prominence = 0.0;  // height above the higher flanking saddle
};

/// Local maxima of y(x) with prominence of at least min_prominence, in
/// ascending x order. Plateau maxima report their first sample.
inline std::vector<Peak> find_peaks(std::span<const double> x, std::span<const double> y, double min_prominence) {
    const std::size_t n = y.size();
    std::vector<Peak> peaks;
    if (n < 3) return peaks;

    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (!(y[i] > y[i - 1])) continue;
        // walk over a flat top
        std::size_t j = i;
        while (j + 1 < n && y[j + 1] == y[i]) ++j;
        if (j + 1 >= n || !(y[j + 1] < y[i])) continue;

        // prominence: lowest point toward the nearest higher ground on each side
        double left_min = y[i];
        for (std::size_t k = i; k-- > 0;) {
            if (y[k] > y[i]) break;
            left_min = std::min(left_min, y[k]);
        }
        double right_min = y[i];
        for (std::size_t k = j + 1; k < n; ++k) {
            if (y[k] > y[i]) break;
            right_min = std::min(right_min, y[k]);
        }
        const double prominence = y[i] - std::max(left_min, right_min);
        if (prominence < min_prominence) continue;

        Peak p;
        p.index = i;
        p.prominence = prominence;
        if (i > 0 && i + 1 < n && y[i - 1] < y[i] && y[i + 1] < y[i]) {
            const auto [px, py] =
                detail::parabola_vertex(x[i - 1], -y[i - 1], x[i], -y[i], x[i + 1], -y[i + 1]);
            p.position = px;
            p.height = -py;
        } else {
            p.position = x[i];
            p.height = y[i];
        }
        peaks.push_back(p);
    }
    return peaks;
}

/// The n highest peaks (by height), returned in ascending position order.
inline std::vector<Peak> highest_peaks(std::vector<Peak> peaks, std::size_t n) {
    std::sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) { return a.height > b.height; });
    if (peaks.size() > n) peaks.resize(n);
    std::sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) { return a.position < b.position; });
    return peaks;
}

/// Full width of a peak at `drop_db` below its sample height, by linear
/// interpolation of the crossings. Returns 0 when a crossing is missing on
/// either side (peak cut by the window or blended into a neighbour).
inline double full_width_at_drop(std::span<const double> x, std::span<const double> y, const Peak& peak,
                                 double drop_db = 3.0102999566398120) {
    const double target = y[peak.index] - drop_db;
    const std::size_t n = y.size();

    double left = 0.0, right = 0.0;
    bool have_left = false, have_right = false;
    for (std::size_t k = peak.index; k-- > 0;) {
        if (y[k] > y[peak.index]) break; // ran into higher ground
        if (y[k] <= target) {
            const double t = (target - y[k]) / (y[k + 1] - y[k]);
            left = x[k] + t * (x[k + 1] - x[k]);
            have_left = true;
            break;
        }
    }
    for (std::size_t k = peak.index + 1; k < n; ++k) {
        if (y[k] > y[peak.index]) break;
        if (y[k] <= target) {
            const double t = (y[k - 1] - target) / (y[k - 1] - y[k]);
            right = x[k - 1] + t * (x[k] - x[k - 1]);
            have_right = true;
            break;
        }
    }
    if (!have_left || !have_right) return 0.0;
    return right - left;
}

} // namespace magnonics
