// SPDX-License-Identifier: Apache-2.0
//
// retrolink: link-level simulator for retro-directive millimeter-wave radios
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include "retrolink/array.hpp"

#include <algorithm>
#include <limits>
#include <string>

namespace retrolink
{

ArrayGeometry ArrayGeometry::uniform_linear(std::size_t n, double spacing)
{
    if (n == 0) {
        throw std::invalid_argument("array needs at least one element");
    }
    if (!(spacing > 0.0)) {
        throw std::invalid_argument("element spacing must be positive");
    }
    ArrayGeometry g;
    g.spacing = spacing;
    g.offsets.resize(n);
    const double mid = 0.5 * static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        g.offsets[i] = (static_cast<double>(i) - mid) * spacing;
    }
    return g;
}

double ElementPattern::gain_db(double angle) const noexcept
{
    return covers(angle) ? gain_dbi : -std::numeric_limits<double>::infinity();
}

PhaseVector arrival_phases(const ArrayGeometry& geom, double angle, double freq)
{
    const double beta = kTwoPi * freq / kSpeedOfLight;
    const double s = std::sin(angle);
    PhaseVector out(geom.size());
    for (std::size_t i = 0; i < geom.size(); ++i) {
        out[i] = -beta * (geom.offsets[i] - geom.offsets[0]) * s;
    }
    return out;
}

std::complex<double> array_factor(std::span<const double> phases, const ArrayGeometry& geom, double angle, double freq)
{
    if (phases.size() != geom.size()) {
        throw std::invalid_argument("phase vector length does not match the array");
    }
    const double beta = kTwoPi * freq / kSpeedOfLight;
    const double s = std::sin(angle);
    std::complex<double> af{0.0, 0.0};
    for (std::size_t i = 0; i < geom.size(); ++i) {
        af += std::polar(1.0, phases[i] - beta * (geom.offsets[i] - geom.offsets[0]) * s);
    }
    return af;
}

std::size_t van_atta_map(std::size_t i, std::size_t n)
{
    if (i < 1 || i > n) {
        throw std::out_of_range("element index " + std::to_string(i) + " outside 1.." + std::to_string(n));
    }
    return n + 1 - i;
}

double heterodyne_conjugate(double phase, Sideband mode) noexcept
{
    return mode == Sideband::lower ? -phase : phase;
}

PhaseVector heterodyne_retransmit(std::span<const double> received, Sideband mode, ElementOrder order)
{
    const std::size_t n = received.size();
    PhaseVector out(n);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t src = order == ElementOrder::same ? k : n - 1 - k;
        out[k] = heterodyne_conjugate(received[src], mode);
    }
    return out;
}

double squint_angle(double theta, double f_rx, double f_tx)
{
    const double arg = (f_rx / f_tx) * std::sin(theta);
    if (std::abs(arg) > 1.0) {
        throw NoMainlobe("no main lobe: (f_rx/f_tx) sin(theta) = " + std::to_string(arg));
    }
    return std::asin(arg);
}

double van_atta_path_check(const ArrayGeometry& geom, double angle, double freq)
{
    // Plane wave: only the excess path x_i sin(theta) differs between elements.
    const double beta = kTwoPi * freq / kSpeedOfLight;
    const std::size_t n = geom.size();
    const double s = std::sin(angle);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t i = 1; i <= n; ++i) {
        const std::size_t j = van_atta_map(i, n);
        const double total = (geom.offsets[i - 1] + geom.offsets[j - 1]) * s;
        lo = std::min(lo, total);
        hi = std::max(hi, total);
    }
    return beta * (hi - lo);
}

double van_atta_path_check(const ArrayGeometry& geom, Vec2 source, double freq)
{
    const double beta = kTwoPi * freq / kSpeedOfLight;
    const std::size_t n = geom.size();
    const ArrayPlacement frame{};
    std::vector<double> path(n);
    for (std::size_t i = 0; i < n; ++i) {
        path[i] = (source - frame.element_position(geom, i)).norm();
    }
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t i = 1; i <= n; ++i) {
        // Subtract the first path sum before scaling so the 10 m bulk cancels exactly.
        const double total = (path[i - 1] - path[0]) + (path[van_atta_map(i, n) - 1] - path[n - 1]);
        lo = std::min(lo, total);
        hi = std::max(hi, total);
    }
    return beta * (hi - lo);
}

std::vector<PatternPoint> pattern_sweep(std::span<const double> phases, const ArrayGeometry& geom, double freq,
                                        double from, double to, std::size_t points)
{
    if (points < 2) {
        throw std::invalid_argument("pattern sweep needs at least two points");
    }
    std::vector<PatternPoint> out(points);
    for (std::size_t k = 0; k < points; ++k) {
        const double a = from + (to - from) * static_cast<double>(k) / static_cast<double>(points - 1);
        const double p = std::norm(array_factor(phases, geom, a, freq));
        out[k] = {a, 10.0 * std::log10(std::max(p, 1e-30))};
    }
    return out;
}

PatternPoint pattern_peak(std::span<const PatternPoint> pattern)
{
    if (pattern.empty()) {
        throw std::invalid_argument("empty pattern");
    }
    return *std::max_element(pattern.begin(), pattern.end(),
                             [](const PatternPoint& a, const PatternPoint& b) { return a.power_db < b.power_db; });
}

} // namespace retrolink
