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

#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "retrolink/signals.hpp"

namespace retrolink
{

/// Half wavelength at 60 GHz, the default element spacing for both bands.
inline constexpr double kDefaultSpacing = kSpeedOfLight / 60e9 / 2.0;

struct Vec2
{
    double x = 0.0;
    double y = 0.0;

    friend Vec2 operator+(Vec2 a, Vec2 b) noexcept { return {a.x + b.x, a.y + b.y}; }
    friend Vec2 operator-(Vec2 a, Vec2 b) noexcept { return {a.x - b.x, a.y - b.y}; }
    friend Vec2 operator*(double s, Vec2 a) noexcept { return {s * a.x, s * a.y}; }
    friend Vec2 operator-(Vec2 a) noexcept { return {-a.x, -a.y}; }
    [[nodiscard]] double dot(Vec2 o) const noexcept { return x * o.x + y * o.y; }
    [[nodiscard]] double norm() const noexcept { return std::hypot(x, y); }
    /// Counter-clockwise rotation.
    [[nodiscard]] Vec2 rotated(double angle) const noexcept
    {
        const double c = std::cos(angle);
        const double s = std::sin(angle);
        return {c * x - s * y, s * x + c * y};
    }
};

/**
 * @brief Uniform linear array.
 *
 * offsets[i] is the along-axis coordinate of element i+1, centred on the
 * array midpoint so element 1 sits at the most negative offset.
 */
struct ArrayGeometry
{
    double spacing = kDefaultSpacing;
    std::vector<double> offsets;

    static ArrayGeometry uniform_linear(std::size_t n, double spacing = kDefaultSpacing);

    [[nodiscard]] std::size_t size() const noexcept { return offsets.size(); }
    [[nodiscard]] double aperture() const noexcept { return offsets.empty() ? 0.0 : offsets.back() - offsets.front(); }
};

/**
 * @brief Where an array sits in the plane.
 *
 * The element axis is the boresight rotated by -90 degrees. A direction at
 * angle theta from boresight is boresight rotated counter-clockwise by
 * theta, so for positive theta the path from a distant source grows with
 * element index.
 */
struct ArrayPlacement
{
    Vec2 center{};
    Vec2 boresight{0.0, 1.0};

    [[nodiscard]] Vec2 axis() const noexcept { return boresight.rotated(-0.5 * std::numbers::pi); }
    [[nodiscard]] Vec2 direction(double angle) const noexcept { return boresight.rotated(angle); }
    [[nodiscard]] Vec2 element_position(const ArrayGeometry& geom, std::size_t i) const noexcept
    {
        return center + geom.offsets[i] * axis();
    }
    /// Angle of the unit vector `v` measured from boresight, in (-pi, pi].
    [[nodiscard]] double angle_of(Vec2 v) const noexcept
    {
        return std::atan2(-v.dot(axis()), v.dot(boresight));
    }
};

/// Fixed-gain element radiating only inside a cone around boresight.
struct ElementPattern
{
    double gain_dbi = 4.0;
    double cone_half_angle = std::acos(0.2); ///< 1.6 pi sr coverage

    [[nodiscard]] bool covers(double angle) const noexcept { return std::abs(angle) <= cone_half_angle; }
    /// Gain in dBi, or -infinity outside the cone.
    [[nodiscard]] double gain_db(double angle) const noexcept;
    /// Solid angle of the coverage cone in steradians.
    [[nodiscard]] double solid_angle() const noexcept { return kTwoPi * (1.0 - std::cos(cone_half_angle)); }
};

/// Per-element phases in radians, relative to element 1.
using PhaseVector = std::vector<double>;

/// Thrown when a squinted beam has no real main-lobe direction.
class NoMainlobe : public std::domain_error
{
  public:
    using std::domain_error::domain_error;
};

/// Phase of each element relative to element 1 for a plane wave from `angle`.
[[nodiscard]] PhaseVector arrival_phases(const ArrayGeometry& geom, double angle, double freq);

/// Far-field sum of exp(j (phases_i + arrival_i(angle))); |AF| <= n.
[[nodiscard]] std::complex<double> array_factor(std::span<const double> phases, const ArrayGeometry& geom, double angle,
                                                double freq);

/// Van Atta partner of element i (1-based): n + 1 - i.
[[nodiscard]] std::size_t van_atta_map(std::size_t i, std::size_t n);

enum class Sideband
{
    lower,
    upper
};

enum class ElementOrder
{
    same,
    reversed
};

/// Phase of the retransmitted mixing product. Lower sideband negates the phase.
[[nodiscard]] double heterodyne_conjugate(double phase, Sideband mode) noexcept;

/// Transmit phases when element k radiates the mixing product of receive element order(k).
[[nodiscard]] PhaseVector heterodyne_retransmit(std::span<const double> received, Sideband mode, ElementOrder order);

/// Peak direction when phases conjugated at f_rx are radiated at f_tx.
[[nodiscard]] double squint_angle(double theta, double f_rx, double f_tx);

/// Spread of round-trip Van Atta path phases for a plane wave from `angle`.
[[nodiscard]] double van_atta_path_check(const ArrayGeometry& geom, double angle, double freq);

/// Same, for a point source at `source` in the array's own frame (array centred at the origin, boresight +y).
[[nodiscard]] double van_atta_path_check(const ArrayGeometry& geom, Vec2 source, double freq);

struct PatternPoint
{
    double angle = 0.0;    ///< radians
    double power_db = 0.0; ///< 10 log10 |AF|^2
};

/// |AF|^2 on a uniform angle grid from `from` to `to` inclusive.
[[nodiscard]] std::vector<PatternPoint> pattern_sweep(std::span<const double> phases, const ArrayGeometry& geom,
                                                      double freq, double from, double to, std::size_t points);

/// Grid point with the largest power.
[[nodiscard]] PatternPoint pattern_peak(std::span<const PatternPoint> pattern);

} // namespace retrolink
