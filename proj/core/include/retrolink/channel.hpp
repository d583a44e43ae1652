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

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "retrolink/array.hpp"
#include "retrolink/signals.hpp"

namespace retrolink
{

/// Free-space element-to-element gain in dB: g_tx + g_rx - 20 log10(4 pi d f / c).
[[nodiscard]] double friis_gain(double distance, double freq, double g_tx_dbi, double g_rx_dbi);

/// One propagation direction: gain and delay for every (tx element, rx element) pair.
struct ChannelLink
{
    std::size_t n_tx = 0;
    std::size_t n_rx = 0;
    double freq = 0.0;         ///< carrier used for the Friis term
    std::vector<double> gain;  ///< linear amplitude, row-major [tx][rx]
    std::vector<double> delay; ///< seconds, row-major [tx][rx]

    [[nodiscard]] double gain_at(std::size_t tx, std::size_t rx) const { return gain[tx * n_rx + rx]; }
    [[nodiscard]] double delay_at(std::size_t tx, std::size_t rx) const { return delay[tx * n_rx + rx]; }
    [[nodiscard]] double min_delay() const;
    [[nodiscard]] double max_delay() const;
    [[nodiscard]] double mean_delay() const;
    /// The reverse-direction view of the same pairs.
    [[nodiscard]] ChannelLink transposed() const;
};

struct ChannelParams
{
    double distance = 10.0;              ///< m, between array centres
    double angle_a = 0.0;                ///< rad, where A sees B
    double angle_b = 0.0;                ///< rad, where B sees A
    double extra_group_delay = 0.0;      ///< s, added to every pair
    double freq_a_to_b = 62e9;
    double freq_b_to_a = 58e9;
    ElementPattern pattern_a{};
    ElementPattern pattern_b{};
    std::optional<double> path_loss_override_db; ///< replaces the Friis figure (antenna gains included)
};

enum class Direction
{
    a_to_b,
    b_to_a
};

/// Immutable two-radio channel.
struct ChannelMatrix
{
    ChannelLink forward; ///< A transmits, B receives
    ChannelLink reverse; ///< B transmits, A receives
    ArrayPlacement placement_a;
    ArrayPlacement placement_b;
    ChannelParams params;
    bool out_of_coverage = false; ///< set when an angle falls outside an element cone; gains are then zero

    [[nodiscard]] const ChannelLink& link(Direction d) const noexcept { return d == Direction::a_to_b ? forward : reverse; }
};

/// A at the origin facing +y; B placed and rotated so each sees the other at its configured angle.
[[nodiscard]] std::pair<ArrayPlacement, ArrayPlacement> place_radios(double distance, double angle_a, double angle_b);

[[nodiscard]] ChannelMatrix build_channel(const ArrayGeometry& geom_a, const ArrayGeometry& geom_b,
                                          const ChannelParams& params);

/// Length of the band-limited interpolator.
inline constexpr std::size_t kInterpTaps = 32;
/// Samples of look-ahead of the interpolator around the delayed instant.
inline constexpr std::size_t kInterpLead = kInterpTaps / 2 - 1;

/**
 * @brief Integer shift plus Kaiser-windowed sinc taps for one delay.
 *
 * y[k] = sum_m taps[m] x[k - shift - m], where shift = floor(delay) - kInterpLead.
 * A delay that is an exact multiple of the sample period yields a single
 * unit tap.
 */
struct DelayTaps
{
    std::int64_t whole = 0;    ///< floor(delay * rate)
    double fraction = 0.0;     ///< remainder in [0, 1)
    std::array<double, kInterpTaps> taps{};

    static DelayTaps design(double delay, double rate);
    [[nodiscard]] std::int64_t shift() const noexcept { return whole - static_cast<std::int64_t>(kInterpLead); }
};

/// Delays a finite waveform; samples before t0 are taken as zero. Same length and t0 as the input.
[[nodiscard]] Waveform fractional_delay(const Waveform& wave, double delay);

/**
 * @brief Streaming multi-element propagation through one ChannelLink.
 *
 * push() appends transmitted samples; pull() produces the next received
 * samples. Transmit history before the first push is silence. pull() throws
 * std::logic_error if it would need transmit samples that have not been
 * pushed yet, which is how the engine's causality is enforced.
 */
class Propagator
{
  public:
    Propagator(const ChannelLink& link, double rate);

    void push(std::span<const std::vector<double>> tx_block);
    void pull(std::size_t count, std::span<std::vector<double>> rx_block);

    [[nodiscard]] std::int64_t pushed() const noexcept { return tx_end_; }
    [[nodiscard]] std::int64_t pulled() const noexcept { return rx_pos_; }
    /// Latest transmit sample index (exclusive) needed to produce rx samples below `rx_end`.
    [[nodiscard]] std::int64_t tx_needed(std::int64_t rx_end) const noexcept { return rx_end - min_shift_; }

  private:
    struct Pair
    {
        std::size_t tx;
        std::size_t rx;
        double gain;
        DelayTaps taps;
    };

    std::size_t n_tx_;
    std::size_t n_rx_;
    std::vector<Pair> pairs_;
    std::int64_t min_shift_ = 0;
    std::int64_t max_reach_ = 0; // history depth needed behind rx_pos_
    std::int64_t base_ = 0;      // absolute index of history_[*][0]
    std::int64_t tx_end_ = 0;
    std::int64_t rx_pos_ = 0;
    std::vector<std::vector<double>> history_;
};

/// Propagates complete per-element waveforms in one direction.
[[nodiscard]] std::vector<Waveform> propagate(std::span<const Waveform> tx, const ChannelMatrix& chan, Direction dir);

/// Receiver thermal noise referenced to the antenna port.
struct NoiseSpec
{
    double noise_figure_db = 3.0;
    double reference_bandwidth = 1.5e9;          ///< Hz
    double temperature = kReferenceTemperature; ///< fixed at 290 K

    /// One-sided noise density k T F in W/Hz.
    [[nodiscard]] double density() const noexcept;
    /// k T B F in watts.
    [[nodiscard]] double in_band_power() const noexcept { return density() * reference_bandwidth; }
    /// Per-sample variance of white noise at `rate` with this density.
    [[nodiscard]] double sample_variance(double rate) const noexcept { return 0.5 * density() * rate; }
};

/// Seeded white Gaussian source with the density of a NoiseSpec.
class NoiseSource
{
  public:
    NoiseSource(const NoiseSpec& spec, double rate, std::uint64_t seed);
    void add_to(std::span<double> samples);

  private:
    std::mt19937_64 rng_;
    std::normal_distribution<double> dist_;
};

[[nodiscard]] Waveform add_noise(const Waveform& wave, const NoiseSpec& spec, std::uint64_t seed);

} // namespace retrolink
