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
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "retrolink/channel.hpp"
#include "retrolink/transceiver.hpp"

namespace retrolink
{

inline constexpr double kDegree = std::numbers::pi / 180.0;

/// Everything needed to run the two-radio experiment.
struct LinkConfig
{
    RadioConfig radio_a = RadioConfig::radio_a();
    RadioConfig radio_b = RadioConfig::radio_b();
    double distance = 10.0;                                   ///< m
    double angle_a = 42.0 * kDegree;                          ///< rad
    double angle_b = 42.0 * kDegree;                          ///< rad
    double extra_group_delay = 35e-9 - 10.0 / kSpeedOfLight;  ///< s; total bulk delay 35 ns at 10 m
    double duration = 5e-6;                                   ///< s
    double sample_rate = kDefaultSampleRate;                  ///< Hz
    std::size_t block_size = 2048;                            ///< samples
    std::uint64_t seed = 1;
    std::optional<double> path_loss_override_db;              ///< dB, replaces Friis when set
    double noise_figure_db = 3.0;

    /// Element-to-element loss quoted for the reference experiment.
    static constexpr double kReferencePathLossDb = 75.0;

    /// Throws ConfigError naming the offending field.
    void validate() const;
    [[nodiscard]] ChannelParams channel_params() const;
};

class ConfigError : public std::invalid_argument
{
  public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a simulated sample becomes NaN or infinite.
class NumericalError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

struct EyePoint
{
    double fold_time = 0.0; ///< s, in [0, 2 T_sym)
    double phase = 0.0;     ///< rad, symbol-to-symbol phase change of the combined stream
};

/// Lock detector thresholds.
struct LockCriteria
{
    double window = 200e-9;    ///< s, stability window and averaging span
    double tolerance = 0.10;   ///< relative band around the final value
    double min_growth = 4.0;   ///< final / baseline; 0 disables the growth test
    /// Level the growth test compares against; the mean of the first window when unset.
    std::optional<double> baseline;
};

struct RadioMetrics
{
    std::vector<std::vector<double>> envelope; ///< [element][1 ns sample], volts
    std::vector<double> mean_envelope;         ///< element average of `envelope`
    std::optional<double> lock_time;           ///< s
    double omni_level = 0.0;                   ///< V, expected envelope with the far beam uncorrelated
    std::vector<EyePoint> eye;                 ///< post-lock only
    double eye_opening = 0.0;                  ///< rad, worst-case gap between adjacent levels at mid-symbol
    double ber = 1.0;                          ///< post-lock bit error rate of the stream received here
    std::size_t bits_compared = 0;
    std::size_t bit_errors = 0;
    std::size_t symbols_compared = 0;
    std::optional<double> snr_gain_db;         ///< combined minus mean per-element SNR
    double power_ratio_db = 0.0;               ///< final / initial received power
};

struct LinkMetrics
{
    std::array<RadioMetrics, 2> radio;   ///< index 0 = A, 1 = B
    double envelope_step = 1e-9;         ///< s between envelope samples
    double duration = 0.0;
    double latency_a = 0.0;              ///< s, B's transmit symbol boundary to A's demodulator output
    double latency_b = 0.0;
    bool out_of_coverage = false;

    /// Both radios locked; returns the later lock time.
    [[nodiscard]] std::optional<double> link_lock_time() const;
};

/// Runs both radios and both channel directions block by block.
[[nodiscard]] LinkMetrics run_link(const LinkConfig& cfg);

/**
 * @brief Earliest time after which the trace stays within tolerance of its final value.
 *
 * `final` is the mean of the last `window`, and it must exceed min_growth
 * times the baseline (by default the mean of the first `window`). Throws
 * std::invalid_argument when the trace spans less than two windows.
 */
[[nodiscard]] std::optional<double> detect_lock(std::span<const double> trace, double step,
                                                const LockCriteria& criteria = {});

/// Thrown by measure_snr_gain when the input does not look like a locked link.
class UnlockedInput : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

/**
 * @brief Combining gain in dB from per-symbol samples.
 *
 * Inputs are mid-symbol samples of each element's data phase and of the
 * combined phase, plus the transmitted symbol-to-symbol increments
 * (reference[i] is the increment from sample i-1 to sample i; reference[0]
 * is ignored). SNR is mean reference power over residual error variance.
 */
[[nodiscard]] double measure_snr_gain(std::span<const std::vector<double>> element_samples,
                                      std::span<const double> combined_samples, std::span<const double> reference);

/// Folds the symbol-to-symbol phase change modulo two symbol periods.
/// `symbol_start` is the time of any received symbol boundary.
[[nodiscard]] std::vector<EyePoint> eye_samples(const PhaseStream& combined, double symbol_period,
                                                double symbol_start = 0.0, std::size_t decimation = 1);

/// Worst-case opening between adjacent QPSK levels using points within `half_width` of mid-symbol.
[[nodiscard]] double eye_opening(std::span<const EyePoint> eye, double symbol_period, double half_width);

// ------------------------------------------------------------------ sweeps

/// Numeric LinkConfig fields addressable by name (see config_fields()).
void set_field(LinkConfig& cfg, std::string_view name, double value);
[[nodiscard]] double get_field(const LinkConfig& cfg, std::string_view name);
/// Names accepted by set_field.
[[nodiscard]] const std::vector<std::string>& config_fields();

struct SweepAxis
{
    std::string field;
    std::vector<double> values;
};

struct SweepRow
{
    std::vector<std::pair<std::string, double>> params;
    std::uint64_t seed = 0;
    std::optional<double> lock_time; ///< both radios locked, later of the two
    double ber = 1.0;                ///< worse direction
    std::optional<double> snr_gain_db; ///< mean over radios that reported one
    std::string status = "ok";       ///< "ok" or the error message
};

enum class SweepSeeds
{
    derived, ///< point 0 uses the master seed, later points a SplitMix64 hash of (seed, index)
    shared   ///< every point uses the master seed
};

/// One run_link per point of the cartesian product of `grid`, run concurrently.
[[nodiscard]] std::vector<SweepRow> sweep(const LinkConfig& cfg, std::span<const SweepAxis> grid,
                                          SweepSeeds seeds = SweepSeeds::derived, unsigned max_threads = 0);

/// Seed for sweep point `index`.
[[nodiscard]] std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept;

} // namespace retrolink
