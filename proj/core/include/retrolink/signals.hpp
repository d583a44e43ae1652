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

#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace retrolink
{

inline constexpr double kSpeedOfLight = 299'792'458.0;        ///< m/s
inline constexpr double kBoltzmann = 1.380649e-23;            ///< J/K
inline constexpr double kReferenceTemperature = 290.0;        ///< K
inline constexpr double kDefaultSampleRate = 200e9;           ///< 5 ps step
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Raised when a filter specification cannot be met within the tap budget.
class DesignError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

/// Raised when two streams that must share a sample rate do not.
class RateMismatch : public std::invalid_argument
{
  public:
    using std::invalid_argument::invalid_argument;
};

/**
 * @brief Uniformly sampled real passband signal.
 *
 * Amplitudes are volts across a 1-ohm normalized load, so a tone of peak
 * amplitude A carries A^2/2 watts.
 */
struct Waveform
{
    std::vector<double> samples;
    double rate = kDefaultSampleRate; ///< samples per second
    double t0 = 0.0;                  ///< time of samples[0], seconds

    [[nodiscard]] std::size_t size() const noexcept { return samples.size(); }
    [[nodiscard]] double time_at(std::size_t k) const noexcept { return t0 + static_cast<double>(k) / rate; }

    /// Throws std::invalid_argument on a non-positive rate or non-finite sample.
    void validate() const;
};

/// Unwrapped phase trajectory in radians.
struct PhaseStream
{
    std::vector<double> values;
    double rate = kDefaultSampleRate;
    double t0 = 0.0;

    [[nodiscard]] std::size_t size() const noexcept { return values.size(); }
    [[nodiscard]] double time_at(std::size_t k) const noexcept { return t0 + static_cast<double>(k) / rate; }
};

/// Wraps an angle into (-pi, pi]. An input of exactly -pi maps to +pi.
[[nodiscard]] double wrap_phase(double x) noexcept;

/// Nearest-multiple-of-2pi continuation of a wrapped phase sequence.
class PhaseUnwrapper
{
  public:
    double operator()(double raw) noexcept
    {
        if (!started_) {
            started_ = true;
            last_ = raw;
            return last_;
        }
        last_ += wrap_phase(raw - last_);
        return last_;
    }
    void reset() noexcept { started_ = false; last_ = 0.0; }
    [[nodiscard]] double last() const noexcept { return last_; }

  private:
    bool started_ = false;
    double last_ = 0.0;
};

/// Unwraps a sequence in place.
void unwrap(std::span<double> phase) noexcept;

/// Peak amplitude of a tone carrying `dbm` into the 1-ohm normalized load.
[[nodiscard]] double amplitude_for_dbm(double dbm) noexcept;
[[nodiscard]] double dbm_for_amplitude(double peak) noexcept;
/// Mean-square value (watts in 1 ohm) expressed in dBm.
[[nodiscard]] double dbm_for_power(double watts) noexcept;

/// Zeroth-order Kaiser window parameter for a given attenuation in dB.
[[nodiscard]] double kaiser_beta(double atten_db) noexcept;
/// Kaiser window of odd or even length n.
[[nodiscard]] std::vector<double> kaiser_window(std::size_t n, double beta);

/**
 * @brief Linear-phase FIR with streaming state.
 *
 * process() keeps the last ntaps-1 inputs, so a long signal split into
 * arbitrary blocks produces exactly the same output as one call.
 */
class FirFilter
{
  public:
    FirFilter() = default;
    FirFilter(std::vector<double> taps, double rate);

    [[nodiscard]] std::span<const double> taps() const noexcept { return taps_; }
    [[nodiscard]] std::size_t size() const noexcept { return taps_.size(); }
    [[nodiscard]] double rate() const noexcept { return rate_; }
    /// Group delay in samples, (ntaps-1)/2.
    [[nodiscard]] double group_delay() const noexcept { return 0.5 * static_cast<double>(taps_.size() - 1); }
    [[nodiscard]] bool symmetric() const noexcept;

    /// Frequency response at `freq` Hz (DTFT of the taps).
    [[nodiscard]] std::complex<double> response(double freq) const;

    /// Causal streaming convolution; in and out may not alias.
    void process(std::span<const double> in, std::span<double> out);
    void reset();

  private:
    std::vector<double> taps_;
    double rate_ = kDefaultSampleRate;
    std::vector<double> work_; // history (ntaps-1) followed by the current block
};

/// Single-pole recursive low-pass, y += a (x - y), with -3 dB at `cutoff`.
class OnePoleLowpass
{
  public:
    OnePoleLowpass() = default;
    OnePoleLowpass(double cutoff, double rate);

    [[nodiscard]] double cutoff() const noexcept { return cutoff_; }
    [[nodiscard]] double rate() const noexcept { return rate_; }
    [[nodiscard]] double coefficient() const noexcept { return alpha_; }
    [[nodiscard]] double state() const noexcept { return state_; }
    void reset(double value = 0.0) noexcept { state_ = value; }

    double step(double x) noexcept
    {
        state_ += alpha_ * (x - state_);
        return state_;
    }
    void process(std::span<const double> in, std::span<double> out) noexcept;

  private:
    double cutoff_ = 1.0;
    double rate_ = kDefaultSampleRate;
    double alpha_ = 0.0;
    double state_ = 0.0;
};

/// Hard limit on designed filter length.
inline constexpr std::size_t kMaxFirTaps = 8191;

/**
 * @brief Kaiser-window band-pass centred on `center` with flat response over
 * center +/- bandwidth/2.
 *
 * The design targets a transition of bandwidth/2 on each side, then checks
 * the realized taps against the mask (ripple <= 0.5 dB in the passband,
 * attenuation >= stop_atten beyond 1.5 x bandwidth from center). Filter
 * length grows until the mask holds; DesignError if kMaxFirTaps is reached
 * or the band does not fit inside (0, rate/2).
 */
[[nodiscard]] FirFilter design_bandpass(double center, double bandwidth, double rate, double stop_atten_db = 40.0);

/// Kaiser-window low-pass with pass edge and stop edge in Hz.
[[nodiscard]] FirFilter design_lowpass(double pass_edge, double stop_edge, double rate, double stop_atten_db);

/// Mask figures measured from realized taps.
struct BandpassMask
{
    double passband_ripple_db = 0.0; ///< max - min gain over the passband
    double passband_peak_db = 0.0;   ///< largest |gain| deviation from 0 dB
    double stopband_atten_db = 0.0;  ///< smallest attenuation beyond 1.5 x bandwidth
};

[[nodiscard]] BandpassMask measure_bandpass_mask(const FirFilter& filter, double center, double bandwidth);

[[nodiscard]] Waveform filter_apply(FirFilter& filter, const Waveform& wave);
[[nodiscard]] Waveform filter_apply(OnePoleLowpass& filter, const Waveform& wave);

/**
 * @brief Streaming quadrature demodulator.
 *
 * Mixes against cos/sin at the reference frequency (phase referenced to
 * absolute time), removes the double-frequency product with a short FIR and
 * returns amplitude and wrapped phase. Outputs lag the input by
 * group_delay() samples.
 */
class QuadratureDemodulator
{
  public:
    QuadratureDemodulator() = default;
    QuadratureDemodulator(double f_ref, double rate);

    [[nodiscard]] double f_ref() const noexcept { return f_ref_; }
    [[nodiscard]] double group_delay() const noexcept { return lowpass_i_.group_delay(); }

    /// `t_start` is the time of in[0]. Amplitude and phase may be empty to skip them.
    void process(std::span<const double> in, double t_start, std::span<double> amplitude,
                 std::span<double> wrapped_phase);

    /// Same as process() with precomputed cos/sin of the reference at each input sample.
    void process_with_reference(std::span<const double> in, std::span<const double> ref_cos,
                                std::span<const double> ref_sin, std::span<double> amplitude,
                                std::span<double> wrapped_phase);
    void reset();

  private:
    double f_ref_ = 0.0;
    double rate_ = kDefaultSampleRate;
    FirFilter lowpass_i_;
    FirFilter lowpass_q_;
    std::vector<double> i_, q_, i_f_, q_f_, cos_, sin_;
};

/// Carrier phase 2*pi*f*t reduced modulo 2*pi, accurate for large f*t.
[[nodiscard]] double carrier_phase(double freq, double t) noexcept;

/**
 * @brief Recovers phi(t) such that wave ~ A cos(2 pi f_ref t + phi(t)).
 *
 * The output is time-aligned with the input (the demodulator's group delay
 * is removed) and unwrapped. The first and last few samples carry the
 * filter's edge transient.
 */
[[nodiscard]] PhaseStream extract_phase(const Waveform& wave, double f_ref);

/// sample k = amplitude * cos(2 pi f_carrier t_k + phase_k).
[[nodiscard]] Waveform synthesize_pm(double f_carrier, const PhaseStream& phase, double amplitude);

/// Low-level form of synthesize_pm that writes into an existing buffer.
void synthesize_pm_into(double f_carrier, double rate, double t_start, std::span<const double> phase,
                        double amplitude, std::span<double> out);

} // namespace retrolink
