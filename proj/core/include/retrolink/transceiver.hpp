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

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "retrolink/array.hpp"
#include "retrolink/signals.hpp"

namespace retrolink
{

enum class QpskMode
{
    differential, ///< symbol phase = previous phase + Gray increment; preceded by a phase-0 reference symbol
    coherent      ///< symbol phase = Gray point, absolute
};

/// How per-element demodulated phases are unwrapped.
enum class UnwrapMode
{
    referenced,  ///< element 1 unwrapped on its own, others as element 1 plus an unwrapped difference
    independent  ///< every element unwrapped on its own
};

/// Physical and DSP parameters of one retro-directive radio.
struct RadioConfig
{
    double f_rx = 58e9;
    double f_tx = 62e9;
    std::size_t n_elements = 4;
    double element_spacing = kDefaultSpacing;
    double tx_power_dbm = 0.0; ///< per element
    ElementPattern pattern{};
    double bpf_bandwidth = 1.5e9;
    double bpf_stop_atten_db = 40.0;
    double phase_lpf_cutoff = 2e6;
    double symbol_rate = 1e9;
    int conjugation_sign = -1;
    QpskMode qpsk_mode = QpskMode::differential;
    UnwrapMode unwrap_mode = UnwrapMode::referenced;

    /// Receives at 58 GHz, transmits at 62 GHz.
    static RadioConfig radio_a();
    /// Receives at 62 GHz, transmits at 58 GHz.
    static RadioConfig radio_b();

    [[nodiscard]] ArrayGeometry geometry() const { return ArrayGeometry::uniform_linear(n_elements, element_spacing); }
    /// Throws std::invalid_argument naming the offending field.
    void validate(double sample_rate) const;
};

/// Receive-chain products for a set of elements.
struct DemodOutput
{
    std::vector<PhaseStream> phi;       ///< unwrapped demodulator phase per element
    std::vector<PhaseStream> phi_low;   ///< phasing component (one-pole low-pass of phi)
    std::vector<PhaseStream> data_high; ///< phi - phi_low
    std::vector<Waveform> amplitude;    ///< demodulated envelope per element
    PhaseStream combined_data;          ///< mean of data_high over elements
    double latency = 0.0;               ///< seconds from antenna to demodulator output
};

/// One block of receive-chain output; vectors are [element][sample].
struct ReceiveBlock
{
    std::vector<std::vector<double>> phi;
    std::vector<std::vector<double>> phi_low;
    std::vector<std::vector<double>> data_high;
    std::vector<std::vector<double>> amplitude;
    std::vector<double> combined;       ///< element mean of data_high
    std::vector<double> combined_phase; ///< element mean of phi
};

/**
 * @brief Streaming per-element receive chain.
 *
 * Band-pass at f_rx, quadrature phase demodulation, unwrapping, then the
 * one-pole phasing low-pass that splits phi into phi_low and data_high.
 */
class ReceiveChain
{
  public:
    ReceiveChain(const RadioConfig& cfg, double rate);

    /// `rx[j]` holds element j's samples starting at absolute time `t_start`.
    void process(std::span<const std::vector<double>> rx, double t_start, ReceiveBlock& out);

    /// Presets the phasing low-pass outputs, e.g. to the uncorrelated phases of
    /// a radio that has been idle with no incoming signal.
    void set_phasing_state(std::span<const double> phases);

    [[nodiscard]] std::size_t size() const noexcept { return n_; }
    /// Band-pass plus demodulator delay, seconds.
    [[nodiscard]] double latency() const noexcept { return latency_; }
    [[nodiscard]] const FirFilter& bandpass() const noexcept { return bpf_[0]; }

  private:
    std::size_t n_;
    double rate_;
    double f_rx_;
    UnwrapMode unwrap_mode_;
    double latency_ = 0.0;
    double bpf_delay_ = 0.0;
    std::vector<FirFilter> bpf_;
    std::vector<QuadratureDemodulator> demod_;
    std::vector<PhaseUnwrapper> unwrap_;
    std::vector<OnePoleLowpass> lpf_;
    std::vector<std::vector<double>> bp_, raw_;
    std::vector<double> cos_, sin_;
};

/// One-shot receive chain over complete element waveforms.
[[nodiscard]] DemodOutput receive_chain(std::span<const Waveform> rx, const RadioConfig& cfg);

/// Subtracts element 1's phase from every element at each sample.
[[nodiscard]] std::vector<PhaseStream> delta_phases(std::span<const PhaseStream> phi_low);

/// In-place form over one block, [element][sample].
void delta_phases_into(std::span<const std::vector<double>> phi_low, std::span<std::vector<double>> out);

/// psi_i = sign * dphi_i + data; output element i = A cos(2 pi f_tx t + psi_i).
[[nodiscard]] std::vector<Waveform> transmit_chain(std::span<const PhaseStream> dphi, const PhaseStream& data_phase,
                                                   const RadioConfig& cfg);

/// Block form: `out[j]` receives element j's transmit samples starting at `t_start`.
void transmit_block(std::span<const std::vector<double>> dphi, std::span<const double> data_phase, double t_start,
                    double rate, const RadioConfig& cfg, std::span<std::vector<double>> out);

// ------------------------------------------------------------------ modem

/// Fibonacci LFSR for x^23 + x^18 + 1.
class Prbs23
{
  public:
    explicit Prbs23(std::uint32_t seed = 1) noexcept;
    std::uint8_t next() noexcept;
    static constexpr std::uint32_t kPeriod = (1U << 23) - 1;

  private:
    std::uint32_t state_;
};

/// XOR whitening with PRBS-23 started from `seed`; its own inverse.
[[nodiscard]] std::vector<std::uint8_t> scramble(std::span<const std::uint8_t> bits, std::uint32_t seed);
[[nodiscard]] std::vector<std::uint8_t> descramble(std::span<const std::uint8_t> bits, std::uint32_t seed);

/// Gray point for a bit pair: 00 -> +45, 01 -> +135, 11 -> -135, 10 -> -45 degrees.
[[nodiscard]] double qpsk_point(std::uint8_t b0, std::uint8_t b1) noexcept;
/// Nearest Gray point to a phase; writes the two bits.
void qpsk_decide(double phase, std::uint8_t& b0, std::uint8_t& b1) noexcept;

/// Phase of each transmitted symbol. Differential mode prepends a reference symbol at phase 0.
[[nodiscard]] std::vector<double> qpsk_symbols(std::span<const std::uint8_t> bits, QpskMode mode);

/// Symbol phases held for one symbol period each.
[[nodiscard]] PhaseStream qpsk_map(std::span<const std::uint8_t> bits, QpskMode mode, double symbol_rate, double rate,
                                   double t0 = 0.0);

/// Where symbols sit in a received phase stream.
struct SymbolTiming
{
    double first_symbol = 0.0; ///< start time of symbol 0 (the reference symbol in differential mode)
    double period = 1e-9;
    std::size_t count = 0;     ///< symbols in the stream, including any reference symbol
};

struct DemapResult
{
    std::vector<std::uint8_t> bits;
    double rms_error = 0.0;    ///< rad, distance of decisions from the ideal points
    bool quality_ok = false;   ///< rms_error below pi/8
};

/// Slices each symbol at mid-period and decides bits.
[[nodiscard]] DemapResult qpsk_demap(const PhaseStream& phase, const SymbolTiming& timing, QpskMode mode);

} // namespace retrolink
