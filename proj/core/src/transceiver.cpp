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

#include "retrolink/transceiver.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace retrolink
{

namespace
{
    constexpr double kPi = std::numbers::pi;

    void require(bool ok, const char* field, const std::string& what)
    {
        if (!ok) {
            throw std::invalid_argument(std::string(field) + ": " + what);
        }
    }
} // namespace

// ------------------------------------------------------------- RadioConfig

RadioConfig RadioConfig::radio_a() { return RadioConfig{}; }

RadioConfig RadioConfig::radio_b()
{
    RadioConfig c;
    c.f_rx = 62e9;
    c.f_tx = 58e9;
    return c;
}

void RadioConfig::validate(double sample_rate) const
{
    const double nyq = 0.5 * sample_rate;
    require(f_rx > 0.0 && f_rx < nyq, "f_rx", "must lie in (0, sample_rate/2)");
    require(f_tx > 0.0 && f_tx < nyq, "f_tx", "must lie in (0, sample_rate/2)");
    require(f_rx != f_tx, "f_tx", "transmit and receive frequencies must differ");
    require(n_elements >= 1, "n_elements", "must be at least 1");
    require(element_spacing > 0.0, "element_spacing", "must be positive");
    require(std::isfinite(tx_power_dbm), "tx_power_dbm", "must be finite");
    require(bpf_bandwidth > 0.0, "bpf_bandwidth", "must be positive");
    require(bpf_stop_atten_db > 0.0, "bpf_stop_atten_db", "must be positive");
    require(phase_lpf_cutoff > 0.0 && phase_lpf_cutoff < nyq, "phase_lpf_cutoff", "must lie in (0, sample_rate/2)");
    require(symbol_rate > 0.0 && symbol_rate < nyq, "symbol_rate", "must lie in (0, sample_rate/2)");
    require(conjugation_sign == 1 || conjugation_sign == -1, "conjugation_sign", "must be +1 or -1");
    require(pattern.cone_half_angle > 0.0 && pattern.cone_half_angle <= kPi, "cone_half_angle", "must lie in (0, pi]");
}

// ------------------------------------------------------------ ReceiveChain

ReceiveChain::ReceiveChain(const RadioConfig& cfg, double rate)
    : n_(cfg.n_elements)
    , rate_(rate)
    , f_rx_(cfg.f_rx)
    , unwrap_mode_(cfg.unwrap_mode)
{
    cfg.validate(rate);
    const FirFilter bpf = design_bandpass(cfg.f_rx, cfg.bpf_bandwidth, rate, cfg.bpf_stop_atten_db);
    const QuadratureDemodulator demod(cfg.f_rx, rate);
    bpf_.assign(n_, bpf);
    demod_.assign(n_, demod);
    unwrap_.assign(n_, PhaseUnwrapper{});
    lpf_.assign(n_, OnePoleLowpass(cfg.phase_lpf_cutoff, rate));
    bp_.resize(n_);
    raw_.resize(n_);
    bpf_delay_ = bpf.group_delay() / rate;
    latency_ = bpf_delay_ + demod.group_delay() / rate;
}

void ReceiveChain::set_phasing_state(std::span<const double> phases)
{
    if (phases.size() != n_) {
        throw std::invalid_argument("phasing state needs one phase per element");
    }
    for (std::size_t j = 0; j < n_; ++j) {
        lpf_[j].reset(phases[j]);
    }
}

void ReceiveChain::process(std::span<const std::vector<double>> rx, double t_start, ReceiveBlock& out)
{
    if (rx.size() != n_) {
        throw std::invalid_argument("receive chain expects " + std::to_string(n_) + " element streams");
    }
    const std::size_t len = rx[0].size();
    out.phi.resize(n_);
    out.phi_low.resize(n_);
    out.data_high.resize(n_);
    out.amplitude.resize(n_);
    out.combined.assign(len, 0.0);
    out.combined_phase.assign(len, 0.0);

    // Reference the carrier at the band-pass input time so phi is the antenna phase.
    cos_.resize(len);
    sin_.resize(len);
    for (std::size_t k = 0; k < len; ++k) {
        const double ph = carrier_phase(f_rx_, t_start - bpf_delay_ + static_cast<double>(k) / rate_);
        cos_[k] = std::cos(ph);
        sin_[k] = std::sin(ph);
    }

    for (std::size_t j = 0; j < n_; ++j) {
        if (rx[j].size() != len) {
            throw std::invalid_argument("element streams differ in length");
        }
        bp_[j].resize(len);
        raw_[j].resize(len);
        out.amplitude[j].resize(len);
        bpf_[j].process(rx[j], bp_[j]);
        demod_[j].process_with_reference(bp_[j], cos_, sin_, out.amplitude[j], raw_[j]);
    }

    const double inv_n = 1.0 / static_cast<double>(n_);
    auto finish = [&](std::size_t j) {
        for (std::size_t k = 0; k < len; ++k) {
            out.data_high[j][k] = out.phi[j][k] - out.phi_low[j][k];
            out.combined[k] += out.data_high[j][k] * inv_n;
            out.combined_phase[k] += out.phi[j][k] * inv_n;
        }
    };
    for (std::size_t j = 0; j < n_; ++j) {
        out.phi[j].resize(len);
        out.phi_low[j].resize(len);
        out.data_high[j].resize(len);
    }

    const double low0_before = lpf_[0].state();
    for (std::size_t j = 0; j < n_; ++j) {
        if (j != 0 && unwrap_mode_ == UnwrapMode::referenced) {
            continue;
        }
        for (std::size_t k = 0; k < len; ++k) {
            out.phi[j][k] = unwrap_[j](raw_[j][k]);
        }
        lpf_[j].process(out.phi[j], out.phi_low[j]);
        finish(j);
    }
    if (unwrap_mode_ == UnwrapMode::independent) {
        return;
    }

    // Each difference to element 1 takes the 2 pi branch nearest the current
    // low-passed difference, so a noisy sample cannot leave a lasting slip.
    const auto& ref_raw = raw_[0];
    const auto& phi0 = out.phi[0];
    const auto& low0 = out.phi_low[0];
    for (std::size_t j = 1; j < n_; ++j) {
        auto& phi = out.phi[j];
        auto& low = out.phi_low[j];
        double prev_low0 = low0_before;
        for (std::size_t k = 0; k < len; ++k) {
            const double track = lpf_[j].state() - prev_low0;
            const double d = wrap_phase(raw_[j][k] - ref_raw[k]);
            phi[k] = phi0[k] + track + wrap_phase(d - track);
            low[k] = lpf_[j].step(phi[k]);
            prev_low0 = low0[k];
        }
        finish(j);
    }
}

DemodOutput receive_chain(std::span<const Waveform> rx, const RadioConfig& cfg)
{
    if (rx.size() != cfg.n_elements) {
        throw std::invalid_argument("receive_chain: expected " + std::to_string(cfg.n_elements) + " waveforms");
    }
    const double rate = rx[0].rate;
    ReceiveChain chain(cfg, rate);
    std::vector<std::vector<double>> in(rx.size());
    for (std::size_t j = 0; j < rx.size(); ++j) {
        if (std::abs(rx[j].rate - rate) > 1e-12 * rate) {
            throw RateMismatch("receive waveforms do not share a sample rate");
        }
        in[j] = rx[j].samples;
    }
    ReceiveBlock blk;
    chain.process(in, rx[0].t0, blk);

    DemodOutput out;
    out.latency = chain.latency();
    for (std::size_t j = 0; j < rx.size(); ++j) {
        out.phi.push_back({std::move(blk.phi[j]), rate, rx[0].t0});
        out.phi_low.push_back({std::move(blk.phi_low[j]), rate, rx[0].t0});
        out.data_high.push_back({std::move(blk.data_high[j]), rate, rx[0].t0});
        out.amplitude.push_back({std::move(blk.amplitude[j]), rate, rx[0].t0});
    }
    out.combined_data = {std::move(blk.combined), rate, rx[0].t0};
    return out;
}

// ------------------------------------------------------------ phasing path

std::vector<PhaseStream> delta_phases(std::span<const PhaseStream> phi_low)
{
    if (phi_low.empty()) {
        throw std::invalid_argument("delta_phases needs at least one element");
    }
    std::vector<PhaseStream> out(phi_low.begin(), phi_low.end());
    const auto& ref = phi_low[0].values;
    for (auto& s : out) {
        if (s.values.size() != ref.size()) {
            throw std::invalid_argument("phase streams differ in length");
        }
        for (std::size_t k = 0; k < ref.size(); ++k) {
            s.values[k] -= ref[k];
        }
    }
    return out;
}

void delta_phases_into(std::span<const std::vector<double>> phi_low, std::span<std::vector<double>> out)
{
    const auto& ref = phi_low[0];
    for (std::size_t j = 0; j < phi_low.size(); ++j) {
        out[j].resize(ref.size());
        for (std::size_t k = 0; k < ref.size(); ++k) {
            out[j][k] = phi_low[j][k] - ref[k];
        }
    }
}

void transmit_block(std::span<const std::vector<double>> dphi, std::span<const double> data_phase, double t_start,
                    double rate, const RadioConfig& cfg, std::span<std::vector<double>> out)
{
    const double amp = amplitude_for_dbm(cfg.tx_power_dbm);
    const double s = static_cast<double>(cfg.conjugation_sign);
    const std::size_t len = data_phase.size();
    for (std::size_t j = 0; j < dphi.size(); ++j) {
        out[j].resize(len);
        for (std::size_t k = 0; k < len; ++k) {
            const double carrier = carrier_phase(cfg.f_tx, t_start + static_cast<double>(k) / rate);
            out[j][k] = amp * std::cos(carrier + s * dphi[j][k] + data_phase[k]);
        }
    }
}

std::vector<Waveform> transmit_chain(std::span<const PhaseStream> dphi, const PhaseStream& data_phase,
                                     const RadioConfig& cfg)
{
    if (dphi.size() != cfg.n_elements) {
        throw std::invalid_argument("transmit_chain: expected " + std::to_string(cfg.n_elements) + " phase streams");
    }
    std::vector<std::vector<double>> d(dphi.size());
    for (std::size_t j = 0; j < dphi.size(); ++j) {
        if (dphi[j].size() != data_phase.size()) {
            throw std::invalid_argument("transmit_chain: streams are not aligned");
        }
        d[j] = dphi[j].values;
    }
    std::vector<std::vector<double>> out(dphi.size());
    transmit_block(d, data_phase.values, data_phase.t0, data_phase.rate, cfg, out);
    std::vector<Waveform> waves;
    for (auto& o : out) {
        waves.push_back({std::move(o), data_phase.rate, data_phase.t0});
    }
    return waves;
}

// ------------------------------------------------------------------- modem

Prbs23::Prbs23(std::uint32_t seed) noexcept
    : state_(seed & kPeriod)
{
    if (state_ == 0) {
        state_ = 1;
    }
}

std::uint8_t Prbs23::next() noexcept
{
    const std::uint32_t out = (state_ >> 22) & 1U;
    const std::uint32_t fb = ((state_ >> 22) ^ (state_ >> 17)) & 1U;
    state_ = ((state_ << 1) | fb) & kPeriod;
    return static_cast<std::uint8_t>(out);
}

std::vector<std::uint8_t> scramble(std::span<const std::uint8_t> bits, std::uint32_t seed)
{
    Prbs23 prbs(seed);
    std::vector<std::uint8_t> out(bits.size());
    for (std::size_t k = 0; k < bits.size(); ++k) {
        out[k] = static_cast<std::uint8_t>((bits[k] & 1U) ^ prbs.next());
    }
    return out;
}

std::vector<std::uint8_t> descramble(std::span<const std::uint8_t> bits, std::uint32_t seed)
{
    return scramble(bits, seed);
}

double qpsk_point(std::uint8_t b0, std::uint8_t b1) noexcept
{
    const double mag = (b1 & 1U) ? 0.75 * kPi : 0.25 * kPi;
    return (b0 & 1U) ? -mag : mag;
}

void qpsk_decide(double phase, std::uint8_t& b0, std::uint8_t& b1) noexcept
{
    const double p = wrap_phase(phase);
    b0 = p <= 0.0 ? 1 : 0;
    b1 = std::abs(p) > 0.5 * kPi ? 1 : 0;
}

std::vector<double> qpsk_symbols(std::span<const std::uint8_t> bits, QpskMode mode)
{
    if (bits.size() % 2 != 0) {
        throw std::invalid_argument("QPSK needs an even number of bits, got " + std::to_string(bits.size()));
    }
    std::vector<double> out;
    out.reserve(bits.size() / 2 + 1);
    if (mode == QpskMode::differential) {
        double acc = 0.0;
        out.push_back(acc);
        for (std::size_t k = 0; k < bits.size(); k += 2) {
            acc += qpsk_point(bits[k], bits[k + 1]);
            out.push_back(acc);
        }
    } else {
        for (std::size_t k = 0; k < bits.size(); k += 2) {
            out.push_back(qpsk_point(bits[k], bits[k + 1]));
        }
    }
    return out;
}

PhaseStream qpsk_map(std::span<const std::uint8_t> bits, QpskMode mode, double symbol_rate, double rate, double t0)
{
    const auto symbols = qpsk_symbols(bits, mode);
    const double sps = rate / symbol_rate;
    const auto total = static_cast<std::size_t>(std::llround(static_cast<double>(symbols.size()) * sps));
    PhaseStream out{std::vector<double>(total), rate, t0};
    for (std::size_t m = 0; m < total; ++m) {
        auto idx = static_cast<std::size_t>(std::floor(static_cast<double>(m) / sps + 1e-9));
        out.values[m] = symbols[std::min(idx, symbols.size() - 1)];
    }
    return out;
}

DemapResult qpsk_demap(const PhaseStream& phase, const SymbolTiming& timing, QpskMode mode)
{
    DemapResult res;
    std::vector<double> slices;
    for (std::size_t i = 0; i < timing.count; ++i) {
        const double t = timing.first_symbol + (static_cast<double>(i) + 0.5) * timing.period;
        const auto idx = std::llround((t - phase.t0) * phase.rate);
        if (idx < 0 || idx >= static_cast<long long>(phase.size())) {
            break;
        }
        slices.push_back(phase.values[static_cast<std::size_t>(idx)]);
    }
    double err2 = 0.0;
    std::size_t decided = 0;
    const std::size_t first = mode == QpskMode::differential ? 1 : 0;
    for (std::size_t i = first; i < slices.size(); ++i) {
        const double v = mode == QpskMode::differential ? wrap_phase(slices[i] - slices[i - 1]) : slices[i];
        std::uint8_t b0 = 0;
        std::uint8_t b1 = 0;
        qpsk_decide(v, b0, b1);
        res.bits.push_back(b0);
        res.bits.push_back(b1);
        const double e = wrap_phase(v - qpsk_point(b0, b1));
        err2 += e * e;
        ++decided;
    }
    res.rms_error = decided > 0 ? std::sqrt(err2 / static_cast<double>(decided)) : kPi;
    res.quality_ok = decided > 0 && res.rms_error < kPi / 8.0;
    return res;
}

} // namespace retrolink
