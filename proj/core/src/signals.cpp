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

#include "retrolink/signals.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace retrolink
{

namespace
{
    constexpr double kPi = std::numbers::pi;

    bool same_rate(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(std::abs(a), std::abs(b)); }

    double sinc(double x)
    {
        if (x == 0.0) {
            return 1.0;
        }
        const double px = kPi * x;
        return std::sin(px) / px;
    }

    std::size_t kaiser_length(double atten_db, double transition, double rate)
    {
        const double dw = kTwoPi * transition / rate;
        auto n = static_cast<std::size_t>(std::ceil((atten_db - 7.95) / (2.285 * dw))) + 1;
        n = std::max<std::size_t>(n, 3);
        return n | 1U; // odd length keeps an integer group delay
    }

    std::vector<double> windowed_lowpass(std::size_t n, double cutoff, double rate, double beta)
    {
        const auto w = kaiser_window(n, beta);
        const double mid = 0.5 * static_cast<double>(n - 1);
        const double fc = cutoff / rate;
        std::vector<double> h(n);
        for (std::size_t m = 0; m < n; ++m) {
            h[m] = 2.0 * fc * sinc(2.0 * fc * (static_cast<double>(m) - mid)) * w[m];
        }
        return h;
    }

    double gain_db(std::complex<double> h) { return 20.0 * std::log10(std::max(std::abs(h), 1e-300)); }
} // namespace

void Waveform::validate() const
{
    if (!(rate > 0.0) || !std::isfinite(rate)) {
        throw std::invalid_argument("waveform rate must be positive, got " + std::to_string(rate));
    }
    for (std::size_t k = 0; k < samples.size(); ++k) {
        if (!std::isfinite(samples[k])) {
            throw std::invalid_argument("waveform sample " + std::to_string(k) + " is not finite");
        }
    }
}

double wrap_phase(double x) noexcept
{
    if (x > -kPi && x <= kPi) {
        return x;
    }
    return x - kTwoPi * std::ceil((x - kPi) / kTwoPi);
}

void unwrap(std::span<double> phase) noexcept
{
    PhaseUnwrapper u;
    for (auto& p : phase) {
        p = u(p);
    }
}

double amplitude_for_dbm(double dbm) noexcept { return std::sqrt(2.0 * 1e-3 * std::pow(10.0, dbm / 10.0)); }

double dbm_for_amplitude(double peak) noexcept { return dbm_for_power(0.5 * peak * peak); }

double dbm_for_power(double watts) noexcept { return 10.0 * std::log10(watts / 1e-3); }

double kaiser_beta(double atten_db) noexcept
{
    if (atten_db > 50.0) {
        return 0.1102 * (atten_db - 8.7);
    }
    if (atten_db >= 21.0) {
        return 0.5842 * std::pow(atten_db - 21.0, 0.4) + 0.07886 * (atten_db - 21.0);
    }
    return 0.0;
}

std::vector<double> kaiser_window(std::size_t n, double beta)
{
    std::vector<double> w(n, 1.0);
    if (n < 2) {
        return w;
    }
    const double denom = std::cyl_bessel_i(0.0, beta);
    const double half = 0.5 * static_cast<double>(n - 1);
    for (std::size_t m = 0; m < n; ++m) {
        const double r = (static_cast<double>(m) - half) / half;
        w[m] = std::cyl_bessel_i(0.0, beta * std::sqrt(std::max(0.0, 1.0 - r * r))) / denom;
    }
    return w;
}

// ---------------------------------------------------------------- FirFilter

FirFilter::FirFilter(std::vector<double> taps, double rate)
    : taps_(std::move(taps))
    , rate_(rate)
{
    if (taps_.empty()) {
        throw std::invalid_argument("FIR filter needs at least one tap");
    }
    if (!(rate_ > 0.0)) {
        throw std::invalid_argument("FIR filter rate must be positive");
    }
    reset();
}

bool FirFilter::symmetric() const noexcept
{
    const std::size_t n = taps_.size();
    for (std::size_t m = 0; m < n / 2; ++m) {
        if (taps_[m] != taps_[n - 1 - m]) {
            return false;
        }
    }
    return true;
}

std::complex<double> FirFilter::response(double freq) const
{
    std::complex<double> acc{0.0, 0.0};
    const double w = -kTwoPi * freq / rate_;
    for (std::size_t m = 0; m < taps_.size(); ++m) {
        acc += taps_[m] * std::polar(1.0, w * static_cast<double>(m));
    }
    return acc;
}

void FirFilter::reset()
{
    work_.assign(taps_.size() - 1, 0.0);
}

void FirFilter::process(std::span<const double> in, std::span<double> out)
{
    if (out.size() < in.size()) {
        throw std::invalid_argument("FIR output buffer shorter than input");
    }
    const std::size_t n = taps_.size();
    const std::size_t hist = n - 1;
    work_.resize(hist + in.size());
    std::copy(in.begin(), in.end(), work_.begin() + static_cast<std::ptrdiff_t>(hist));

    // y[k] = sum_m h[m] x[k-m]; with reversed taps this is a forward dot product.
    const double* h = taps_.data();
    const double* x = work_.data();
    for (std::size_t k = 0; k < in.size(); ++k) {
        const double* xk = x + k;
        double acc = 0.0;
#pragma omp simd reduction(+ : acc)
        for (std::size_t m = 0; m < n; ++m) {
            acc += h[n - 1 - m] * xk[m];
        }
        out[k] = acc;
    }

    std::copy(work_.end() - static_cast<std::ptrdiff_t>(hist), work_.end(), work_.begin());
    work_.resize(hist);
}

// ----------------------------------------------------------- OnePoleLowpass

OnePoleLowpass::OnePoleLowpass(double cutoff, double rate)
    : cutoff_(cutoff)
    , rate_(rate)
{
    if (!(cutoff > 0.0) || !(cutoff < 0.5 * rate)) {
        throw std::invalid_argument("one-pole cutoff must lie in (0, rate/2)");
    }
    alpha_ = -std::expm1(-kTwoPi * cutoff / rate);
}

void OnePoleLowpass::process(std::span<const double> in, std::span<double> out) noexcept
{
    const std::size_t n = std::min(in.size(), out.size());
    for (std::size_t k = 0; k < n; ++k) {
        out[k] = step(in[k]);
    }
}

// ----------------------------------------------------------------- design

FirFilter design_lowpass(double pass_edge, double stop_edge, double rate, double stop_atten_db)
{
    if (!(pass_edge > 0.0) || !(stop_edge > pass_edge) || !(stop_edge < 0.5 * rate)) {
        throw DesignError("low-pass edges must satisfy 0 < pass < stop < rate/2");
    }
    const std::size_t n = kaiser_length(stop_atten_db, stop_edge - pass_edge, rate);
    if (n > kMaxFirTaps) {
        throw DesignError("low-pass needs " + std::to_string(n) + " taps, budget is " + std::to_string(kMaxFirTaps));
    }
    return FirFilter(windowed_lowpass(n, 0.5 * (pass_edge + stop_edge), rate, kaiser_beta(stop_atten_db)), rate);
}

BandpassMask measure_bandpass_mask(const FirFilter& filter, double center, double bandwidth)
{
    BandpassMask mask;
    const double lo = center - 0.5 * bandwidth;
    constexpr int kPassPoints = 201;
    double gmin = 1e300;
    double gmax = -1e300;
    for (int i = 0; i < kPassPoints; ++i) {
        const double f = lo + bandwidth * i / (kPassPoints - 1);
        const double g = gain_db(filter.response(f));
        gmin = std::min(gmin, g);
        gmax = std::max(gmax, g);
    }
    mask.passband_ripple_db = gmax - gmin;
    mask.passband_peak_db = std::max(std::abs(gmax), std::abs(gmin));

    // Sidelobes are ~rate/ntaps wide; sample several points per lobe.
    const double nyq = 0.5 * filter.rate();
    const double step = filter.rate() / (8.0 * static_cast<double>(filter.size()));
    double worst = -1e300;
    auto scan = [&](double a, double b) {
        if (b <= a) {
            return;
        }
        const auto npts = static_cast<std::size_t>(std::ceil((b - a) / step)) + 1;
        for (std::size_t i = 0; i < npts; ++i) {
            const double f = std::min(b, a + step * static_cast<double>(i));
            worst = std::max(worst, gain_db(filter.response(f)));
        }
    };
    scan(0.0, center - 1.5 * bandwidth);
    scan(center + 1.5 * bandwidth, nyq);
    mask.stopband_atten_db = worst == -1e300 ? 1e300 : -worst;
    return mask;
}

FirFilter design_bandpass(double center, double bandwidth, double rate, double stop_atten_db)
{
    if (!(bandwidth > 0.0) || !(center > 0.0) || !(rate > 0.0)) {
        throw std::invalid_argument("band-pass design needs positive center, bandwidth and rate");
    }
    const double nyq = 0.5 * rate;
    if (!(center + 0.5 * bandwidth < nyq) || !(center - 0.5 * bandwidth > 0.0)) {
        throw DesignError("band-pass [" + std::to_string(center - 0.5 * bandwidth) + ", " +
                          std::to_string(center + 0.5 * bandwidth) + "] Hz does not fit inside (0, rate/2)");
    }
    // Widest transition the mask allows (bandwidth/2 to 1.5 bandwidth from center) keeps
    // the impulse response short; narrower near the band edges.
    const double room = std::min(nyq - (center + 0.5 * bandwidth), center - 0.5 * bandwidth);
    const double transition = std::min(bandwidth, room);
    if (!(transition > 0.0)) {
        throw DesignError("no room for a transition band");
    }
    const double cutoff = 0.5 * bandwidth + 0.5 * transition;
    const double design_atten = stop_atten_db + 3.0;
    const double beta = kaiser_beta(design_atten);

    std::size_t n = kaiser_length(design_atten, transition, rate);
    while (n <= kMaxFirTaps) {
        auto h = windowed_lowpass(n, cutoff, rate, beta);
        const double mid = 0.5 * static_cast<double>(n - 1);
        for (std::size_t m = 0; m < n; ++m) {
            h[m] *= 2.0 * std::cos(kTwoPi * center * (static_cast<double>(m) - mid) / rate);
        }
        // Symmetrize exactly so the phase is strictly linear.
        for (std::size_t m = 0; m < n / 2; ++m) {
            const double avg = 0.5 * (h[m] + h[n - 1 - m]);
            h[m] = avg;
            h[n - 1 - m] = avg;
        }
        FirFilter filter(std::move(h), rate);
        const auto mask = measure_bandpass_mask(filter, center, bandwidth);
        if (mask.passband_ripple_db <= 0.5 && mask.passband_peak_db <= 0.5 && mask.stopband_atten_db >= stop_atten_db) {
            return filter;
        }
        n = (n + std::max<std::size_t>(2, n / 8)) | 1U;
    }
    throw DesignError("band-pass at " + std::to_string(center) + " Hz, width " + std::to_string(bandwidth) +
                      " Hz exceeds the " + std::to_string(kMaxFirTaps) + "-tap budget");
}

Waveform filter_apply(FirFilter& filter, const Waveform& wave)
{
    if (!same_rate(filter.rate(), wave.rate)) {
        throw RateMismatch("filter rate " + std::to_string(filter.rate()) + " != waveform rate " +
                           std::to_string(wave.rate));
    }
    Waveform out{std::vector<double>(wave.size()), wave.rate, wave.t0};
    filter.process(wave.samples, out.samples);
    return out;
}

Waveform filter_apply(OnePoleLowpass& filter, const Waveform& wave)
{
    if (!same_rate(filter.rate(), wave.rate)) {
        throw RateMismatch("filter rate " + std::to_string(filter.rate()) + " != waveform rate " +
                           std::to_string(wave.rate));
    }
    Waveform out{std::vector<double>(wave.size()), wave.rate, wave.t0};
    filter.process(wave.samples, out.samples);
    return out;
}

// --------------------------------------------------------- demodulation

double carrier_phase(double freq, double t) noexcept
{
    const double cycles = freq * t;
    return kTwoPi * (cycles - std::floor(cycles));
}

QuadratureDemodulator::QuadratureDemodulator(double f_ref, double rate)
    : f_ref_(f_ref)
    , rate_(rate)
{
    if (!(f_ref > 0.0) || !(f_ref < 0.5 * rate)) {
        throw std::invalid_argument("demodulator reference must lie in (0, rate/2)");
    }
    // Distance from DC to the (possibly aliased) 2 f_ref mixing product.
    const double alias = std::fmod(2.0 * f_ref, rate);
    const double d2 = std::min(alias, rate - alias);
    auto lp = design_lowpass(0.25 * d2, 0.75 * d2, rate, 60.0);
    lowpass_i_ = lp;
    lowpass_q_ = lp;
}

void QuadratureDemodulator::reset()
{
    lowpass_i_.reset();
    lowpass_q_.reset();
}

void QuadratureDemodulator::process(std::span<const double> in, double t_start, std::span<double> amplitude,
                                    std::span<double> wrapped_phase)
{
    const std::size_t n = in.size();
    cos_.resize(n);
    sin_.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double ph = carrier_phase(f_ref_, t_start + static_cast<double>(k) / rate_);
        cos_[k] = std::cos(ph);
        sin_[k] = std::sin(ph);
    }
    process_with_reference(in, cos_, sin_, amplitude, wrapped_phase);
}

void QuadratureDemodulator::process_with_reference(std::span<const double> in, std::span<const double> ref_cos,
                                                   std::span<const double> ref_sin, std::span<double> amplitude,
                                                   std::span<double> wrapped_phase)
{
    const std::size_t n = in.size();
    i_.resize(n);
    q_.resize(n);
    i_f_.resize(n);
    q_f_.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        i_[k] = in[k] * ref_cos[k];
        q_[k] = -in[k] * ref_sin[k];
    }
    lowpass_i_.process(i_, i_f_);
    lowpass_q_.process(q_, q_f_);
    if (!amplitude.empty()) {
        for (std::size_t k = 0; k < n; ++k) {
            amplitude[k] = 2.0 * std::hypot(i_f_[k], q_f_[k]);
        }
    }
    if (!wrapped_phase.empty()) {
        for (std::size_t k = 0; k < n; ++k) {
            wrapped_phase[k] = std::atan2(q_f_[k], i_f_[k]);
        }
    }
}

PhaseStream extract_phase(const Waveform& wave, double f_ref)
{
    if (!(f_ref < 0.5 * wave.rate)) {
        throw std::invalid_argument("reference frequency must be below rate/2");
    }
    QuadratureDemodulator demod(f_ref, wave.rate);
    const auto lag = static_cast<std::size_t>(std::lround(demod.group_delay()));

    std::vector<double> padded(wave.samples);
    padded.resize(wave.size() + lag, 0.0);
    std::vector<double> raw(padded.size());
    demod.process(padded, wave.t0, {}, raw);

    PhaseStream out{std::vector<double>(raw.begin() + static_cast<std::ptrdiff_t>(lag), raw.end()), wave.rate, wave.t0};
    unwrap(out.values);
    return out;
}

void synthesize_pm_into(double f_carrier, double rate, double t_start, std::span<const double> phase, double amplitude,
                        std::span<double> out)
{
    const std::size_t n = std::min(phase.size(), out.size());
    for (std::size_t k = 0; k < n; ++k) {
        out[k] = amplitude * std::cos(carrier_phase(f_carrier, t_start + static_cast<double>(k) / rate) + phase[k]);
    }
}

Waveform synthesize_pm(double f_carrier, const PhaseStream& phase, double amplitude)
{
    if (!(f_carrier < 0.5 * phase.rate)) {
        throw std::invalid_argument("carrier must lie below rate/2");
    }
    Waveform out{std::vector<double>(phase.size()), phase.rate, phase.t0};
    synthesize_pm_into(f_carrier, phase.rate, phase.t0, phase.values, amplitude, out.samples);
    return out;
}

} // namespace retrolink
