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


#include <doctest/doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include "retrolink/signals.hpp"

using namespace retrolink;

namespace
{

constexpr double kPi = std::numbers::pi;

// Frequency response evaluated straight from the tap definition.
double dft_gain_db(const std::vector<double>& taps, double freq, double rate)
{
    std::complex<double> acc{};
    for (std::size_t m = 0; m < taps.size(); ++m) {
        acc += taps[m] * std::polar(1.0, -2.0 * kPi * freq * static_cast<double>(m) / rate);
    }
    return 20.0 * std::log10(std::abs(acc));
}

std::vector<double> taps_of(const FirFilter& f) { return {f.taps().begin(), f.taps().end()}; }

Waveform tone(double freq, double phase, double amplitude, std::size_t n, double rate = kDefaultSampleRate)
{
    Waveform w{std::vector<double>(n), rate, 0.0};
    for (std::size_t k = 0; k < n; ++k) {
        w.samples[k] = amplitude * std::cos(2.0 * kPi * freq * static_cast<double>(k) / rate + phase);
    }
    return w;
}

// Least-squares slope of y against sample index, scaled to per-second.
double slope_per_second(const std::vector<double>& y, std::size_t from, double rate)
{
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(y.size() - from);
    for (std::size_t k = from; k < y.size(); ++k) {
        const double x = static_cast<double>(k);
        sx += x;
        sy += y[k];
        sxx += x * x;
        sxy += x * y[k];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx) * rate;
}

} // namespace

TEST_SUITE("signals")
{
    TEST_CASE("0 dBm is a 44.72 mV peak on the normalized load")
    {
        CHECK(amplitude_for_dbm(0.0) == doctest::Approx(0.0447214).epsilon(1e-6));
        CHECK(amplitude_for_dbm(-30.0) == doctest::Approx(0.0447214 / std::sqrt(1000.0)).epsilon(1e-6));
        CHECK(dbm_for_amplitude(amplitude_for_dbm(7.5)) == doctest::Approx(7.5));
        // RMS of the sampled carrier carries 1 mW.
        const auto w = tone(58e9, 0.0, amplitude_for_dbm(0.0), 200000);
        double p = 0.0;
        for (double s : w.samples) {
            p += s * s;
        }
        CHECK(p / static_cast<double>(w.size()) == doctest::Approx(1e-3).epsilon(1e-3));
    }

    TEST_CASE("wrap and unwrap follow the nearest-branch rule")
    {
        CHECK(wrap_phase(kPi) == doctest::Approx(kPi));
        CHECK(wrap_phase(-kPi) == doctest::Approx(kPi));
        CHECK(wrap_phase(3.0 * kPi / 2.0) == doctest::Approx(-kPi / 2.0));
        CHECK(wrap_phase(-7.0) == doctest::Approx(-7.0 + 2.0 * kPi));

        std::vector<double> ramp(400);
        std::vector<double> wrapped(ramp.size());
        for (std::size_t k = 0; k < ramp.size(); ++k) {
            ramp[k] = 0.3 * static_cast<double>(k) - 5.0;
            wrapped[k] = std::remainder(ramp[k], 2.0 * kPi);
        }
        unwrap(wrapped);
        const double offset = wrapped[0] - ramp[0];
        CHECK(std::abs(std::remainder(offset, 2.0 * kPi)) < 1e-12);
        for (std::size_t k = 0; k < ramp.size(); ++k) {
            CHECK(wrapped[k] - ramp[k] == doctest::Approx(offset).epsilon(1e-12));
        }
    }

    TEST_CASE("FIR impulse response reproduces the taps across blocks")
    {
        FirFilter f({0.5, -1.0, 2.0, -1.0, 0.5}, kDefaultSampleRate);
        CHECK(f.symmetric());
        CHECK(f.group_delay() == 2.0);
        std::vector<double> in(7, 0.0);
        in[0] = 1.0;
        std::vector<double> a(3), b(4);
        f.process(std::span(in).first(3), a);
        f.process(std::span(in).subspan(3), b);
        const std::vector<double> expect{0.5, -1.0, 2.0, -1.0, 0.5, 0.0, 0.0};
        for (std::size_t k = 0; k < 3; ++k) {
            CHECK(a[k] == expect[k]);
        }
        for (std::size_t k = 0; k < 4; ++k) {
            CHECK(b[k] == expect[k + 3]);
        }
    }

    TEST_CASE("filter_apply rejects a rate mismatch")
    {
        FirFilter f({1.0}, 100e9);
        Waveform w{std::vector<double>(10, 1.0), 200e9, 0.0};
        CHECK_THROWS_AS((void)filter_apply(f, w), RateMismatch);
    }

    TEST_CASE("band-pass at 58 GHz meets the mask by direct DFT")
    {
        const FirFilter f = design_bandpass(58e9, 1.5e9, 200e9, 40.0);
        const auto h = taps_of(f);
        REQUIRE(h.size() % 2 == 1);
        CHECK(f.symmetric());
        CHECK(f.group_delay() == doctest::Approx(0.5 * static_cast<double>(h.size() - 1)));

        double gmin = 1e9, gmax = -1e9;
        for (int i = 0; i <= 300; ++i) {
            const double g = dft_gain_db(h, 57.25e9 + 1.5e9 * i / 300.0, 200e9);
            gmin = std::min(gmin, g);
            gmax = std::max(gmax, g);
        }
        CHECK(gmax - gmin <= 0.5);
        CHECK(std::max(std::abs(gmax), std::abs(gmin)) <= 0.5);

        double worst = -1e9;
        const double step = 200e9 / (10.0 * static_cast<double>(h.size()));
        for (double fr = 0.0; fr <= 58e9 - 2.25e9; fr += step) {
            worst = std::max(worst, dft_gain_db(h, fr, 200e9));
        }
        for (double fr = 58e9 + 2.25e9; fr <= 100e9; fr += step) {
            worst = std::max(worst, dft_gain_db(h, fr, 200e9));
        }
        CHECK(worst <= -40.0);
    }

    TEST_CASE("62 GHz band-pass isolates the 58 GHz receive band")
    {
        const FirFilter f = design_bandpass(62e9, 1.5e9, 200e9, 40.0);
        CHECK(dft_gain_db(taps_of(f), 58e9, 200e9) <= -40.0);
    }

    TEST_CASE("degenerate band-pass specs are rejected")
    {
        CHECK_THROWS_AS((void)design_bandpass(50e9, 200e9, 200e9, 40.0), DesignError);
        CHECK_THROWS_AS((void)design_bandpass(58e9, 1e6, 200e9, 40.0), DesignError);
    }

    TEST_CASE("58 GHz tone passes the band-pass within 0.5 dB")
    {
        FirFilter f = design_bandpass(58e9, 1.5e9, 200e9, 40.0);
        const auto in = tone(58e9, 0.4, 1.0, 20000);
        const auto out = filter_apply(f, in);
        double peak = 0.0;
        for (std::size_t k = f.size(); k < out.size(); ++k) {
            peak = std::max(peak, std::abs(out.samples[k]));
        }
        CHECK(std::abs(20.0 * std::log10(peak)) <= 0.5);
    }

    TEST_CASE("one-pole low-pass: unity DC gain and a 63.2 percent step at one time constant")
    {
        const double fc = 2e6;
        const double rate = 200e9;
        OnePoleLowpass lp(fc, rate);
        const auto tau_samples = static_cast<std::size_t>(std::llround(rate / (2.0 * kPi * fc)));
        double y = 0.0;
        for (std::size_t k = 0; k < tau_samples; ++k) {
            y = lp.step(1.0);
        }
        CHECK(y == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(0.01));
        for (std::size_t k = 0; k < 20 * tau_samples; ++k) {
            y = lp.step(1.0);
        }
        CHECK(y == doctest::Approx(1.0).epsilon(1e-6));
        CHECK_THROWS((void)OnePoleLowpass(0.0, rate));
        CHECK_THROWS((void)OnePoleLowpass(rate, rate));
    }

    TEST_CASE("extract_phase recovers constant phase and frequency offsets")
    {
        const std::size_t n = 40000;
        SUBCASE("zero-phase carrier")
        {
            const auto p = extract_phase(tone(58e9, 0.0, 0.01, n), 58e9);
            for (std::size_t k = 2000; k < n - 2000; k += 97) {
                CHECK(std::abs(p.values[k]) < 1e-3);
            }
        }
        SUBCASE("constant offset of one radian")
        {
            const auto p = extract_phase(tone(58e9, 1.0, 0.01, n), 58e9);
            for (std::size_t k = 2000; k < n - 2000; k += 97) {
                CHECK(p.values[k] == doctest::Approx(1.0).epsilon(1e-3));
            }
        }
        SUBCASE("10 MHz offset gives a 2 pi 1e7 rad/s slope")
        {
            const auto p = extract_phase(tone(58e9 + 10e6, 0.0, 0.01, 200000), 58e9);
            CHECK(slope_per_second(p.values, 2000, 200e9) == doctest::Approx(2.0 * kPi * 1e7).epsilon(1e-3));
        }
    }

    TEST_CASE("synthesize_pm writes A cos(2 pi f t + phase)")
    {
        PhaseStream ph{std::vector<double>(100), 200e9, 1e-9};
        for (std::size_t k = 0; k < ph.size(); ++k) {
            ph.values[k] = 0.01 * static_cast<double>(k);
        }
        const auto w = synthesize_pm(62e9, ph, 0.2);
        for (std::size_t k = 0; k < ph.size(); ++k) {
            const double t = 1e-9 + static_cast<double>(k) / 200e9;
            CHECK(w.samples[k] == doctest::Approx(0.2 * std::cos(2.0 * kPi * 62e9 * t + ph.values[k])).epsilon(1e-9));
        }
    }

    TEST_CASE("modulate then demodulate a band-limited phase within 0.02 rad")
    {
        // Sum of tones below 1 GHz, far under 10 percent of the carrier.
        const std::size_t n = 60000;
        PhaseStream ph{std::vector<double>(n), 200e9, 0.0};
        std::mt19937_64 rng(7);
        std::uniform_real_distribution<double> u(0.0, 2.0 * kPi);
        const double f[] = {37e6, 180e6, 420e6, 770e6};
        double phs[4];
        for (double& p : phs) {
            p = u(rng);
        }
        for (std::size_t k = 0; k < n; ++k) {
            const double t = static_cast<double>(k) / 200e9;
            double v = 0.0;
            for (int i = 0; i < 4; ++i) {
                v += 0.9 * std::sin(2.0 * kPi * f[i] * t + phs[i]);
            }
            ph.values[k] = v;
        }
        const auto back = extract_phase(synthesize_pm(58e9, ph, 0.01), 58e9);
        double worst = 0.0;
        for (std::size_t k = 3000; k < n - 3000; ++k) {
            worst = std::max(worst, std::abs(back.values[k] - ph.values[k]));
        }
        CHECK(worst < 0.02);
    }

    TEST_CASE("waveform validation rejects non-finite samples")
    {
        Waveform w{{0.0, std::nan(""), 1.0}, 200e9, 0.0};
        CHECK_THROWS(w.validate());
        Waveform z{{0.0}, 0.0, 0.0};
        CHECK_THROWS(z.validate());
    }
}
