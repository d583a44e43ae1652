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
#include <numbers>
#include <stdexcept>
#include <vector>

#include "retrolink/channel.hpp"

using namespace retrolink;

namespace
{

constexpr double kPi = std::numbers::pi;
constexpr double kDeg = kPi / 180.0;
constexpr double kC = 299792458.0;

Waveform tone(double freq, std::size_t n, double rate = kDefaultSampleRate)
{
    Waveform w{std::vector<double>(n), rate, 0.0};
    for (std::size_t k = 0; k < n; ++k) {
        w.samples[k] = std::cos(2.0 * kPi * freq * static_cast<double>(k) / rate);
    }
    return w;
}

// Phase of a known-frequency tone by projection onto cos/sin over [from, to).
double tone_phase(const std::vector<double>& x, double freq, double rate, std::size_t from, std::size_t to)
{
    double c = 0.0, s = 0.0;
    for (std::size_t k = from; k < to; ++k) {
        const double a = 2.0 * kPi * freq * static_cast<double>(k) / rate;
        c += x[k] * std::cos(a);
        s -= x[k] * std::sin(a);
    }
    return std::atan2(s, c);
}

ChannelLink single_pair(double gain, double delay)
{
    ChannelLink l;
    l.n_tx = 1;
    l.n_rx = 1;
    l.freq = 60e9;
    l.gain = {gain};
    l.delay = {delay};
    return l;
}

std::vector<double> run_propagator(const ChannelLink& link, const std::vector<std::vector<double>>& tx, std::size_t block)
{
    Propagator p(link, kDefaultSampleRate);
    const std::size_t len = tx[0].size();
    std::vector<double> out;
    std::vector<std::vector<double>> rx(link.n_rx);
    for (std::size_t at = 0; at < len; at += block) {
        const std::size_t n = std::min(block, len - at);
        std::vector<std::vector<double>> b(tx.size());
        for (std::size_t i = 0; i < tx.size(); ++i) {
            b[i].assign(tx[i].begin() + static_cast<std::ptrdiff_t>(at), tx[i].begin() + static_cast<std::ptrdiff_t>(at + n));
        }
        p.push(b);
        // Pull everything the pushed history already determines.
        const std::int64_t reachable = p.pushed() - p.tx_needed(0);
        const std::int64_t want = std::min<std::int64_t>(reachable, static_cast<std::int64_t>(at + n));
        if (want > p.pulled()) {
            p.pull(static_cast<std::size_t>(want - p.pulled()), rx);
            out.insert(out.end(), rx[0].begin(), rx[0].end());
        }
    }
    return out;
}

} // namespace

TEST_SUITE("channel")
{
    TEST_CASE("Friis gain")
    {
        const double f = 60e9;
        CHECK(friis_gain(kC / f / (4.0 * kPi), f, 0.0, 0.0) == doctest::Approx(0.0).epsilon(1e-12));
        const double closed = 8.0 - 20.0 * std::log10(4.0 * kPi * 10.0 * f / kC);
        CHECK(friis_gain(10.0, f, 4.0, 4.0) == doctest::Approx(closed).epsilon(1e-12));
        CHECK(std::abs(friis_gain(10.0, f, 4.0, 4.0) + 80.0) < 0.02);
        CHECK(friis_gain(20.0, f, 4.0, 4.0) - friis_gain(10.0, f, 4.0, 4.0) == doctest::Approx(-6.0206).epsilon(1e-4));
    }

    TEST_CASE("single elements at 10 m broadside: 33.356 ns plus the extra delay")
    {
        ChannelParams p;
        p.distance = 10.0;
        p.extra_group_delay = 1.5e-9;
        const auto g = ArrayGeometry::uniform_linear(1);
        const auto ch = build_channel(g, g, p);
        CHECK(ch.forward.delay_at(0, 0) == doctest::Approx(33.356e-9 + 1.5e-9).epsilon(1e-5));
        CHECK(ch.reverse.delay_at(0, 0) == doctest::Approx(ch.forward.delay_at(0, 0)));
        const double g_lin = std::pow(10.0, friis_gain(10.0, 62e9, 4.0, 4.0) / 20.0);
        CHECK(ch.forward.gain_at(0, 0) == doctest::Approx(g_lin).epsilon(1e-9));
        CHECK_FALSE(ch.out_of_coverage);
    }

    TEST_CASE("adjacent elements at 42 degrees differ by 5.576 ps")
    {
        ChannelParams p;
        p.angle_a = 42.0 * kDeg;
        p.angle_b = 42.0 * kDeg;
        const auto g = ArrayGeometry::uniform_linear(4, 2.4983e-3);
        const auto ch = build_channel(g, g, p);
        const double expect = 2.4983e-3 * std::sin(42.0 * kDeg) / kC;
        CHECK(expect == doctest::Approx(5.576e-12).epsilon(1e-3));
        for (std::size_t i = 0; i + 1 < 4; ++i) {
            for (std::size_t j = 0; j < 4; ++j) {
                const double diff = std::abs(ch.forward.delay_at(i + 1, j) - ch.forward.delay_at(i, j));
                CHECK(diff == doctest::Approx(expect).epsilon(1e-3));
            }
        }
    }

    TEST_CASE("reciprocity and swapping the radios")
    {
        ChannelParams p;
        p.angle_a = 30.0 * kDeg;
        p.angle_b = -12.0 * kDeg;
        p.path_loss_override_db = 75.0;
        const auto ga = ArrayGeometry::uniform_linear(4);
        const auto gb = ArrayGeometry::uniform_linear(3);
        const auto ch = build_channel(ga, gb, p);
        const auto rev_t = ch.reverse.transposed();
        for (std::size_t i = 0; i < 4; ++i) {
            for (std::size_t j = 0; j < 3; ++j) {
                CHECK(ch.forward.delay_at(i, j) == doctest::Approx(rev_t.delay_at(i, j)).epsilon(1e-14));
                CHECK(ch.forward.gain_at(i, j) == doctest::Approx(std::pow(10.0, -75.0 / 20.0)));
            }
        }
        ChannelParams q = p;
        std::swap(q.angle_a, q.angle_b);
        std::swap(q.freq_a_to_b, q.freq_b_to_a);
        const auto sw = build_channel(gb, ga, q);
        for (std::size_t i = 0; i < 3; ++i) {
            for (std::size_t j = 0; j < 4; ++j) {
                CHECK(sw.forward.delay_at(i, j) == doctest::Approx(ch.reverse.delay_at(i, j)).epsilon(1e-14));
            }
        }
    }

    TEST_CASE("angle outside the cone zeroes the channel and flags it")
    {
        ChannelParams p;
        p.angle_a = 85.0 * kDeg;
        const auto g = ArrayGeometry::uniform_linear(4);
        const auto ch = build_channel(g, g, p);
        CHECK(ch.out_of_coverage);
        for (double v : ch.forward.gain) {
            CHECK(v == 0.0);
        }
        for (double v : ch.reverse.gain) {
            CHECK(v == 0.0);
        }
    }

    TEST_CASE("invalid channel geometry is rejected")
    {
        const auto g = ArrayGeometry::uniform_linear(4);
        ChannelParams p;
        p.distance = 0.0;
        CHECK_THROWS((void)build_channel(g, g, p));
        p.distance = 0.01;
        CHECK_THROWS((void)build_channel(g, g, p));
        p.distance = 10.0;
        p.extra_group_delay = -1e-9;
        CHECK_THROWS((void)build_channel(g, g, p));
    }

    TEST_CASE("fractional delay: integer delays shift, zero is identity")
    {
        Waveform w{std::vector<double>(64), kDefaultSampleRate, 0.0};
        for (std::size_t k = 0; k < w.size(); ++k) {
            w.samples[k] = std::sin(0.37 * static_cast<double>(k)) + 0.1 * static_cast<double>(k % 5);
        }
        const auto same = fractional_delay(w, 0.0);
        for (std::size_t k = 0; k < w.size(); ++k) {
            CHECK(same.samples[k] == w.samples[k]);
        }
        const auto shifted = fractional_delay(w, 3.0 / kDefaultSampleRate);
        for (std::size_t k = 0; k < w.size(); ++k) {
            CHECK(shifted.samples[k] == (k >= 3 ? w.samples[k - 3] : 0.0));
        }
        CHECK_THROWS((void)fractional_delay(w, -1e-12));
    }

    TEST_CASE("fractional delay keeps tone phase within 1 degree up to 65 GHz")
    {
        const double rate = kDefaultSampleRate;
        const std::size_t n = 4000;
        double worst = 0.0;
        for (double f = 1e9; f <= 65e9 + 1; f += 4e9) {
            const auto x = tone(f, n);
            for (double ds = 0.0; ds < 2.0; ds += 0.0625) {
                const auto y = fractional_delay(x, ds / rate);
                const double measured = tone_phase(y.samples, f, rate, 100, n - 100);
                const double expect = -2.0 * kPi * f * ds / rate;
                worst = std::max(worst, std::abs(std::remainder(measured - expect, 2.0 * kPi)));
            }
        }
        CHECK(worst / kDeg < 1.0);
    }

    TEST_CASE("62 GHz tone delayed 5.576 ps turns by 2.172 rad")
    {
        const auto x = tone(62e9, 4000);
        const auto y = fractional_delay(x, 5.576e-12);
        const double shift = -tone_phase(y.samples, 62e9, kDefaultSampleRate, 100, 3900);
        CHECK(2.0 * kPi * 62e9 * 5.576e-12 == doctest::Approx(2.172).epsilon(1e-3));
        CHECK(std::abs(std::remainder(shift - 2.0 * kPi * 62e9 * 5.576e-12, 2.0 * kPi)) < kDeg);
    }

    TEST_CASE("fractional delays compose within the phase contract")
    {
        const double f = 61e9;
        const auto x = tone(f, 4000);
        const double d1 = 0.37 / kDefaultSampleRate;
        const double d2 = 1.21 / kDefaultSampleRate;
        const auto a = fractional_delay(fractional_delay(x, d1), d2);
        const auto b = fractional_delay(x, d1 + d2);
        const double pa = tone_phase(a.samples, f, kDefaultSampleRate, 200, 3800);
        const double pb = tone_phase(b.samples, f, kDefaultSampleRate, 200, 3800);
        CHECK(std::abs(std::remainder(pa - pb, 2.0 * kPi)) < kDeg);
    }

    TEST_CASE("propagator: unit pair gives a delayed copy in any block size")
    {
        const auto x = tone(58e9, 6000);
        const double delay = 700.0 / kDefaultSampleRate;
        for (std::size_t block : {64U, 500U, 6000U}) {
            const auto y = run_propagator(single_pair(1.0, delay), {x.samples}, block);
            REQUIRE(y.size() > 1000);
            for (std::size_t k = 0; k < y.size(); ++k) {
                CHECK(y[k] == doctest::Approx(k >= 700 ? x.samples[k - 700] : 0.0).epsilon(1e-12));
            }
        }
    }

    TEST_CASE("propagator: zero gain is silence, causality is enforced")
    {
        const auto x = tone(58e9, 2000);
        const auto y = run_propagator(single_pair(0.0, 100.0 / kDefaultSampleRate), {x.samples}, 256);
        for (double v : y) {
            CHECK(v == 0.0);
        }
        Propagator p(single_pair(1.0, 50.0 / kDefaultSampleRate), kDefaultSampleRate);
        std::vector<std::vector<double>> rx(1);
        // Nothing pushed: the first 50 - lookahead outputs depend only on silence.
        CHECK_NOTHROW(p.pull(10, rx));
        CHECK_THROWS_AS(p.pull(100, rx), std::logic_error);
    }

    TEST_CASE("two conjugate-steered elements add coherently")
    {
        ChannelParams p;
        p.angle_a = 42.0 * kDeg;
        p.angle_b = 0.0;
        p.extra_group_delay = 0.0;
        p.path_loss_override_db = 0.0;
        const auto ga = ArrayGeometry::uniform_linear(2);
        const auto gb = ArrayGeometry::uniform_linear(1);
        const auto ch = build_channel(ga, gb, p);
        const double f = ch.forward.freq;
        const std::size_t n = 14000;
        // Element i leads by the extra path it has to cover.
        std::vector<Waveform> tx(2, Waveform{std::vector<double>(n), kDefaultSampleRate, 0.0});
        const double d0 = ch.forward.delay_at(0, 0);
        for (std::size_t i = 0; i < 2; ++i) {
            const double lead = ch.forward.delay_at(i, 0) - d0;
            for (std::size_t k = 0; k < n; ++k) {
                tx[i].samples[k] = std::cos(2.0 * kPi * f * (static_cast<double>(k) / kDefaultSampleRate + lead));
            }
        }
        const auto both = propagate(tx, ch, Direction::a_to_b);
        std::vector<Waveform> one = tx;
        std::fill(one[1].samples.begin(), one[1].samples.end(), 0.0);
        const auto single = propagate(one, ch, Direction::a_to_b);
        double pb = 0.0, ps = 0.0;
        for (std::size_t k = 8000; k < 13500; ++k) {
            pb += both[0].samples[k] * both[0].samples[k];
            ps += single[0].samples[k] * single[0].samples[k];
        }
        CHECK(std::sqrt(pb / ps) == doctest::Approx(2.0).epsilon(1e-3));
    }

    TEST_CASE("propagation is linear")
    {
        ChannelParams p;
        p.angle_a = 20.0 * kDeg;
        p.angle_b = -5.0 * kDeg;
        const auto g = ArrayGeometry::uniform_linear(3);
        const auto ch = build_channel(g, g, p);
        const std::size_t n = 8000;
        std::vector<Waveform> x(3, Waveform{std::vector<double>(n), kDefaultSampleRate, 0.0});
        std::vector<Waveform> y = x;
        std::vector<Waveform> mix = x;
        for (std::size_t i = 0; i < 3; ++i) {
            for (std::size_t k = 0; k < n; ++k) {
                x[i].samples[k] = std::sin(0.1 * static_cast<double>(k * (i + 1)));
                y[i].samples[k] = std::cos(0.23 * static_cast<double>(k) + static_cast<double>(i));
                mix[i].samples[k] = 2.0 * x[i].samples[k] - 0.5 * y[i].samples[k];
            }
        }
        const auto px = propagate(x, ch, Direction::b_to_a);
        const auto py = propagate(y, ch, Direction::b_to_a);
        const auto pm = propagate(mix, ch, Direction::b_to_a);
        for (std::size_t j = 0; j < 3; ++j) {
            for (std::size_t k = 0; k < n; k += 7) {
                CHECK(pm[j].samples[k] == doctest::Approx(2.0 * px[j].samples[k] - 0.5 * py[j].samples[k]).scale(1e-6));
            }
        }
    }

    TEST_CASE("noise: kTBF at NF 3 dB over 1.5 GHz is -79.2 dBm")
    {
        NoiseSpec s;
        const double closed = -174.0 + 10.0 * std::log10(1.5e9) + 3.0;
        CHECK(dbm_for_power(s.in_band_power()) == doctest::Approx(closed).epsilon(1e-3));
        CHECK(dbm_for_power(s.in_band_power()) == doctest::Approx(-79.2).epsilon(2e-3));
    }

    TEST_CASE("noise: sample variance and determinism")
    {
        NoiseSpec s;
        Waveform z{std::vector<double>(1000000, 0.0), kDefaultSampleRate, 0.0};
        const auto a = add_noise(z, s, 42);
        double var = 0.0;
        for (double v : a.samples) {
            var += v * v;
        }
        var /= static_cast<double>(a.size());
        const double expect = 1.380649e-23 * 290.0 * std::pow(10.0, 0.3) * kDefaultSampleRate / 2.0;
        CHECK(var == doctest::Approx(expect).epsilon(0.02));
        const auto b = add_noise(z, s, 42);
        CHECK(a.samples == b.samples);
        const auto c = add_noise(z, s, 43);
        CHECK(a.samples != c.samples);
    }

    TEST_CASE("noise after the receiver band-pass matches the density within 0.2 dB")
    {
        NoiseSpec s;
        FirFilter bpf = design_bandpass(58e9, 1.5e9, kDefaultSampleRate, 40.0);
        Waveform z{std::vector<double>(400000, 0.0), kDefaultSampleRate, 0.0};
        const auto noisy = add_noise(z, s, 9);
        const auto out = filter_apply(bpf, noisy);
        double p = 0.0;
        for (std::size_t k = bpf.size(); k < out.size(); ++k) {
            p += out.samples[k] * out.samples[k];
        }
        p /= static_cast<double>(out.size() - bpf.size());
        // Equivalent noise bandwidth of the realized taps (one-sided).
        double e = 0.0;
        for (double h : bpf.taps()) {
            e += h * h;
        }
        const double enbw = e * kDefaultSampleRate / 2.0;
        const double predicted = s.density() * enbw;
        CHECK(std::abs(10.0 * std::log10(p / predicted)) < 0.2);
    }
}
