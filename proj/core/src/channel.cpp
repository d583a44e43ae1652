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

#include "retrolink/channel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace retrolink
{

namespace
{
    constexpr double kInterpAttenDb = 80.0;

    double sinc(double x)
    {
        if (x == 0.0) {
            return 1.0;
        }
        const double px = std::numbers::pi * x;
        return std::sin(px) / px;
    }
} // namespace

double friis_gain(double distance, double freq, double g_tx_dbi, double g_rx_dbi)
{
    if (!(distance > 0.0)) {
        throw std::invalid_argument("Friis distance must be positive");
    }
    return g_tx_dbi + g_rx_dbi - 20.0 * std::log10(4.0 * std::numbers::pi * distance * freq / kSpeedOfLight);
}

// -------------------------------------------------------------- ChannelLink

double ChannelLink::min_delay() const { return *std::min_element(delay.begin(), delay.end()); }

double ChannelLink::max_delay() const { return *std::max_element(delay.begin(), delay.end()); }

double ChannelLink::mean_delay() const
{
    return std::accumulate(delay.begin(), delay.end(), 0.0) / static_cast<double>(delay.size());
}

ChannelLink ChannelLink::transposed() const
{
    ChannelLink t;
    t.n_tx = n_rx;
    t.n_rx = n_tx;
    t.freq = freq;
    t.gain.resize(gain.size());
    t.delay.resize(delay.size());
    for (std::size_t i = 0; i < n_tx; ++i) {
        for (std::size_t j = 0; j < n_rx; ++j) {
            t.gain[j * n_tx + i] = gain[i * n_rx + j];
            t.delay[j * n_tx + i] = delay[i * n_rx + j];
        }
    }
    return t;
}

// ---------------------------------------------------------------- geometry

std::pair<ArrayPlacement, ArrayPlacement> place_radios(double distance, double angle_a, double angle_b)
{
    ArrayPlacement a{};
    const Vec2 toward_b = a.direction(angle_a);
    ArrayPlacement b{};
    b.center = distance * toward_b;
    // B's boresight is chosen so that direction_b(angle_b) points back at A.
    b.boresight = (-toward_b).rotated(-angle_b);
    return {a, b};
}

namespace
{
    ChannelLink build_link(const ArrayGeometry& tx_geom, const ArrayPlacement& tx_place, const ElementPattern& tx_pat,
                           const ArrayGeometry& rx_geom, const ArrayPlacement& rx_place, const ElementPattern& rx_pat,
                           double freq, const ChannelParams& p, bool zero_gain)
    {
        ChannelLink link;
        link.n_tx = tx_geom.size();
        link.n_rx = rx_geom.size();
        link.freq = freq;
        link.gain.assign(link.n_tx * link.n_rx, 0.0);
        link.delay.assign(link.n_tx * link.n_rx, 0.0);
        for (std::size_t i = 0; i < link.n_tx; ++i) {
            const Vec2 pt = tx_place.element_position(tx_geom, i);
            for (std::size_t j = 0; j < link.n_rx; ++j) {
                const Vec2 pr = rx_place.element_position(rx_geom, j);
                const Vec2 v = pr - pt;
                const double d = v.norm();
                link.delay[i * link.n_rx + j] = d / kSpeedOfLight + p.extra_group_delay;
                if (zero_gain) {
                    continue;
                }
                const Vec2 u = (1.0 / d) * v;
                const double a_tx = tx_place.angle_of(u);
                const double a_rx = rx_place.angle_of(-u);
                if (!tx_pat.covers(a_tx) || !rx_pat.covers(a_rx)) {
                    continue;
                }
                const double g_db = p.path_loss_override_db
                                        ? -*p.path_loss_override_db
                                        : friis_gain(d, freq, tx_pat.gain_db(a_tx), rx_pat.gain_db(a_rx));
                link.gain[i * link.n_rx + j] = std::pow(10.0, g_db / 20.0);
            }
        }
        return link;
    }
} // namespace

ChannelMatrix build_channel(const ArrayGeometry& geom_a, const ArrayGeometry& geom_b, const ChannelParams& params)
{
    if (!(params.distance > 0.0)) {
        throw std::invalid_argument("radio distance must be positive");
    }
    if (params.extra_group_delay < 0.0) {
        throw std::invalid_argument("extra group delay must be non-negative");
    }
    const double aperture = std::max(geom_a.aperture(), geom_b.aperture());
    if (params.distance < 10.0 * aperture) {
        throw std::invalid_argument("radios must be in each other's far field (distance >= 10 x aperture)");
    }

    ChannelMatrix chan;
    chan.params = params;
    std::tie(chan.placement_a, chan.placement_b) = place_radios(params.distance, params.angle_a, params.angle_b);
    chan.out_of_coverage = !params.pattern_a.covers(params.angle_a) || !params.pattern_b.covers(params.angle_b);

    chan.forward = build_link(geom_a, chan.placement_a, params.pattern_a, geom_b, chan.placement_b, params.pattern_b,
                              params.freq_a_to_b, params, chan.out_of_coverage);
    chan.reverse = build_link(geom_b, chan.placement_b, params.pattern_b, geom_a, chan.placement_a, params.pattern_a,
                              params.freq_b_to_a, params, chan.out_of_coverage);
    return chan;
}

// ------------------------------------------------------- fractional delay

DelayTaps DelayTaps::design(double delay, double rate)
{
    if (delay < 0.0 || !std::isfinite(delay)) {
        throw std::invalid_argument("delay must be finite and non-negative");
    }
    DelayTaps d;
    const double samples = delay * rate;
    double whole = std::floor(samples);
    double frac = samples - whole;
    // Snap values within rounding of an integer so exact shifts stay exact.
    if (frac > 1.0 - 1e-9) {
        whole += 1.0;
        frac = 0.0;
    } else if (frac < 1e-9) {
        frac = 0.0;
    }
    d.whole = static_cast<std::int64_t>(whole);
    d.fraction = frac;
    if (frac == 0.0) {
        d.taps.fill(0.0);
        d.taps[kInterpLead] = 1.0;
        return d;
    }
    const double beta = kaiser_beta(kInterpAttenDb);
    const double half = 0.5 * static_cast<double>(kInterpTaps);
    const double norm = std::cyl_bessel_i(0.0, beta);
    for (std::size_t m = 0; m < kInterpTaps; ++m) {
        const double t = static_cast<double>(m) - static_cast<double>(kInterpLead) - frac;
        const double r = t / half;
        const double w = std::cyl_bessel_i(0.0, beta * std::sqrt(std::max(0.0, 1.0 - r * r))) / norm;
        d.taps[m] = sinc(t) * w;
    }
    return d;
}

Waveform fractional_delay(const Waveform& wave, double delay)
{
    const auto d = DelayTaps::design(delay, wave.rate);
    Waveform out{std::vector<double>(wave.size(), 0.0), wave.rate, wave.t0};
    const auto n = static_cast<std::int64_t>(wave.size());
    for (std::int64_t k = 0; k < n; ++k) {
        double acc = 0.0;
        for (std::size_t m = 0; m < kInterpTaps; ++m) {
            const std::int64_t src = k - d.shift() - static_cast<std::int64_t>(m);
            if (src >= 0 && src < n) {
                acc += d.taps[m] * wave.samples[static_cast<std::size_t>(src)];
            }
        }
        out.samples[static_cast<std::size_t>(k)] = acc;
    }
    return out;
}

// -------------------------------------------------------------- Propagator

Propagator::Propagator(const ChannelLink& link, double rate)
    : n_tx_(link.n_tx)
    , n_rx_(link.n_rx)
{
    if (n_tx_ == 0 || n_rx_ == 0) {
        throw std::invalid_argument("channel link has no elements");
    }
    std::int64_t max_shift = 0;
    min_shift_ = std::numeric_limits<std::int64_t>::max();
    for (std::size_t i = 0; i < n_tx_; ++i) {
        for (std::size_t j = 0; j < n_rx_; ++j) {
            Pair p{i, j, link.gain_at(i, j), DelayTaps::design(link.delay_at(i, j), rate)};
            // Store taps reversed so the inner loop is a forward dot product.
            std::reverse(p.taps.taps.begin(), p.taps.taps.end());
            min_shift_ = std::min(min_shift_, p.taps.shift());
            max_shift = std::max(max_shift, p.taps.shift());
            pairs_.push_back(p);
        }
    }
    max_reach_ = max_shift + static_cast<std::int64_t>(kInterpTaps);
    base_ = -max_reach_;
    history_.assign(n_tx_, std::vector<double>(static_cast<std::size_t>(max_reach_), 0.0));
}

void Propagator::push(std::span<const std::vector<double>> tx_block)
{
    if (tx_block.size() != n_tx_) {
        throw std::invalid_argument("transmit block has the wrong element count");
    }
    const std::size_t len = tx_block[0].size();
    for (std::size_t i = 0; i < n_tx_; ++i) {
        if (tx_block[i].size() != len) {
            throw std::invalid_argument("transmit element blocks differ in length");
        }
        history_[i].insert(history_[i].end(), tx_block[i].begin(), tx_block[i].end());
    }
    tx_end_ += static_cast<std::int64_t>(len);
}

void Propagator::pull(std::size_t count, std::span<std::vector<double>> rx_block)
{
    if (rx_block.size() != n_rx_) {
        throw std::invalid_argument("receive block has the wrong element count");
    }
    const std::int64_t rx_end = rx_pos_ + static_cast<std::int64_t>(count);
    if (tx_needed(rx_end) > tx_end_) {
        throw std::logic_error("propagation would read transmit samples not yet produced (" +
                               std::to_string(tx_needed(rx_end)) + " > " + std::to_string(tx_end_) + ")");
    }
    for (auto& rx : rx_block) {
        rx.assign(count, 0.0);
    }
    for (const auto& p : pairs_) {
        if (p.gain == 0.0) {
            continue;
        }
        const double* h = p.taps.taps.data();
        // Oldest sample feeding rx_pos_.
        const std::int64_t first = rx_pos_ - p.taps.shift() - static_cast<std::int64_t>(kInterpTaps - 1);
        const double* x = history_[p.tx].data() + (first - base_);
        double* y = rx_block[p.rx].data();
        const double g = p.gain;
        for (std::size_t k = 0; k < count; ++k) {
            const double* xk = x + k;
            double acc = 0.0;
#pragma omp simd reduction(+ : acc)
            for (std::size_t m = 0; m < kInterpTaps; ++m) {
                acc += h[m] * xk[m];
            }
            y[k] += g * acc;
        }
    }
    rx_pos_ = rx_end;

    // Drop history that no future pull can reach.
    const std::int64_t keep_from = rx_pos_ - max_reach_;
    const std::int64_t drop = keep_from - base_;
    if (drop > 0 && drop >= static_cast<std::int64_t>(history_[0].size() / 2)) {
        for (auto& h : history_) {
            h.erase(h.begin(), h.begin() + drop);
        }
        base_ = keep_from;
    }
}

std::vector<Waveform> propagate(std::span<const Waveform> tx, const ChannelMatrix& chan, Direction dir)
{
    const ChannelLink& link = chan.link(dir);
    if (tx.size() != link.n_tx) {
        throw std::invalid_argument("expected " + std::to_string(link.n_tx) + " transmit waveforms");
    }
    const double rate = tx[0].rate;
    const std::size_t len = tx[0].size();
    for (const auto& w : tx) {
        if (std::abs(w.rate - rate) > 1e-12 * rate) {
            throw RateMismatch("transmit waveforms do not share a sample rate");
        }
        if (w.size() != len || w.t0 != tx[0].t0) {
            throw std::invalid_argument("transmit waveforms are not aligned");
        }
    }
    Propagator prop(link, rate);
    std::vector<std::vector<double>> block(link.n_tx);
    for (std::size_t i = 0; i < link.n_tx; ++i) {
        block[i] = tx[i].samples;
    }
    prop.push(block);
    // Silence after the end so the interpolator's look-ahead is defined.
    const std::int64_t pad = std::max<std::int64_t>(0, prop.tx_needed(static_cast<std::int64_t>(len)) - prop.pushed());
    if (pad > 0) {
        std::vector<std::vector<double>> zeros(link.n_tx, std::vector<double>(static_cast<std::size_t>(pad), 0.0));
        prop.push(zeros);
    }
    std::vector<std::vector<double>> rx(link.n_rx);
    prop.pull(len, rx);
    std::vector<Waveform> out;
    out.reserve(link.n_rx);
    for (auto& r : rx) {
        out.push_back(Waveform{std::move(r), rate, tx[0].t0});
    }
    return out;
}

// ------------------------------------------------------------------- noise

double NoiseSpec::density() const noexcept
{
    return kBoltzmann * temperature * std::pow(10.0, noise_figure_db / 10.0);
}

NoiseSource::NoiseSource(const NoiseSpec& spec, double rate, std::uint64_t seed)
    : rng_(seed)
    , dist_(0.0, std::sqrt(spec.sample_variance(rate)))
{
    if (spec.noise_figure_db < 0.0) {
        throw std::invalid_argument("noise figure must be non-negative");
    }
}

void NoiseSource::add_to(std::span<double> samples)
{
    for (auto& s : samples) {
        s += dist_(rng_);
    }
}

Waveform add_noise(const Waveform& wave, const NoiseSpec& spec, std::uint64_t seed)
{
    Waveform out = wave;
    NoiseSource src(spec, wave.rate, seed);
    src.add_to(out.samples);
    return out;
}

} // namespace retrolink
