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

#include "retrolink/engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

namespace retrolink
{

namespace
{
    constexpr double kPi = std::numbers::pi;
    constexpr double kEnvelopeStep = 1e-9;
    constexpr std::size_t kEnvelopeSmoothing = 10; // 1 ns bins -> 10 ns moving average

    std::uint64_t splitmix64(std::uint64_t x) noexcept
    {
        x += 0x9E3779B97F4A7C15ULL;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
        return x ^ (x >> 31);
    }

    /// Stream of independent seeds derived from the master seed.
    class SeedSequence
    {
      public:
        explicit SeedSequence(std::uint64_t master) : state_(master) {}
        std::uint64_t next() noexcept
        {
            state_ = splitmix64(state_);
            return state_;
        }

      private:
        std::uint64_t state_;
    };

    struct RadioState
    {
        RadioState(const RadioConfig& c, double rate) : cfg(c), rx(c, rate) {}

        const RadioConfig& cfg;
        ReceiveChain rx;
        std::vector<NoiseSource> noise;

        // Transmitted payload.
        std::vector<std::uint8_t> payload;
        std::uint32_t scrambler_seed = 1;
        std::vector<double> symbol_phase;
        double samples_per_symbol = 1.0;

        // Working buffers, [element][sample].
        std::vector<std::vector<double>> rx_buf, tx_buf, dphi;
        std::vector<double> data_block;
        ReceiveBlock blk;

        // Recorded while running.
        double latency = 0.0; // far transmitter symbol boundary -> local demodulator output
        std::vector<std::vector<double>> env_sum;
        std::vector<double> combined;
        std::vector<std::int64_t> mid_index;
        std::size_t next_mid = 0;
        std::vector<std::vector<double>> mid_element;
        std::vector<double> mid_combined;
    };

    void check_finite(std::span<const std::vector<double>> data, const char* what, char radio, double t)
    {
        for (std::size_t j = 0; j < data.size(); ++j) {
            for (double v : data[j]) {
                if (!std::isfinite(v)) {
                    std::ostringstream os;
                    os << "non-finite " << what << " sample at radio " << radio << ", element " << (j + 1)
                       << ", block starting " << t * 1e9 << " ns";
                    throw NumericalError(os.str());
                }
            }
        }
    }

    std::vector<double> smooth_envelope(const std::vector<double>& bins)
    {
        std::vector<double> out(bins.size());
        double acc = 0.0;
        for (std::size_t i = 0; i < bins.size(); ++i) {
            acc += bins[i];
            if (i >= kEnvelopeSmoothing) {
                acc -= bins[i - kEnvelopeSmoothing];
            }
            out[i] = acc / static_cast<double>(std::min(i + 1, kEnvelopeSmoothing));
        }
        return out;
    }

    double mean_of(std::span<const double> v)
    {
        return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    }
} // namespace

// --------------------------------------------------------------- LinkConfig

void LinkConfig::validate() const
{
    auto fail = [](const std::string& field, const std::string& what) { throw ConfigError(field + ": " + what); };
    try {
        radio_a.validate(sample_rate);
    } catch (const std::invalid_argument& e) {
        fail("radio_a." + std::string(e.what()).substr(0, std::string(e.what()).find(':')),
             std::string(e.what()).substr(std::string(e.what()).find(':') + 2));
    }
    try {
        radio_b.validate(sample_rate);
    } catch (const std::invalid_argument& e) {
        fail("radio_b." + std::string(e.what()).substr(0, std::string(e.what()).find(':')),
             std::string(e.what()).substr(std::string(e.what()).find(':') + 2));
    }
    if (!(sample_rate > 0.0) || !std::isfinite(sample_rate)) {
        fail("sample_rate", "must be positive");
    }
    if (!(distance > 0.0)) {
        fail("distance", "must be positive");
    }
    if (!std::isfinite(angle_a) || std::abs(angle_a) >= 0.5 * kPi) {
        fail("angle_a", "must lie strictly inside (-90, 90) degrees");
    }
    if (!std::isfinite(angle_b) || std::abs(angle_b) >= 0.5 * kPi) {
        fail("angle_b", "must lie strictly inside (-90, 90) degrees");
    }
    if (!(extra_group_delay >= 0.0)) {
        fail("extra_group_delay", "must be non-negative");
    }
    if (!(duration > 0.0) || !std::isfinite(duration)) {
        fail("duration", "must be positive");
    }
    if (block_size == 0) {
        fail("block_size", "must be at least 1");
    }
    if (!(noise_figure_db >= 0.0)) {
        fail("noise_figure", "must be non-negative");
    }
    if (path_loss_override_db && !std::isfinite(*path_loss_override_db)) {
        fail("path_loss_override", "must be finite");
    }
    if (radio_a.qpsk_mode != QpskMode::differential) {
        fail("radio_a.qpsk_mode", "link runs need differential QPSK; unwrapped coherent symbols random-walk");
    }
    if (radio_b.qpsk_mode != QpskMode::differential) {
        fail("radio_b.qpsk_mode", "link runs need differential QPSK; unwrapped coherent symbols random-walk");
    }
    if (radio_a.f_tx != radio_b.f_rx || radio_b.f_tx != radio_a.f_rx) {
        fail("radio_b.f_rx", "each radio must receive on the other's transmit frequency");
    }
    const double min_delay = (distance - radio_a.n_elements * radio_a.element_spacing -
                              radio_b.n_elements * radio_b.element_spacing) /
                                 kSpeedOfLight +
                             extra_group_delay;
    const double max_block = min_delay * sample_rate - static_cast<double>(kInterpTaps);
    if (static_cast<double>(block_size) > max_block) {
        fail("block_size", "exceeds the shortest propagation delay (" + std::to_string(max_block) + " samples)");
    }
}

ChannelParams LinkConfig::channel_params() const
{
    ChannelParams p;
    p.distance = distance;
    p.angle_a = angle_a;
    p.angle_b = angle_b;
    p.extra_group_delay = extra_group_delay;
    p.freq_a_to_b = radio_a.f_tx;
    p.freq_b_to_a = radio_b.f_tx;
    p.pattern_a = radio_a.pattern;
    p.pattern_b = radio_b.pattern;
    p.path_loss_override_db = path_loss_override_db;
    return p;
}

std::optional<double> LinkMetrics::link_lock_time() const
{
    if (!radio[0].lock_time || !radio[1].lock_time) {
        return std::nullopt;
    }
    return std::max(*radio[0].lock_time, *radio[1].lock_time);
}

// ----------------------------------------------------------- lock & metrics

std::optional<double> detect_lock(std::span<const double> trace, double step, const LockCriteria& criteria)
{
    if (!(step > 0.0)) {
        throw std::invalid_argument("trace step must be positive");
    }
    const auto window = static_cast<std::size_t>(std::llround(criteria.window / step));
    if (window == 0 || trace.size() < 2 * window) {
        throw std::invalid_argument("trace shorter than two lock windows");
    }
    const double final_value = mean_of(trace.last(window));
    const double initial_value = criteria.baseline ? *criteria.baseline : mean_of(trace.first(window));
    if (criteria.min_growth > 0.0 && !(final_value > criteria.min_growth * initial_value)) {
        return std::nullopt;
    }
    const double band = criteria.tolerance * std::abs(final_value);
    // Earliest window [t, t + window] with every sample in band.
    std::size_t run = 0;
    for (std::size_t k = 0; k < trace.size(); ++k) {
        if (std::abs(trace[k] - final_value) <= band) {
            ++run;
            if (run > window) {
                return static_cast<double>(k - window) * step;
            }
        } else {
            run = 0;
        }
    }
    return std::nullopt;
}

double measure_snr_gain(std::span<const std::vector<double>> element_samples, std::span<const double> combined_samples,
                        std::span<const double> reference)
{
    const std::size_t n = combined_samples.size();
    if (element_samples.empty() || n < 3 || reference.size() != n) {
        throw UnlockedInput("SNR gain needs at least three aligned symbols per stream");
    }
    const auto snr_db = [&](std::span<const double> s) {
        double sig = 0.0;
        double mean_err = 0.0;
        std::vector<double> err(n - 1);
        for (std::size_t i = 1; i < n; ++i) {
            err[i - 1] = wrap_phase(wrap_phase(s[i] - s[i - 1]) - reference[i]);
            mean_err += err[i - 1];
            sig += reference[i] * reference[i];
        }
        mean_err /= static_cast<double>(n - 1);
        double var = 0.0;
        for (double e : err) {
            var += (e - mean_err) * (e - mean_err);
        }
        var /= static_cast<double>(n - 1);
        sig /= static_cast<double>(n - 1);
        if (!(var > 0.0)) {
            var = std::numeric_limits<double>::min();
        }
        return 10.0 * std::log10(sig / var);
    };
    for (const auto& e : element_samples) {
        if (e.size() != n) {
            throw UnlockedInput("element and combined sample counts differ");
        }
    }
    const double combined = snr_db(combined_samples);
    // Below roughly 0 dB the decisions are mostly wrong: not a locked link.
    if (combined < 3.0) {
        throw UnlockedInput("combined SNR " + std::to_string(combined) + " dB: link not locked");
    }
    double mean_elem = 0.0;
    for (const auto& e : element_samples) {
        mean_elem += snr_db(e);
    }
    mean_elem /= static_cast<double>(element_samples.size());
    return combined - mean_elem;
}

std::vector<EyePoint> eye_samples(const PhaseStream& combined, double symbol_period, double symbol_start,
                                  std::size_t decimation)
{
    std::vector<EyePoint> out;
    const auto lag = static_cast<std::size_t>(std::llround(symbol_period * combined.rate));
    if (lag == 0 || combined.size() <= lag) {
        return out;
    }
    decimation = std::max<std::size_t>(decimation, 1);
    const double fold = 2.0 * symbol_period;
    out.reserve((combined.size() - lag) / decimation + 1);
    for (std::size_t k = lag; k < combined.size(); k += decimation) {
        const double t = combined.time_at(k) - symbol_start;
        double ft = std::fmod(t, fold);
        if (ft < 0.0) {
            ft += fold;
        }
        out.push_back({ft, wrap_phase(combined.values[k] - combined.values[k - lag])});
    }
    return out;
}

double eye_opening(std::span<const EyePoint> eye, double symbol_period, double half_width)
{
    // Four clusters around -135, -45, 45, 135 degrees.
    std::array<double, 4> lo;
    std::array<double, 4> hi;
    lo.fill(std::numeric_limits<double>::infinity());
    hi.fill(-std::numeric_limits<double>::infinity());
    bool any = false;
    for (const auto& p : eye) {
        const double off = std::min(std::abs(p.fold_time - 0.5 * symbol_period), std::abs(p.fold_time - 1.5 * symbol_period));
        if (off > half_width) {
            continue;
        }
        const double x = p.phase + kPi; // [0, 2 pi)
        auto c = static_cast<std::size_t>(std::floor(x / (0.5 * kPi)));
        c = std::min<std::size_t>(c, 3);
        lo[c] = std::min(lo[c], p.phase);
        hi[c] = std::max(hi[c], p.phase);
        any = true;
    }
    if (!any) {
        return 0.0;
    }
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < 4; ++c) {
        const std::size_t d = (c + 1) % 4;
        if (!std::isfinite(lo[c]) || !std::isfinite(lo[d])) {
            return 0.0; // a level never appeared
        }
        const double gap = (d == 0 ? lo[d] + 2.0 * kPi : lo[d]) - hi[c];
        worst = std::min(worst, gap);
    }
    return std::max(worst, 0.0);
}

// ---------------------------------------------------------------- run_link

LinkMetrics run_link(const LinkConfig& cfg)
{
    cfg.validate();
    const double rate = cfg.sample_rate;
    const ArrayGeometry geom_a = cfg.radio_a.geometry();
    const ArrayGeometry geom_b = cfg.radio_b.geometry();
    const ChannelMatrix chan = build_channel(geom_a, geom_b, cfg.channel_params());

    std::array<RadioState, 2> radios{RadioState(cfg.radio_a, rate), RadioState(cfg.radio_b, rate)};
    // Incoming propagation for each radio: A hears B (reverse), B hears A (forward).
    std::array<Propagator, 2> incoming{Propagator(chan.reverse, rate), Propagator(chan.forward, rate)};
    std::array<const ChannelLink*, 2> incoming_link{&chan.reverse, &chan.forward};

    const auto total = static_cast<std::size_t>(std::llround(cfg.duration * rate));
    const auto env_bin = static_cast<std::size_t>(std::llround(kEnvelopeStep * rate));
    const std::size_t n_bins = total / env_bin + 1;

    SeedSequence seeds(cfg.seed);
    NoiseSpec noise_spec;
    noise_spec.noise_figure_db = cfg.noise_figure_db;

    for (auto& r : radios) {
        const std::size_t n = r.cfg.n_elements;
        for (std::size_t j = 0; j < n; ++j) {
            noise_spec.reference_bandwidth = r.cfg.bpf_bandwidth;
            r.noise.emplace_back(noise_spec, rate, seeds.next());
        }
        // Payload long enough to cover the run.
        const auto symbols = static_cast<std::size_t>(std::ceil(cfg.duration * r.cfg.symbol_rate)) + 2;
        std::mt19937_64 bit_rng(seeds.next());
        r.payload.resize(2 * symbols);
        for (auto& b : r.payload) {
            b = static_cast<std::uint8_t>(bit_rng() >> 63);
        }
        r.scrambler_seed = static_cast<std::uint32_t>(seeds.next() & Prbs23::kPeriod);
        r.symbol_phase = qpsk_symbols(scramble(r.payload, r.scrambler_seed), r.cfg.qpsk_mode);
        r.samples_per_symbol = rate / r.cfg.symbol_rate;

        // Omni startup: before the far radio is heard the phasing states have
        // random-walked to mutually uncorrelated values.
        std::mt19937_64 phase_rng(seeds.next());
        std::uniform_real_distribution<double> uniform(-kPi, kPi);
        std::vector<double> start(n);
        for (auto& p : start) {
            p = uniform(phase_rng);
        }
        r.rx.set_phasing_state(start);

        r.rx_buf.resize(n);
        r.tx_buf.resize(n);
        r.dphi.resize(n);
        r.env_sum.assign(n, std::vector<double>(n_bins, 0.0));
        r.combined.reserve(total);
    }

    // Mid-symbol sampling instants of the stream each radio receives.
    for (std::size_t me = 0; me < 2; ++me) {
        RadioState& r = radios[me];
        const RadioState& far = radios[1 - me];
        r.latency = incoming_link[me]->mean_delay() + r.rx.latency();
        const double period = 1.0 / far.cfg.symbol_rate;
        for (std::size_t i = 0; i < far.symbol_phase.size(); ++i) {
            const auto idx = std::llround(((static_cast<double>(i) + 0.5) * period + r.latency) * rate);
            if (idx >= static_cast<long long>(total)) {
                break;
            }
            r.mid_index.push_back(idx);
        }
        r.mid_element.assign(r.cfg.n_elements, {});
        r.mid_combined.reserve(r.mid_index.size());
    }

    const char names[2] = {'A', 'B'};
    for (std::size_t start = 0; start < total; start += cfg.block_size) {
        const std::size_t len = std::min(cfg.block_size, total - start);
        const double t_start = static_cast<double>(start) / rate;

        // Receive first: every incoming sample in this block left the far radio
        // at least one propagation delay ago, which is longer than a block.
        for (std::size_t me = 0; me < 2; ++me) {
            RadioState& r = radios[me];
            incoming[me].pull(len, r.rx_buf);
            for (std::size_t j = 0; j < r.rx_buf.size(); ++j) {
                r.noise[j].add_to(r.rx_buf[j]);
            }
            r.rx.process(r.rx_buf, t_start, r.blk);
            check_finite(r.blk.phi_low, "phase", names[me], t_start);

            for (std::size_t j = 0; j < r.blk.amplitude.size(); ++j) {
                const auto& amp = r.blk.amplitude[j];
                for (std::size_t k = 0; k < len; ++k) {
                    r.env_sum[j][(start + k) / env_bin] += amp[k];
                }
            }
            r.combined.insert(r.combined.end(), r.blk.combined_phase.begin(), r.blk.combined_phase.end());
            // Decisions use increments of the element-mean phase. Increments of
            // data_high would also carry the phasing low-pass's slope, which follows
            // the random walk of the differential data phase.
            const auto block_end = static_cast<std::int64_t>(start + len);
            while (r.next_mid < r.mid_index.size() && r.mid_index[r.next_mid] < block_end) {
                const auto off = static_cast<std::size_t>(r.mid_index[r.next_mid] - static_cast<std::int64_t>(start));
                for (std::size_t j = 0; j < r.blk.phi.size(); ++j) {
                    r.mid_element[j].push_back(r.blk.phi[j][off]);
                }
                r.mid_combined.push_back(r.blk.combined_phase[off]);
                ++r.next_mid;
            }
        }

        for (std::size_t me = 0; me < 2; ++me) {
            RadioState& r = radios[me];
            r.data_block.resize(len);
            for (std::size_t k = 0; k < len; ++k) {
                auto idx = static_cast<std::size_t>(static_cast<double>(start + k) / r.samples_per_symbol + 1e-9);
                r.data_block[k] = r.symbol_phase[std::min(idx, r.symbol_phase.size() - 1)];
            }
            delta_phases_into(r.blk.phi_low, r.dphi);
            transmit_block(r.dphi, r.data_block, t_start, rate, r.cfg, r.tx_buf);
            check_finite(r.tx_buf, "transmit", names[me], t_start);
        }
        // A's transmission feeds B's incoming propagator and vice versa.
        incoming[1].push(radios[0].tx_buf);
        incoming[0].push(radios[1].tx_buf);
    }

    LinkMetrics m;
    m.duration = static_cast<double>(total) / rate;
    m.envelope_step = kEnvelopeStep;
    m.latency_a = radios[0].latency;
    m.latency_b = radios[1].latency;
    m.out_of_coverage = chan.out_of_coverage;

    for (std::size_t me = 0; me < 2; ++me) {
        RadioState& r = radios[me];
        const RadioState& far = radios[1 - me];
        RadioMetrics& rm = m.radio[me];
        const std::size_t n = r.cfg.n_elements;

        // Envelope: per-bin mean, 10 ns moving average, 1 ns spacing. The last
        // partial bin is dropped.
        const std::size_t full_bins = total / env_bin;
        rm.envelope.resize(n);
        rm.mean_envelope.assign(full_bins, 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            std::vector<double> bins(r.env_sum[j].begin(), r.env_sum[j].begin() + static_cast<std::ptrdiff_t>(full_bins));
            for (auto& b : bins) {
                b /= static_cast<double>(env_bin);
            }
            rm.envelope[j] = smooth_envelope(bins);
            for (std::size_t i = 0; i < full_bins; ++i) {
                rm.mean_envelope[i] += rm.envelope[j][i] / static_cast<double>(n);
            }
        }

        // Omni reference: far elements adding with uncorrelated phases, plus in-band noise.
        const ChannelLink& link = *incoming_link[me];
        const double a_far = amplitude_for_dbm(far.cfg.tx_power_dbm);
        NoiseSpec ns;
        ns.noise_figure_db = cfg.noise_figure_db;
        ns.reference_bandwidth = r.cfg.bpf_bandwidth;
        double omni_power = 0.0;
        for (std::size_t j = 0; j < link.n_rx; ++j) {
            for (std::size_t i = 0; i < link.n_tx; ++i) {
                const double g = link.gain[i * link.n_rx + j];
                omni_power += 0.5 * g * g * a_far * a_far;
            }
        }
        omni_power = omni_power / static_cast<double>(link.n_rx) + ns.in_band_power();
        rm.omni_level = std::sqrt(2.0 * omni_power);

        LockCriteria criteria;
        criteria.baseline = rm.omni_level;
        // At least half of the n-fold power gain of a beam formed on this radio.
        criteria.min_growth = std::sqrt(0.5 * static_cast<double>(link.n_tx));
        const auto window = static_cast<std::size_t>(std::llround(criteria.window / kEnvelopeStep));
        if (rm.mean_envelope.size() >= 2 * window) {
            std::span<const double> env(rm.mean_envelope);
            const double init = mean_of(env.first(window));
            const double fin = mean_of(env.last(window));
            rm.power_ratio_db = 20.0 * std::log10(std::max(fin, 1e-300) / std::max(init, 1e-300));
            rm.lock_time = detect_lock(env, kEnvelopeStep, criteria);
        }
        if (!rm.lock_time) {
            continue;
        }

        // Post-lock symbols: stream index i >= first with the mid-sample at or after lock.
        const double period = 1.0 / far.cfg.symbol_rate;
        const std::size_t have = r.mid_combined.size();
        std::size_t first = have;
        for (std::size_t i = 1; i < have; ++i) {
            if (static_cast<double>(r.mid_index[i - 1]) / rate >= *rm.lock_time) {
                first = i;
                break;
            }
        }
        if (first + 2 >= have) {
            continue;
        }

        // Stream symbol 0 is the reference; symbol i carries payload bits 2(i-1), 2(i-1)+1.
        std::vector<std::uint8_t> decoded(far.payload.size(), 0);
        for (std::size_t i = first; i < have; ++i) {
            const double v = wrap_phase(r.mid_combined[i] - r.mid_combined[i - 1]);
            const std::size_t bit = 2 * (i - 1);
            if (bit + 1 >= decoded.size()) {
                break;
            }
            qpsk_decide(v, decoded[bit], decoded[bit + 1]);
        }
        const auto payload_rx = descramble(decoded, far.scrambler_seed);
        for (std::size_t i = first; i < have; ++i) {
            const std::size_t bit = 2 * (i - 1);
            if (bit + 1 >= decoded.size()) {
                break;
            }
            for (std::size_t b = bit; b < bit + 2; ++b) {
                rm.bit_errors += payload_rx[b] != far.payload[b] ? 1U : 0U;
                ++rm.bits_compared;
            }
            ++rm.symbols_compared;
        }
        rm.ber = rm.bits_compared > 0 ? static_cast<double>(rm.bit_errors) / static_cast<double>(rm.bits_compared) : 1.0;

        // Combining gain over the same symbols (one extra leading sample for the first increment).
        std::vector<std::vector<double>> elem(n);
        for (std::size_t j = 0; j < n; ++j) {
            elem[j].assign(r.mid_element[j].begin() + static_cast<std::ptrdiff_t>(first - 1), r.mid_element[j].begin() + static_cast<std::ptrdiff_t>(have));
        }
        std::vector<double> comb(r.mid_combined.begin() + static_cast<std::ptrdiff_t>(first - 1), r.mid_combined.end());
        std::vector<double> ref(comb.size(), 0.0);
        for (std::size_t i = 1; i < ref.size(); ++i) {
            const std::size_t s = first - 1 + i;
            ref[i] = wrap_phase(far.symbol_phase[s] - far.symbol_phase[s - 1]);
        }
        try {
            rm.snr_gain_db = measure_snr_gain(elem, comb, ref);
        } catch (const UnlockedInput&) {
            rm.snr_gain_db.reset();
        }

        // Eye over the post-lock part of the combined stream.
        const auto lock_idx = static_cast<std::size_t>(std::llround(*rm.lock_time * rate));
        PhaseStream tail{std::vector<double>(r.combined.begin() + static_cast<std::ptrdiff_t>(std::min(lock_idx, r.combined.size())), r.combined.end()), rate,
                         static_cast<double>(lock_idx) / rate};
        rm.eye = eye_samples(tail, period, r.latency, 1);
        rm.eye_opening = eye_opening(rm.eye, period, 0.02 * period);
    }
    return m;
}

// ------------------------------------------------------------------ fields

namespace
{
    using Setter = std::function<void(LinkConfig&, double)>;
    using Getter = std::function<double(const LinkConfig&)>;

    struct Field
    {
        std::string name;
        Setter set;
        Getter get;
    };

    std::size_t to_count(double v, const char* name)
    {
        if (!(v >= 1.0) || v != std::floor(v) || v > 1e9) {
            throw ConfigError(std::string(name) + ": must be a positive integer");
        }
        return static_cast<std::size_t>(v);
    }

    template <class Member>
    void add_radio_fields(std::vector<Field>& out, const std::string& prefix, Member radio)
    {
        auto add = [&](const std::string& n, std::function<void(RadioConfig&, double)> s,
                       std::function<double(const RadioConfig&)> g) {
            out.push_back({prefix + n, [radio, s](LinkConfig& c, double v) { s(c.*radio, v); },
                           [radio, g](const LinkConfig& c) { return g(c.*radio); }});
        };
        add("f_rx_ghz", [](RadioConfig& r, double v) { r.f_rx = v * 1e9; }, [](const RadioConfig& r) { return r.f_rx / 1e9; });
        add("f_tx_ghz", [](RadioConfig& r, double v) { r.f_tx = v * 1e9; }, [](const RadioConfig& r) { return r.f_tx / 1e9; });
        add("n_elements", [](RadioConfig& r, double v) { r.n_elements = to_count(v, "n_elements"); },
            [](const RadioConfig& r) { return static_cast<double>(r.n_elements); });
        add("element_spacing_mm", [](RadioConfig& r, double v) { r.element_spacing = v * 1e-3; },
            [](const RadioConfig& r) { return r.element_spacing * 1e3; });
        add("tx_power_dbm", [](RadioConfig& r, double v) { r.tx_power_dbm = v; }, [](const RadioConfig& r) { return r.tx_power_dbm; });
        add("element_gain_dbi", [](RadioConfig& r, double v) { r.pattern.gain_dbi = v; },
            [](const RadioConfig& r) { return r.pattern.gain_dbi; });
        add("cone_half_angle_deg", [](RadioConfig& r, double v) { r.pattern.cone_half_angle = v * kDegree; },
            [](const RadioConfig& r) { return r.pattern.cone_half_angle / kDegree; });
        add("bpf_bandwidth_ghz", [](RadioConfig& r, double v) { r.bpf_bandwidth = v * 1e9; },
            [](const RadioConfig& r) { return r.bpf_bandwidth / 1e9; });
        add("bpf_stop_atten_db", [](RadioConfig& r, double v) { r.bpf_stop_atten_db = v; },
            [](const RadioConfig& r) { return r.bpf_stop_atten_db; });
        add("phase_lpf_cutoff_mhz", [](RadioConfig& r, double v) { r.phase_lpf_cutoff = v * 1e6; },
            [](const RadioConfig& r) { return r.phase_lpf_cutoff / 1e6; });
        add("symbol_rate_ghz", [](RadioConfig& r, double v) { r.symbol_rate = v * 1e9; },
            [](const RadioConfig& r) { return r.symbol_rate / 1e9; });
        add("conjugation_sign",
            [](RadioConfig& r, double v) {
                if (v != 1.0 && v != -1.0) {
                    throw ConfigError("conjugation_sign: must be +1 or -1");
                }
                r.conjugation_sign = static_cast<int>(v);
            },
            [](const RadioConfig& r) { return static_cast<double>(r.conjugation_sign); });
    }

    const std::vector<Field>& field_table()
    {
        static const std::vector<Field> table = [] {
            std::vector<Field> t;
            auto add = [&](std::string n, Setter s, Getter g) { t.push_back({std::move(n), std::move(s), std::move(g)}); };
            add("distance_m", [](LinkConfig& c, double v) { c.distance = v; }, [](const LinkConfig& c) { return c.distance; });
            add("angle_a_deg", [](LinkConfig& c, double v) { c.angle_a = v * kDegree; },
                [](const LinkConfig& c) { return c.angle_a / kDegree; });
            add("angle_b_deg", [](LinkConfig& c, double v) { c.angle_b = v * kDegree; },
                [](const LinkConfig& c) { return c.angle_b / kDegree; });
            add("extra_group_delay_ns", [](LinkConfig& c, double v) { c.extra_group_delay = v * 1e-9; },
                [](const LinkConfig& c) { return c.extra_group_delay * 1e9; });
            add("duration_us", [](LinkConfig& c, double v) { c.duration = v * 1e-6; },
                [](const LinkConfig& c) { return c.duration * 1e6; });
            add("sample_rate_ghz", [](LinkConfig& c, double v) { c.sample_rate = v * 1e9; },
                [](const LinkConfig& c) { return c.sample_rate / 1e9; });
            add("block_size", [](LinkConfig& c, double v) { c.block_size = to_count(v, "block_size"); },
                [](const LinkConfig& c) { return static_cast<double>(c.block_size); });
            add("seed",
                [](LinkConfig& c, double v) {
                    if (!(v >= 0.0) || v != std::floor(v) || v > 9007199254740992.0) {
                        throw ConfigError("seed: must be a non-negative integer");
                    }
                    c.seed = static_cast<std::uint64_t>(v);
                },
                [](const LinkConfig& c) { return static_cast<double>(c.seed); });
            add("path_loss_override_db", [](LinkConfig& c, double v) { c.path_loss_override_db = v; },
                [](const LinkConfig& c) {
                    return c.path_loss_override_db ? *c.path_loss_override_db : std::numeric_limits<double>::quiet_NaN();
                });
            add("noise_figure_db", [](LinkConfig& c, double v) { c.noise_figure_db = v; },
                [](const LinkConfig& c) { return c.noise_figure_db; });
            add_radio_fields(t, "radio_a.", &LinkConfig::radio_a);
            add_radio_fields(t, "radio_b.", &LinkConfig::radio_b);
            return t;
        }();
        return table;
    }

    const Field* find_field(std::string_view name)
    {
        for (const auto& f : field_table()) {
            if (f.name == name) {
                return &f;
            }
        }
        return nullptr;
    }
} // namespace

const std::vector<std::string>& config_fields()
{
    static const std::vector<std::string> names = [] {
        std::vector<std::string> n;
        for (const auto& f : field_table()) {
            n.push_back(f.name);
        }
        // Bare radio field names apply to both radios.
        for (const auto& f : field_table()) {
            if (f.name.rfind("radio_a.", 0) == 0) {
                n.push_back(f.name.substr(8));
            }
        }
        return n;
    }();
    return names;
}

void set_field(LinkConfig& cfg, std::string_view name, double value)
{
    if (const Field* f = find_field(name)) {
        f->set(cfg, value);
        return;
    }
    const Field* a = find_field("radio_a." + std::string(name));
    const Field* b = find_field("radio_b." + std::string(name));
    if (a && b) {
        a->set(cfg, value);
        b->set(cfg, value);
        return;
    }
    throw ConfigError("unknown field '" + std::string(name) + "'");
}

double get_field(const LinkConfig& cfg, std::string_view name)
{
    if (const Field* f = find_field(name)) {
        return f->get(cfg);
    }
    if (const Field* a = find_field("radio_a." + std::string(name))) {
        return a->get(cfg);
    }
    throw ConfigError("unknown field '" + std::string(name) + "'");
}

// ------------------------------------------------------------------- sweep

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept
{
    return index == 0 ? master : splitmix64(master ^ splitmix64(index));
}

std::vector<SweepRow> sweep(const LinkConfig& cfg, std::span<const SweepAxis> grid, SweepSeeds seeds,
                            unsigned max_threads)
{
    if (grid.empty()) {
        throw ConfigError("sweep grid is empty");
    }
    std::size_t points = 1;
    for (const auto& axis : grid) {
        if (axis.values.empty()) {
            throw ConfigError("sweep axis '" + axis.field + "' has no values");
        }
        LinkConfig probe = cfg;
        set_field(probe, axis.field, axis.values.front()); // rejects unknown names up front
        points *= axis.values.size();
    }

    std::vector<SweepRow> rows(points);
    for (std::size_t p = 0; p < points; ++p) {
        std::size_t rem = p;
        // Last axis varies fastest.
        std::vector<std::pair<std::string, double>> params(grid.size());
        for (std::size_t a = grid.size(); a-- > 0;) {
            params[a] = {grid[a].field, grid[a].values[rem % grid[a].values.size()]};
            rem /= grid[a].values.size();
        }
        rows[p].params = std::move(params);
        rows[p].seed = seeds == SweepSeeds::shared ? cfg.seed : derive_seed(cfg.seed, p);
    }

    auto run_point = [&](std::size_t p) {
        SweepRow& row = rows[p];
        try {
            LinkConfig c = cfg;
            for (const auto& [name, value] : row.params) {
                set_field(c, name, value);
            }
            c.seed = row.seed;
            const LinkMetrics m = run_link(c);
            row.lock_time = m.link_lock_time();
            row.ber = std::max(m.radio[0].ber, m.radio[1].ber);
            double g = 0.0;
            int count = 0;
            for (const auto& r : m.radio) {
                if (r.snr_gain_db) {
                    g += *r.snr_gain_db;
                    ++count;
                }
            }
            if (count > 0) {
                row.snr_gain_db = g / count;
            }
        } catch (const std::exception& e) {
            row.status = e.what();
        }
    };

    unsigned threads = max_threads != 0 ? max_threads : std::max(1U, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, points));
    std::atomic<std::size_t> next{0};
    {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) {
            pool.emplace_back([&] {
                for (std::size_t p = next++; p < points; p = next++) {
                    run_point(p);
                }
            });
        }
    }
    return rows;
}

} // namespace retrolink
