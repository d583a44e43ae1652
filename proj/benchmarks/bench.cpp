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


#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "retrolink/engine.hpp"

namespace
{

using namespace retrolink;

std::vector<double> tone(std::size_t n, double freq)
{
    std::vector<double> x(n);
    for (std::size_t k = 0; k < n; ++k) {
        x[k] = std::cos(kTwoPi * freq * static_cast<double>(k) / kDefaultSampleRate);
    }
    return x;
}

void BM_BandpassFir(benchmark::State& state)
{
    FirFilter bpf = design_bandpass(58e9, 1.5e9, kDefaultSampleRate);
    const auto in = tone(static_cast<std::size_t>(state.range(0)), 58e9);
    std::vector<double> out(in.size());
    for (auto _ : state) {
        bpf.process(in, out);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
    state.counters["taps"] = static_cast<double>(bpf.size());
}
BENCHMARK(BM_BandpassFir)->Arg(2048)->Arg(8192);

void BM_QuadratureDemod(benchmark::State& state)
{
    QuadratureDemodulator demod(58e9, kDefaultSampleRate);
    const std::size_t n = static_cast<std::size_t>(state.range(0));
    const auto in = tone(n, 58e9);
    std::vector<double> amp(n), phase(n);
    double t = 0.0;
    for (auto _ : state) {
        demod.process(in, t, amp, phase);
        t += static_cast<double>(n) / kDefaultSampleRate;
        benchmark::DoNotOptimize(phase.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_QuadratureDemod)->Arg(2048);

void BM_Propagator(benchmark::State& state)
{
    LinkConfig cfg;
    const ChannelMatrix chan = build_channel(cfg.radio_a.geometry(), cfg.radio_b.geometry(), cfg.channel_params());
    Propagator prop(chan.forward, cfg.sample_rate);
    const std::size_t block = 2048;
    const std::size_t n = chan.forward.n_tx;
    std::vector<std::vector<double>> tx(n, tone(block, 62e9));
    std::vector<std::vector<double>> rx(chan.forward.n_rx, std::vector<double>(block));
    for (auto _ : state) {
        prop.push(tx);
        prop.pull(block, rx);
        benchmark::DoNotOptimize(rx[0].data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(block));
}
BENCHMARK(BM_Propagator);

void BM_RunLink(benchmark::State& state)
{
    LinkConfig cfg;
    cfg.path_loss_override_db = LinkConfig::kReferencePathLossDb;
    cfg.duration = static_cast<double>(state.range(0)) * 1e-9;
    for (auto _ : state) {
        const LinkMetrics m = run_link(cfg);
        benchmark::DoNotOptimize(m.radio[0].mean_envelope.data());
    }
    state.counters["sim_ns"] = static_cast<double>(state.range(0));
}
BENCHMARK(BM_RunLink)->Arg(500)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
