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

#include "retrolink/cli.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <ostream>

#include <CLI11.hpp>

namespace retrolink::cli
{

namespace
{
    namespace fs = std::filesystem;

    struct CommonOptions
    {
        std::string config;
        std::string out = "retrolink_out";
        std::optional<std::uint64_t> seed;
        std::string duration;
        bool paper_pathloss = false;
    };

    void add_common(CLI::App* cmd, CommonOptions& o)
    {
        cmd->add_option("--config", o.config, "JSON configuration file (defaults when omitted)");
        cmd->add_option("--out", o.out, "Output directory")->capture_default_str();
        cmd->add_option("--seed", o.seed, "Override the master seed");
        cmd->add_option("--duration", o.duration, "Simulated time, e.g. 5us, 100ns, 2e-6");
        cmd->add_flag("--paper-pathloss", o.paper_pathloss, "Use the reference 75 dB element-to-element loss");
    }

    LinkConfig resolve(const CommonOptions& o)
    {
        LinkConfig cfg = o.config.empty() ? LinkConfig{} : load_config(o.config);
        if (o.seed) {
            cfg.seed = *o.seed;
        }
        if (!o.duration.empty()) {
            cfg.duration = parse_duration(o.duration);
        }
        if (o.paper_pathloss) {
            cfg.path_loss_override_db = LinkConfig::kReferencePathLossDb;
        }
        cfg.validate();
        return cfg;
    }

    /// Writes through a temporary name so a failed run never leaves a half-written file.
    void write_file(const fs::path& path, const std::function<void(std::ostream&)>& body)
    {
        const fs::path tmp = path.string() + ".tmp";
        {
            std::ofstream os(tmp, std::ios::binary);
            if (!os) {
                throw std::runtime_error("cannot write '" + tmp.string() + "'");
            }
            body(os);
            if (!os) {
                throw std::runtime_error("write failed for '" + tmp.string() + "'");
            }
        }
        fs::rename(tmp, path);
    }

    void ensure_dir(const std::string& dir)
    {
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (ec) {
            throw std::runtime_error("cannot create output directory '" + dir + "': " + ec.message());
        }
    }

    int cmd_run(const CommonOptions& o, bool timing, std::ostream& out)
    {
        const LinkConfig cfg = resolve(o);
        ensure_dir(o.out);
        const auto t0 = std::chrono::steady_clock::now();
        const LinkMetrics m = run_link(cfg);
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

        const ReportFiles files;
        const fs::path dir(o.out);
        write_file(dir / files.envelope, [&](std::ostream& os) { write_envelope_csv(os, m); });
        write_file(dir / files.eye, [&](std::ostream& os) { write_eye_csv(os, m); });
        const std::string report = build_report(cfg, m, files, timing ? std::optional<double>(wall) : std::nullopt);
        write_file(dir / "report.json", [&](std::ostream& os) { os << report; });

        const auto lock = m.link_lock_time();
        out << "radio A lock: " << (m.radio[0].lock_time ? format_number(*m.radio[0].lock_time * 1e6) + " us" : "none")
            << ", radio B lock: " << (m.radio[1].lock_time ? format_number(*m.radio[1].lock_time * 1e6) + " us" : "none")
            << "\n";
        if (lock) {
            out << "BER A<-B " << format_number(m.radio[0].ber) << ", B<-A " << format_number(m.radio[1].ber) << "\n";
        }
        out << "wrote " << (dir / "report.json").string() << "\n";
        return lock ? kExitOk : kExitNoLock;
    }

    int cmd_sweep(const CommonOptions& o, const std::vector<std::string>& grid_specs, bool shared, unsigned threads,
                  std::ostream& out)
    {
        if (grid_specs.empty()) {
            throw ConfigError("sweep needs at least one --grid FIELD=v1,v2,...");
        }
        std::vector<SweepAxis> grid;
        for (const auto& g : grid_specs) {
            grid.push_back(parse_grid(g));
        }
        const LinkConfig cfg = resolve(o);
        ensure_dir(o.out);
        const auto rows = sweep(cfg, grid, shared ? SweepSeeds::shared : SweepSeeds::derived, threads);
        const fs::path path = fs::path(o.out) / "sweep.csv";
        write_file(path, [&](std::ostream& os) { write_sweep_csv(os, rows); });
        out << rows.size() << " points, wrote " << path.string() << "\n";
        return kExitOk;
    }

    int cmd_patterns(const CommonOptions& o, const std::string& mode, double step_deg, std::ostream& out)
    {
        if (mode != "static" && mode != "squint" && mode != "vanatta") {
            throw ConfigError("unknown pattern mode '" + mode + "' (static, squint, vanatta)");
        }
        if (!(step_deg > 0.0) || step_deg > 10.0) {
            throw ConfigError("step must lie in (0, 10] degrees");
        }
        const LinkConfig cfg = resolve(o);
        ensure_dir(o.out);
        const ArrayGeometry geom = cfg.radio_a.geometry();
        const double theta = cfg.angle_a;
        const double f_rx = cfg.radio_a.f_rx;
        const double f_tx = mode == "static" ? f_rx : cfg.radio_a.f_tx;
        const fs::path path = fs::path(o.out) / ("patterns_" + mode + ".csv");

        if (mode == "vanatta") {
            const ArrayPlacement frame;
            const auto steps = static_cast<long>(std::floor(80.0 / step_deg + 1e-9));
            write_file(path, [&](std::ostream& os) {
                os << "source_angle_deg,spread_rad,point_source_spread_rad\n";
                for (long i = -steps; i <= steps; ++i) {
                    const double a = static_cast<double>(i) * step_deg * kDegree;
                    const Vec2 src = cfg.distance * frame.direction(a);
                    os << format_number(static_cast<double>(i) * step_deg) << ','
                       << format_number(van_atta_path_check(geom, a, f_rx)) << ','
                       << format_number(van_atta_path_check(geom, src, f_rx)) << '\n';
                }
            });
            out << "wrote " << path.string() << "\n";
            return kExitOk;
        }

        PhaseVector phases = arrival_phases(geom, theta, f_rx);
        for (auto& p : phases) {
            p = -p;
        }
        const auto points = static_cast<std::size_t>(std::llround(180.0 / step_deg)) + 1;
        const auto pattern = pattern_sweep(phases, geom, f_tx, -0.5 * std::numbers::pi, 0.5 * std::numbers::pi, points);
        const double marker = mode == "squint" ? squint_angle(theta, f_rx, f_tx) : theta;
        write_file(path, [&](std::ostream& os) {
            os << "angle_deg,af_power_dB,closed_form_deg\n";
            for (const auto& p : pattern) {
                os << format_number(std::round(p.angle / kDegree * 1e9) / 1e9) << ',' << format_number(p.power_db) << ','
                   << format_number(marker / kDegree) << '\n';
            }
        });
        const auto peak = pattern_peak(pattern);
        out << "peak " << format_number(peak.angle / kDegree) << " deg, expected " << format_number(marker / kDegree)
            << " deg; wrote " << path.string() << "\n";
        return kExitOk;
    }

    int cmd_selftest(std::ostream& out)
    {
        int failed = 0;
        auto check = [&](const char* name, bool ok, const std::string& detail) {
            out << (ok ? "PASS " : "FAIL ") << name << ": " << detail << "\n";
            failed += ok ? 0 : 1;
        };
        const double friis = friis_gain(10.0, 60e9, 4.0, 4.0);
        const double closed = 8.0 - 20.0 * std::log10(4.0 * std::numbers::pi * 10.0 * 60e9 / kSpeedOfLight);
        check("friis", std::abs(friis - closed) < 0.01 && std::abs(friis + 80.0) < 0.05, format_number(friis) + " dB");

        const auto geom = ArrayGeometry::uniform_linear(4);
        PhaseVector conj = arrival_phases(geom, 42.0 * kDegree, 58e9);
        for (auto& p : conj) {
            p = -p;
        }
        const auto eq = pattern_peak(pattern_sweep(conj, geom, 58e9, -0.5 * std::numbers::pi, 0.5 * std::numbers::pi, 1801));
        check("retro peak", std::abs(eq.angle / kDegree - 42.0) <= 0.1, format_number(eq.angle / kDegree) + " deg");
        const auto sq = pattern_peak(pattern_sweep(conj, geom, 62e9, -0.5 * std::numbers::pi, 0.5 * std::numbers::pi, 1801));
        const double expect = std::asin(58.0 / 62.0 * std::sin(42.0 * kDegree)) / kDegree;
        check("squint", std::abs(sq.angle / kDegree - expect) < 1.0, format_number(sq.angle / kDegree) + " deg");
        check("van atta", van_atta_path_check(geom, 42.0 * kDegree, 58e9) < 1e-6, "plane-wave spread");

        const auto bpf = design_bandpass(58e9, 1.5e9, kDefaultSampleRate, 40.0);
        const auto mask = measure_bandpass_mask(bpf, 58e9, 1.5e9);
        check("band-pass mask", mask.passband_ripple_db <= 0.5 && mask.stopband_atten_db >= 40.0,
              std::to_string(bpf.size()) + " taps");
        return failed == 0 ? kExitOk : kExitError;
    }
} // namespace

int run_cli(std::span<const std::string> args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Two-radio retro-directive millimeter-wave link simulator", "retrolink"};
    app.require_subcommand(1);

    CommonOptions run_opts;
    bool report_timing = false;
    auto* run = app.add_subcommand("run", "Simulate one link and write envelope.csv, eye.csv, report.json");
    add_common(run, run_opts);
    run->add_flag("--report-timing", report_timing, "Include wall-clock time in report.json");

    CommonOptions sweep_opts;
    std::vector<std::string> grid;
    bool shared_seed = false;
    unsigned threads = 0;
    auto* sw = app.add_subcommand("sweep", "Run a parameter grid and write sweep.csv");
    add_common(sw, sweep_opts);
    sw->add_option("--grid", grid, "FIELD=v1,v2,... (repeatable; cartesian product)");
    sw->add_flag("--shared-seed", shared_seed, "Use the master seed for every point");
    sw->add_option("--threads", threads, "Concurrent runs (0 = hardware concurrency)");

    CommonOptions pat_opts;
    std::string mode;
    double step_deg = 0.1;
    auto* pat = app.add_subcommand("patterns", "Write array-pattern CSVs");
    add_common(pat, pat_opts);
    pat->add_option("--mode", mode, "static | squint | vanatta")->required();
    pat->add_option("--step", step_deg, "Angle grid step in degrees")->capture_default_str();

    auto* self = app.add_subcommand("selftest", "Quick closed-form checks");

    std::vector<const char*> argv{"retrolink"};
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitError;
    }

    try {
        if (run->parsed()) {
            return cmd_run(run_opts, report_timing, out);
        }
        if (sw->parsed()) {
            return cmd_sweep(sweep_opts, grid, shared_seed, threads, out);
        }
        if (pat->parsed()) {
            return cmd_patterns(pat_opts, mode, step_deg, out);
        }
        if (self->parsed()) {
            return cmd_selftest(out);
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitError;
    }
    return kExitError;
}

} // namespace retrolink::cli
