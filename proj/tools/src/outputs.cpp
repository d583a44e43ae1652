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

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ostream>

#include <nlohmann/json.hpp>

namespace retrolink::cli
{

namespace
{
    constexpr char kRadioNames[2] = {'A', 'B'};

    std::string csv_quote(const std::string& s)
    {
        if (s.find_first_of(",\"\n") == std::string::npos) {
            return s;
        }
        std::string out = "\"";
        for (char c : s) {
            out += c == '"' ? std::string("\"\"") : std::string(1, c);
        }
        return out + "\"";
    }

    nlohmann::ordered_json optional_number(const std::optional<double>& v, double scale = 1.0)
    {
        if (!v) {
            return nullptr;
        }
        return *v * scale;
    }
} // namespace

std::string format_number(double v)
{
    if (!std::isfinite(v)) {
        return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
    }
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, res.ptr};
}

void write_envelope_csv(std::ostream& os, const LinkMetrics& m)
{
    os << "time_ns,radio,element,amplitude\n";
    const double step_ns = m.envelope_step * 1e9;
    for (std::size_t r = 0; r < 2; ++r) {
        const auto& env = m.radio[r].envelope;
        for (std::size_t j = 0; j < env.size(); ++j) {
            for (std::size_t k = 0; k < env[j].size(); ++k) {
                os << format_number(static_cast<double>(k) * step_ns) << ',' << kRadioNames[r] << ',' << (j + 1) << ','
                   << format_number(env[j][k]) << '\n';
            }
        }
    }
}

void write_eye_csv(std::ostream& os, const LinkMetrics& m)
{
    os << "fold_time_ps,phase_deg\n";
    for (const auto& p : m.radio[0].eye) {
        os << format_number(std::round(p.fold_time * 1e15) / 1e3) << ',' << format_number(p.phase / kDegree) << '\n';
    }
}

void write_sweep_csv(std::ostream& os, std::span<const SweepRow> rows)
{
    if (rows.empty()) {
        return;
    }
    for (const auto& [name, value] : rows.front().params) {
        os << csv_quote(name) << ',';
    }
    os << "seed,lock_time_us,ber,snr_gain_db,status\n";
    for (const auto& row : rows) {
        for (const auto& [name, value] : row.params) {
            os << format_number(value) << ',';
        }
        os << row.seed << ',';
        os << (row.lock_time ? format_number(*row.lock_time * 1e6) : "") << ',';
        os << (row.status == "ok" && row.lock_time ? format_number(row.ber) : "") << ',';
        os << (row.snr_gain_db ? format_number(*row.snr_gain_db) : "") << ',';
        std::string status = row.status;
        if (status == "ok" && !row.lock_time) {
            status = "no_lock";
        } else if (status != "ok") {
            status = "error: " + status;
        }
        os << csv_quote(status) << '\n';
    }
}

std::string build_report(const LinkConfig& cfg, const LinkMetrics& m, const ReportFiles& files,
                         std::optional<double> wall_clock_s)
{
    using nlohmann::ordered_json;
    ordered_json doc;
    doc["schema_version"] = 1;
    doc["seed"] = cfg.seed;
    const auto lock = m.link_lock_time();
    doc["locked"] = lock.has_value();
    doc["lock_time_us"] = optional_number(lock, 1e6);
    double worst_ber = 0.0;
    double gain_sum = 0.0;
    int gains = 0;
    ordered_json radios = ordered_json::object();
    for (std::size_t r = 0; r < 2; ++r) {
        const RadioMetrics& rm = m.radio[r];
        ordered_json jr;
        jr["lock_time_us"] = optional_number(rm.lock_time, 1e6);
        jr["ber"] = rm.lock_time ? ordered_json(rm.ber) : ordered_json(nullptr);
        jr["bits_compared"] = rm.bits_compared;
        jr["bit_errors"] = rm.bit_errors;
        jr["snr_gain_db"] = optional_number(rm.snr_gain_db);
        jr["eye_opening_deg"] = rm.eye_opening / kDegree;
        jr["power_ratio_db"] = rm.power_ratio_db;
        jr["omni_level_v"] = rm.omni_level;
        jr["final_level_v"] = rm.mean_envelope.empty() ? 0.0 : rm.mean_envelope.back();
        radios[std::string(1, kRadioNames[r])] = std::move(jr);
        worst_ber = std::max(worst_ber, rm.lock_time ? rm.ber : 1.0);
        if (rm.snr_gain_db) {
            gain_sum += *rm.snr_gain_db;
            ++gains;
        }
    }
    doc["ber"] = lock ? ordered_json(worst_ber) : ordered_json(nullptr);
    doc["snr_gain_db"] = gains > 0 ? ordered_json(gain_sum / gains) : ordered_json(nullptr);
    doc["out_of_coverage"] = m.out_of_coverage;
    doc["radios"] = std::move(radios);
    doc["files"] = {{"envelope", files.envelope}, {"eye", files.eye}};
    doc["config"] = ordered_json::parse(serialize_config(cfg));
    if (wall_clock_s) {
        doc["wall_clock_s"] = *wall_clock_s;
    }
    return doc.dump(2) + "\n";
}

} // namespace retrolink::cli
