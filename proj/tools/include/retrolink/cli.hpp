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

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "retrolink/engine.hpp"

namespace retrolink::cli
{

/// Exit codes of every subcommand.
enum ExitCode : int
{
    kExitOk = 0,
    kExitError = 1,
    kExitNoLock = 2,
};

// ------------------------------------------------------------------ config

/**
 * @brief Parses a JSON configuration document.
 *
 * Every key is optional and defaults to the reference experiment. Unknown
 * keys, wrong types and out-of-range values throw ConfigError with a
 * message of the form "line N: field 'radio_a.f_rx_ghz': ...".
 */
[[nodiscard]] LinkConfig parse_config(std::string_view text);

/// Reads and parses a file; I/O failures also throw ConfigError.
[[nodiscard]] LinkConfig load_config(const std::filesystem::path& path);

/// Canonical form: every field present, fixed key order, 15 significant digits.
[[nodiscard]] std::string serialize_config(const LinkConfig& cfg);

/// "100ns", "2.5us", "5e-6", "1 ms" -> seconds. Bare numbers are seconds.
[[nodiscard]] double parse_duration(std::string_view text);

/// "FIELD=v1,v2,..." -> one sweep axis. Throws ConfigError on syntax or unknown field.
[[nodiscard]] SweepAxis parse_grid(std::string_view text);

// ----------------------------------------------------------------- outputs

/// Locale-independent shortest round-trip representation.
[[nodiscard]] std::string format_number(double v);

/// Columns time_ns,radio,element,amplitude.
void write_envelope_csv(std::ostream& os, const LinkMetrics& m);
/// Columns fold_time_ps,phase_deg; radio A's post-lock eye.
void write_eye_csv(std::ostream& os, const LinkMetrics& m);
/// Parameters, then seed,lock_time_us,ber,snr_gain_db,status.
void write_sweep_csv(std::ostream& os, std::span<const SweepRow> rows);

struct ReportFiles
{
    std::string envelope = "envelope.csv";
    std::string eye = "eye.csv";
};

/// Run summary. `wall_clock_s` is included only when set, so default reports are reproducible.
[[nodiscard]] std::string build_report(const LinkConfig& cfg, const LinkMetrics& m, const ReportFiles& files,
                                       std::optional<double> wall_clock_s = std::nullopt);

// ---------------------------------------------------------------- commands

/// Entry point shared by the executable and the tests.
int run_cli(std::span<const std::string> args, std::ostream& out, std::ostream& err);

} // namespace retrolink::cli
