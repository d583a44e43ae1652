# SPDX-License-Identifier: Apache-2.0
#
# retrolink: link-level simulator for retro-directive millimeter-wave radios
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
# http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
# ------------------------------------------------------------------------
"""Black-box contract of the retrolink executable: exit codes, files, report schema."""

import csv
import json
import shutil
import subprocess
import sys
from pathlib import Path

EXE, SCHEMA, WORK = Path(sys.argv[1]), Path(sys.argv[2]), Path(sys.argv[3])
failures = []


def check(cond, what):
    print(("ok   " if cond else "FAIL ") + what)
    if not cond:
        failures.append(what)


def run(*args):
    return subprocess.run([str(EXE), *map(str, args)], capture_output=True, text=True, check=False)


def header(path):
    with open(path, newline="", encoding="utf-8") as f:
        return next(csv.reader(f))


def rows(path):
    with open(path, newline="", encoding="utf-8") as f:
        return list(csv.reader(f))[1:]


def validate(report_path):
    try:
        import jsonschema
    except ImportError:
        print("skip schema validation: jsonschema not installed")
        return
    schema = json.loads(SCHEMA.read_text(encoding="utf-8"))
    try:
        jsonschema.validate(json.loads(report_path.read_text(encoding="utf-8")), schema)
        check(True, f"{report_path.name} matches the schema")
    except jsonschema.ValidationError as e:
        check(False, f"{report_path.name} matches the schema: {e.message}")


shutil.rmtree(WORK, ignore_errors=True)
WORK.mkdir(parents=True)

# Too short to lock: exit 2, outputs still written.
short = WORK / "short"
r = run("run", "--paper-pathloss", "--duration", "100ns", "--out", short)
check(r.returncode == 2, f"short run exits 2 (got {r.returncode})")
check(header(short / "envelope.csv") == ["time_ns", "radio", "element", "amplitude"], "envelope.csv header")
check(header(short / "eye.csv") == ["fold_time_ps", "phase_deg"], "eye.csv header")
validate(short / "report.json")
check(json.loads((short / "report.json").read_text())["locked"] is False, "short run reports locked=false")

# A locking run, twice: exit 0, byte-identical outputs, schema-valid report.
outs = []
for name in ("first", "second"):
    d = WORK / name
    r = run("run", "--paper-pathloss", "--duration", "1us", "--seed", "3", "--out", d)
    check(r.returncode == 0, f"1 us run ({name}) exits 0 (got {r.returncode}: {r.stderr.strip()})")
    outs.append(d)
for f in ("envelope.csv", "eye.csv", "report.json"):
    check((outs[0] / f).read_bytes() == (outs[1] / f).read_bytes(), f"{f} byte-identical across runs")
validate(outs[0] / "report.json")
report = json.loads((outs[0] / "report.json").read_text())
check(report["locked"] and report["lock_time_us"] > 0, "locked run reports a lock time")
for f in report["files"].values():
    check((outs[0] / f).is_file(), f"report names an existing file {f}")

# Config diagnostics: exit 1 and name the offending line and field.
bad = WORK / "bad.json"
bad.write_text('{\n  "distance_m": 10,\n  "radio_a": {"bogus": 1}\n}\n', encoding="utf-8")
r = run("run", "--config", bad, "--out", WORK / "bad")
check(r.returncode == 1 and "line 3" in r.stderr and "radio_a.bogus" in r.stderr,
      f"unknown key exits 1 with line and field ({r.stderr.strip()})")
bad.write_text('{\n  "distance_m": 10,\n  "angle_a_deg" 42\n}\n', encoding="utf-8")
r = run("run", "--config", bad, "--out", WORK / "bad")
check(r.returncode == 1 and "line 3" in r.stderr, f"malformed JSON exits 1 with the line ({r.stderr.strip()})")
check(not (WORK / "bad" / "report.json").exists(), "no report after a config error")

# Sweep: one row per grid point plus the status column.
sw = WORK / "sweep"
r = run("sweep", "--paper-pathloss", "--duration", "100ns", "--grid", "phase_lpf_cutoff_mhz=0.5,2,8", "--out", sw)
check(r.returncode == 0, f"sweep exits 0 (got {r.returncode})")
check(header(sw / "sweep.csv") ==
      ["phase_lpf_cutoff_mhz", "seed", "lock_time_us", "ber", "snr_gain_db", "status"], "sweep.csv header")
check(len(rows(sw / "sweep.csv")) == 3, "sweep.csv has 3 rows")
check(run("sweep", "--out", sw).returncode == 1, "sweep without a grid exits 1")
check(run("sweep", "--grid", "nope=1", "--out", sw).returncode == 1, "sweep with an unknown field exits 1")

# Patterns.
pt = WORK / "patterns"
for mode, cols in (("static", ["angle_deg", "af_power_dB", "closed_form_deg"]),
                   ("squint", ["angle_deg", "af_power_dB", "closed_form_deg"]),
                   ("vanatta", ["source_angle_deg", "spread_rad", "point_source_spread_rad"])):
    r = run("patterns", "--mode", mode, "--out", pt)
    check(r.returncode == 0, f"patterns {mode} exits 0")
    check(header(pt / f"patterns_{mode}.csv") == cols, f"patterns_{mode}.csv header")
check(run("patterns", "--mode", "bogus", "--out", pt).returncode == 1, "unknown pattern mode exits 1")

r = run("selftest")
check(r.returncode == 0, "selftest exits 0")

print(f"{len(failures)} failure(s)")
sys.exit(1 if failures else 0)
