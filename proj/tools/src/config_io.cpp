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
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace retrolink::cli
{

namespace
{
    using ordered_json = nlohmann::ordered_json;

    constexpr std::string_view kRadioA = "radio_a";
    constexpr std::string_view kRadioB = "radio_b";

    bool is_integer_field(std::string_view name)
    {
        return name == "block_size" || name == "n_elements" || name == "conjugation_sign";
    }

    bool is_radio_name(std::string_view name)
    {
        return name.starts_with("radio_a.") || name.starts_with("radio_b.");
    }

    /// Link-level numeric keys, in registry order.
    std::vector<std::string> link_keys()
    {
        std::vector<std::string> out;
        for (const auto& f : config_fields()) {
            if (f.find('.') == std::string::npos && f != "seed" &&
                std::find(config_fields().begin(), config_fields().end(), "radio_a." + f) == config_fields().end()) {
                out.push_back(f);
            }
        }
        return out;
    }

    /// Radio-level numeric keys, unprefixed.
    std::vector<std::string> radio_keys()
    {
        std::vector<std::string> out;
        for (const auto& f : config_fields()) {
            if (f.starts_with("radio_a.")) {
                out.push_back(f.substr(8));
            }
        }
        return out;
    }

    std::size_t line_of_offset(std::string_view text, std::size_t offset)
    {
        offset = std::min(offset, text.size());
        return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
    }

    /// Line of `"key"` inside the object `parent` (top level when empty); 0 when not found.
    std::size_t locate(std::string_view text, std::string_view parent, std::string_view key)
    {
        std::size_t from = 0;
        if (!parent.empty()) {
            from = text.find("\"" + std::string(parent) + "\"");
            if (from == std::string_view::npos) {
                return 0;
            }
        }
        const auto pos = text.find("\"" + std::string(key) + "\"", from);
        return pos == std::string_view::npos ? 0 : line_of_offset(text, pos);
    }

    [[noreturn]] void fail_at(std::string_view text, std::string_view parent, std::string_view key, const std::string& what)
    {
        const std::string field = parent.empty() ? std::string(key) : std::string(parent) + "." + std::string(key);
        const std::size_t line = locate(text, parent, key);
        std::ostringstream os;
        if (line > 0) {
            os << "line " << line << ": ";
        }
        os << "field '" << field << "': " << what;
        throw ConfigError(os.str());
    }

    /// Maps a validation message's field (member name) to the config key that sets it.
    std::string config_key_for(std::string_view member)
    {
        for (const auto& f : config_fields()) {
            if (f == member || (f.starts_with(member) && f.size() > member.size() && f[member.size()] == '_')) {
                return f;
            }
        }
        return std::string(member);
    }

    std::string format15(double v)
    {
        char buf[64];
        const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 15);
        return {buf, res.ptr};
    }

    double canonical(double v)
    {
        const std::string s = format15(v);
        double out = 0.0;
        std::from_chars(s.data(), s.data() + s.size(), out);
        return out;
    }

    ordered_json number_json(std::string_view name, double v)
    {
        if (is_integer_field(name)) {
            return static_cast<std::int64_t>(v);
        }
        return canonical(v);
    }

    void apply_value(LinkConfig& cfg, std::string_view text, std::string_view parent, const std::string& key,
                     const ordered_json& value)
    {
        const std::string name = parent.empty() ? key : std::string(parent) + "." + key;
        if (!parent.empty() && (key == "qpsk_mode" || key == "unwrap_mode")) {
            if (!value.is_string()) {
                fail_at(text, parent, key, "expected a string");
            }
            RadioConfig& r = parent == kRadioA ? cfg.radio_a : cfg.radio_b;
            const auto s = value.get<std::string>();
            if (key == "qpsk_mode") {
                if (s == "differential") {
                    r.qpsk_mode = QpskMode::differential;
                } else if (s == "coherent") {
                    r.qpsk_mode = QpskMode::coherent;
                } else {
                    fail_at(text, parent, key, "expected \"differential\" or \"coherent\"");
                }
            } else {
                if (s == "referenced") {
                    r.unwrap_mode = UnwrapMode::referenced;
                } else if (s == "independent") {
                    r.unwrap_mode = UnwrapMode::independent;
                } else {
                    fail_at(text, parent, key, "expected \"referenced\" or \"independent\"");
                }
            }
            return;
        }
        if (parent.empty() && key == "seed") {
            if (!value.is_number_unsigned()) {
                fail_at(text, parent, key, "expected a non-negative integer");
            }
            cfg.seed = value.get<std::uint64_t>();
            return;
        }
        if (parent.empty() && key == "path_loss_override_db" && value.is_null()) {
            cfg.path_loss_override_db.reset();
            return;
        }
        const auto& known = parent.empty() ? link_keys() : radio_keys();
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            fail_at(text, parent, key, "unknown key");
        }
        if (!value.is_number()) {
            fail_at(text, parent, key, "expected a number");
        }
        if (is_integer_field(key) && !value.is_number_integer()) {
            fail_at(text, parent, key, "expected an integer");
        }
        try {
            set_field(cfg, name, value.get<double>());
        } catch (const ConfigError& e) {
            std::string what = e.what();
            const auto colon = what.find(": ");
            fail_at(text, parent, key, colon == std::string::npos ? what : what.substr(colon + 2));
        }
    }

    std::string trim(std::string_view s)
    {
        while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
            s.remove_prefix(1);
        }
        while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
            s.remove_suffix(1);
        }
        return std::string(s);
    }

    double parse_number(std::string_view s, const std::string& context)
    {
        const std::string t = trim(s);
        double v = 0.0;
        const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
        if (t.empty() || res.ec != std::errc{} || res.ptr != t.data() + t.size() || !std::isfinite(v)) {
            throw ConfigError(context + ": '" + t + "' is not a number");
        }
        return v;
    }
} // namespace

LinkConfig parse_config(std::string_view text)
{
    ordered_json doc;
    try {
        doc = ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        const std::size_t at = e.byte > 0 ? e.byte - 1 : 0;
        std::string what = e.what();
        const auto pos = what.find("parse error");
        throw ConfigError("line " + std::to_string(line_of_offset(text, at)) + ": malformed JSON (" +
                          (pos == std::string::npos ? what : what.substr(pos)) + ")");
    }
    if (!doc.is_object()) {
        throw ConfigError("line 1: the configuration must be a JSON object");
    }

    LinkConfig cfg;
    for (const auto& [key, value] : doc.items()) {
        if (key == kRadioA || key == kRadioB) {
            if (!value.is_object()) {
                fail_at(text, "", key, "expected an object");
            }
            for (const auto& [k, v] : value.items()) {
                apply_value(cfg, text, key, k, v);
            }
            continue;
        }
        apply_value(cfg, text, "", key, value);
    }

    try {
        cfg.validate();
    } catch (const ConfigError& e) {
        const std::string what = e.what();
        const auto colon = what.find(": ");
        std::string field = what.substr(0, colon);
        const std::string msg = colon == std::string::npos ? what : what.substr(colon + 2);
        std::string parent;
        if (is_radio_name(field)) {
            parent = field.substr(0, 7);
            field = field.substr(8);
        }
        fail_at(text, parent, config_key_for(field), msg);
    }
    return cfg;
}

LinkConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot read config file '" + path.string() + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string serialize_config(const LinkConfig& cfg)
{
    ordered_json doc = ordered_json::object();
    for (const auto& key : link_keys()) {
        if (key == "path_loss_override_db" && !cfg.path_loss_override_db) {
            doc[key] = nullptr;
            continue;
        }
        doc[key] = number_json(key, get_field(cfg, key));
    }
    doc["seed"] = cfg.seed;
    for (const auto* name : {&kRadioA, &kRadioB}) {
        const RadioConfig& r = *name == kRadioA ? cfg.radio_a : cfg.radio_b;
        ordered_json radio = ordered_json::object();
        for (const auto& key : radio_keys()) {
            radio[key] = number_json(key, get_field(cfg, std::string(*name) + "." + key));
        }
        radio["qpsk_mode"] = r.qpsk_mode == QpskMode::differential ? "differential" : "coherent";
        radio["unwrap_mode"] = r.unwrap_mode == UnwrapMode::referenced ? "referenced" : "independent";
        doc[std::string(*name)] = std::move(radio);
    }
    return doc.dump(2) + "\n";
}

double parse_duration(std::string_view text)
{
    std::string t = trim(text);
    struct Unit
    {
        std::string_view suffix;
        double scale;
    };
    // Longest suffixes first so "ms" is not read as "s".
    static constexpr Unit units[] = {{"ps", 1e-12}, {"ns", 1e-9}, {"us", 1e-6}, {"\xC2\xB5s", 1e-6},
                                     {"ms", 1e-3},  {"s", 1.0}};
    double scale = 1.0;
    for (const auto& u : units) {
        if (t.size() > u.suffix.size() && std::string_view(t).ends_with(u.suffix)) {
            scale = u.scale;
            t.resize(t.size() - u.suffix.size());
            break;
        }
    }
    const double v = parse_number(t, "duration") * scale;
    if (!(v > 0.0)) {
        throw ConfigError("duration: must be positive");
    }
    return v;
}

SweepAxis parse_grid(std::string_view text)
{
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) {
        throw ConfigError("grid '" + std::string(text) + "': expected FIELD=v1,v2,...");
    }
    SweepAxis axis;
    axis.field = trim(text.substr(0, eq));
    const auto& names = config_fields();
    if (std::find(names.begin(), names.end(), axis.field) == names.end()) {
        throw ConfigError("grid: unknown field '" + axis.field + "'");
    }
    std::string_view rest = text.substr(eq + 1);
    while (!rest.empty()) {
        const auto comma = rest.find(',');
        axis.values.push_back(parse_number(rest.substr(0, comma), "grid " + axis.field));
        if (comma == std::string_view::npos) {
            break;
        }
        rest.remove_prefix(comma + 1);
    }
    if (axis.values.empty()) {
        throw ConfigError("grid " + axis.field + ": no values");
    }
    return axis;
}

} // namespace retrolink::cli
