#include "mixpersist/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <variant>

#include "mixpersist/registry.hpp"

namespace mixpersist {

namespace {

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) return out;
        start = pos + 1;
    }
}

const ParameterKey* find_parameter(std::string_view name) {
    for (const auto& k : kParameterKeys) {
        if (k.name == name) return &k;
    }
    return nullptr;
}

bool plain_token(std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' || c == '_' ||
               c == '.';
    });
}

struct Parser {
    std::size_t line = 0;
    std::string key;

    [[noreturn]] void fail(const std::string& msg) const { throw ConfigError(line, key, msg); }

    double number(std::string_view v) const {
        double x = 0.0;
        const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
        if (v.empty() || ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(x)) {
            fail("expected a finite number, got '" + std::string(v) + "'");
        }
        return x;
    }

    std::uint64_t unsigned_integer(std::string_view v) const {
        std::uint64_t x = 0;
        const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
        if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) {
            fail("expected a non-negative integer, got '" + std::string(v) + "'");
        }
        return x;
    }

    bool boolean(std::string_view v) const {
        if (v == "true") return true;
        if (v == "false") return false;
        fail("expected true or false, got '" + std::string(v) + "'");
    }

    std::vector<double> numbers(std::string_view v) const {
        std::vector<double> out;
        for (const auto item : split(v, ',')) out.push_back(number(item));
        return out;
    }
};

std::string join_numbers(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + format_double(v[i]);
    return out;
}

}  // namespace

ConfigError::ConfigError(std::size_t line, std::string key, const std::string& message)
    : std::runtime_error("config" + (line > 0 ? ":" + std::to_string(line) : std::string()) +
                         (key.empty() ? std::string() : ": key '" + key + "'") + ": " + message),
      line_(line),
      key_(std::move(key)) {}

void ExperimentConfig::validate() const {
    auto bad = [](const std::string& key, const std::string& msg) { throw ConfigError(0, key, msg); };
    if (!plain_token(experiment_id)) bad("id", "must be a non-empty token of letters, digits, '-', '_', '.'");
    const auto names = registry_names();
    if (std::find(names.begin(), names.end(), entry) == names.end()) bad("entry", "unknown registry entry '" + entry + "'");
    if (n_paths < 100) bad("n_paths", "must be at least 100");
    if (output_dir.empty() || output_dir != trim(output_dir) || output_dir.find('\n') != std::string::npos) {
        bad("output_dir", "must be a non-empty path without surrounding blanks");
    }
    if (specs.empty()) bad("specs", "at least one process spec is required");
    for (const auto& s : specs) s.validate();
    if (ladder.empty()) bad("horizons", "at least one horizon is required");
    for (std::size_t i = 0; i < ladder.size(); ++i) {
        if (!(ladder[i] > 0.0) || (i > 0 && !(ladder[i] > ladder[i - 1]))) {
            bad("horizons", "horizons must be positive and strictly increasing");
        }
    }
    if (const auto* l = std::get_if<LampertiLogPolicy>(&grid)) {
        if (!(l->t_min > 0.0) || !(l->t_max > l->t_min) || l->n < 2) bad("t_min", "need 0 < t_min < t_max, points >= 2");
        if (l->t_max < ladder.back()) bad("t_max", "grid must reach the largest horizon");
    } else if (const auto* u = std::get_if<UniformPolicy>(&grid)) {
        if (!(u->t_max > 0.0) || u->n == 0) bad("t_max", "need t_max > 0 and points >= 1");
        if (u->t_max < ladder.back()) bad("t_max", "grid must reach the largest horizon");
    } else {
        bad("policy", "only uniform and lamperti_log grids are configurable");
    }
    if (!std::isfinite(level)) bad("level", "must be finite");
    if (burn_in >= ladder.size()) bad("burn_in", "must leave at least one horizon");
    for (const auto& [name, values] : parameters) {
        const auto* k = find_parameter(name);
        if (k == nullptr) bad(name, "unknown parameter");
        if (values.empty() || (k->arity != 0 && values.size() != k->arity)) bad(name, "wrong number of values");
        for (const double v : values) {
            if (!std::isfinite(v)) bad(name, "values must be finite");
        }
    }
}

ExperimentConfig parse_config(std::string_view text) {
    ExperimentConfig c;
    c.parameters.clear();
    Parser p;
    std::string section;
    std::set<std::string> seen;
    std::optional<std::string> policy;
    std::optional<double> t_min, t_max;
    std::optional<std::size_t> points;
    std::size_t policy_line = 0;

    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        const auto raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        p.line = line_no;
        p.key.clear();
        const auto line = trim(raw);
        if (line.empty() || line.front() == '#' || line.front() == ';') continue;
        if (line.front() == '[') {
            if (line.back() != ']') p.fail("unterminated section header");
            section = std::string(trim(line.substr(1, line.size() - 2)));
            static const std::set<std::string> kSections = {"experiment", "process", "ladder",
                                                             "grid",       "estimation", "parameters"};
            if (!kSections.contains(section)) p.fail("unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) p.fail("expected key = value");
        p.key = std::string(trim(line.substr(0, eq)));
        const auto value = trim(line.substr(eq + 1));
        if (section.empty()) p.fail("key outside of any section");
        if (p.key.empty()) p.fail("empty key");
        if (!seen.insert(section + "." + p.key).second) p.fail("duplicate key in [" + section + "]");

        const std::string& k = p.key;
        if (section == "experiment") {
            if (k == "id") {
                c.experiment_id = std::string(value);
            } else if (k == "entry") {
                c.entry = std::string(value);
                const auto names = registry_names();
                if (std::find(names.begin(), names.end(), c.entry) == names.end()) {
                    p.fail("unknown registry entry '" + c.entry + "'");
                }
            } else if (k == "master_seed") {
                c.master_seed = p.unsigned_integer(value);
            } else if (k == "n_paths") {
                c.n_paths = p.unsigned_integer(value);
                if (c.n_paths < 100) p.fail("must be at least 100");
            } else if (k == "output_dir") {
                c.output_dir = std::string(value);
            } else if (k == "assertions") {
                c.assertions = p.boolean(value);
            } else {
                p.fail("unknown key in [experiment]");
            }
        } else if (section == "process") {
            if (k != "specs") p.fail("unknown key in [process]");
            for (const auto item : split(value, ';')) {
                try {
                    c.specs.push_back(parse_spec(item));
                } catch (const std::exception& e) {
                    p.fail(e.what());
                }
            }
        } else if (section == "ladder") {
            if (k != "horizons") p.fail("unknown key in [ladder]");
            c.ladder = p.numbers(value);
        } else if (section == "grid") {
            if (k == "policy") {
                if (value != "uniform" && value != "lamperti_log") p.fail("expected uniform or lamperti_log");
                policy = std::string(value);
                policy_line = line_no;
            } else if (k == "t_min") {
                t_min = p.number(value);
            } else if (k == "t_max") {
                t_max = p.number(value);
            } else if (k == "points") {
                points = p.unsigned_integer(value);
            } else {
                p.fail("unknown key in [grid]");
            }
        } else if (section == "estimation") {
            if (k == "level") {
                c.level = p.number(value);
            } else if (k == "burn_in") {
                c.burn_in = p.unsigned_integer(value);
            } else if (k == "extrapolate") {
                c.extrapolate = p.boolean(value);
            } else {
                p.fail("unknown key in [estimation]");
            }
        } else {
            const auto* pk = find_parameter(k);
            if (pk == nullptr) p.fail("unknown key in [parameters]");
            auto values = p.numbers(value);
            if (pk->arity != 0 && values.size() != pk->arity) {
                p.fail("expected " + std::to_string(pk->arity) + " value(s)");
            }
            c.parameters[k] = std::move(values);
        }
    }

    p.line = 0;
    auto require = [&](const char* sec, const char* key) {
        if (!seen.contains(std::string(sec) + "." + key)) {
            p.key = key;
            p.fail(std::string("missing in [") + sec + "]");
        }
    };
    require("experiment", "id");
    require("experiment", "entry");
    require("experiment", "master_seed");
    require("experiment", "output_dir");
    require("process", "specs");
    require("ladder", "horizons");
    require("grid", "policy");
    require("grid", "t_max");
    require("grid", "points");
    if (*policy == "lamperti_log") {
        require("grid", "t_min");
        c.grid = LampertiLogPolicy{*t_min, *t_max, *points};
    } else {
        if (t_min) {
            p.line = policy_line;
            p.key = "t_min";
            p.fail("uniform grids take no t_min");
        }
        c.grid = UniformPolicy{*t_max, *points};
    }
    c.validate();
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& file) {
    std::ifstream is(file);
    if (!is) throw ConfigError(0, "", "cannot open " + file.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    return parse_config(ss.str());
}

std::string emit_config(const ExperimentConfig& c) {
    std::ostringstream os;
    os << "[experiment]\n"
       << "id = " << c.experiment_id << '\n'
       << "entry = " << c.entry << '\n'
       << "master_seed = " << c.master_seed << '\n'
       << "n_paths = " << c.n_paths << '\n'
       << "output_dir = " << c.output_dir << '\n'
       << "assertions = " << (c.assertions ? "true" : "false") << "\n\n";
    os << "[process]\nspecs = ";
    for (std::size_t i = 0; i < c.specs.size(); ++i) os << (i ? "; " : "") << c.specs[i].descriptor();
    os << "\n\n[ladder]\nhorizons = " << join_numbers(c.ladder) << "\n\n[grid]\n";
    if (const auto* l = std::get_if<LampertiLogPolicy>(&c.grid)) {
        os << "policy = lamperti_log\nt_min = " << format_double(l->t_min) << "\nt_max = " << format_double(l->t_max)
           << "\npoints = " << l->n << '\n';
    } else if (const auto* u = std::get_if<UniformPolicy>(&c.grid)) {
        os << "policy = uniform\nt_max = " << format_double(u->t_max) << "\npoints = " << u->n << '\n';
    }
    os << "\n[estimation]\nlevel = " << format_double(c.level) << "\nburn_in = " << c.burn_in
       << "\nextrapolate = " << (c.extrapolate ? "true" : "false") << '\n';
    if (!c.parameters.empty()) {
        os << "\n[parameters]\n";
        for (const auto& [k, v] : c.parameters) os << k << " = " << join_numbers(v) << '\n';
    }
    return os.str();
}

}  // namespace mixpersist
