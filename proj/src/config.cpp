#include "drivenmem/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace drivenmem {

namespace {

std::string summarize(const std::vector<ConfigIssue>& issues) {
    std::ostringstream os;
    os << issues.size() << " config error" << (issues.size() == 1 ? "" : "s");
    for (const auto& i : issues) os << "\n  line " << i.line << ", column " << i.column << ": " << i.message;
    return os.str();
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

enum class Kind { frequency, time, number, count, text, frequency_list };

struct Entry {
    std::string section;
    std::string key;
    std::string value;
    std::size_t line;
    std::size_t key_col;
    std::size_t value_col;
};

struct Parsed {
    std::vector<double> numbers;
    std::string unit;
};

class Resolver {
public:
    explicit Resolver(std::vector<ConfigIssue>& issues) : issues_(issues) {}

    void error(const Entry& e, const std::string& msg) { issues_.push_back({e.line, e.value_col, msg}); }

    // Numbers with an optional trailing unit. A list may repeat the unit on
    // every item or give it once at the end, but not mix units.
    std::optional<Parsed> numbers(const Entry& e, bool list) {
        Parsed out;
        std::vector<std::string> items;
        if (list) {
            std::string item;
            std::istringstream is(e.value);
            while (std::getline(is, item, ',')) items.push_back(trim(item));
        } else {
            items.push_back(e.value);
        }
        std::set<std::string> units;
        for (const std::string& it : items) {
            double v = 0.0;
            const char* first = it.data();
            const char* last = it.data() + it.size();
            if (first != last && *first == '+') ++first;
            const auto res = std::from_chars(first, last, v);
            if (res.ec != std::errc{} || it.empty()) {
                error(e, "'" + e.key + "': cannot read a number from '" + it + "'");
                return std::nullopt;
            }
            if (!std::isfinite(v)) {
                error(e, "'" + e.key + "' must be finite");
                return std::nullopt;
            }
            out.numbers.push_back(v);
            const std::string unit = trim(std::string(res.ptr, last));
            if (!unit.empty()) units.insert(unit);
        }
        if (units.size() > 1) {
            error(e, "'" + e.key + "' mixes units");
            return std::nullopt;
        }
        if (!units.empty()) out.unit = *units.begin();
        return out;
    }

    std::optional<double> frequency(const Entry& e, double delta) {
        auto p = numbers(e, false);
        if (!p) return std::nullopt;
        return frequency_value(e, p->numbers[0], p->unit, delta);
    }

    std::optional<std::vector<double>> frequencies(const Entry& e, double delta) {
        auto p = numbers(e, true);
        if (!p) return std::nullopt;
        std::vector<double> out;
        for (double v : p->numbers) {
            auto r = frequency_value(e, v, p->unit, delta);
            if (!r) return std::nullopt;
            out.push_back(*r);
        }
        return out;
    }

    std::optional<double> time(const Entry& e, double delta) {
        auto p = numbers(e, false);
        if (!p) return std::nullopt;
        const double v = p->numbers[0];
        if (p->unit.empty()) {
            error(e, "'" + e.key + "' is missing a unit (us or 1/Delta)");
            return std::nullopt;
        }
        if (p->unit == "us" || p->unit == "\xce\xbcs" || p->unit == "\xc2\xb5s") return v * delta;
        if (p->unit == "1/Delta") return v;
        error(e, "'" + e.key + "': unit '" + p->unit + "' is not a time unit (us or 1/Delta)");
        return std::nullopt;
    }

    std::optional<double> number(const Entry& e) {
        auto p = numbers(e, false);
        if (!p) return std::nullopt;
        if (!p->unit.empty()) {
            error(e, "'" + e.key + "' is dimensionless but has unit '" + p->unit + "'");
            return std::nullopt;
        }
        return p->numbers[0];
    }

    std::optional<std::uint64_t> count(const Entry& e) {
        const std::string& s = e.value;
        std::uint64_t v = 0;
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
            error(e, "'" + e.key + "' must be a non-negative integer without unit");
            return std::nullopt;
        }
        return v;
    }

private:
    std::optional<double> frequency_value(const Entry& e, double v, const std::string& unit, double delta) {
        if (unit.empty()) {
            error(e, "'" + e.key + "' is missing a unit (MHz or Delta)");
            return std::nullopt;
        }
        if (unit == "MHz") return v / delta;
        if (unit == "Delta") return v;
        error(e, "'" + e.key + "': unit '" + unit + "' is not a frequency unit (MHz or Delta)");
        return std::nullopt;
    }

    std::vector<ConfigIssue>& issues_;
};

struct KeySpec {
    Kind kind;
    std::function<void(ScenarioConfig&, Resolver&, const Entry&, double)> apply;
};

template <class F>
KeySpec freq(F set) {
    return {Kind::frequency, [set](ScenarioConfig& c, Resolver& r, const Entry& e, double d) {
                if (auto v = r.frequency(e, d)) set(c, r, e, *v);
            }};
}

template <class F>
KeySpec tim(F set) {
    return {Kind::time, [set](ScenarioConfig& c, Resolver& r, const Entry& e, double d) {
                if (auto v = r.time(e, d)) set(c, r, e, *v);
            }};
}

template <class F>
KeySpec num(F set) {
    return {Kind::number, [set](ScenarioConfig& c, Resolver& r, const Entry& e, double) {
                if (auto v = r.number(e)) set(c, r, e, *v);
            }};
}

template <class F>
KeySpec cnt(F set) {
    return {Kind::count, [set](ScenarioConfig& c, Resolver& r, const Entry& e, double) {
                if (auto v = r.count(e)) set(c, r, e, *v);
            }};
}

template <class F>
KeySpec txt(F set) {
    return {Kind::text, [set](ScenarioConfig& c, Resolver& r, const Entry& e, double) {
                try {
                    set(c, e.value);
                } catch (const ValidationError& ex) {
                    r.error(e, "'" + e.key + "': " + ex.what());
                }
            }};
}

void positive(Resolver& r, const Entry& e, double v) {
    if (!(v > 0.0)) r.error(e, "'" + e.key + "' must be positive");
}

void rate(Resolver& r, const Entry& e, double v) {
    if (v < 0.0) r.error(e, "negative rate: '" + e.key + "' must be >= 0");
}

const std::map<std::string, std::map<std::string, KeySpec>>& schema() {
    using C = ScenarioConfig;
    using R = Resolver;
    using E = Entry;
    static const std::map<std::string, std::map<std::string, KeySpec>> table = {
        {"units", {}},  // delta is handled first
        {"ensemble",
         {{"collective", freq([](C& c, R& r, const E& e, double v) { positive(r, e, v); c.collective = v; })},
          {"gamma", freq([](C& c, R& r, const E& e, double v) { rate(r, e, v); c.gamma = v; })},
          {"n_spins", cnt([](C& c, R& r, const E& e, std::uint64_t v) {
               if (v == 1) r.error(e, "'n_spins' must be 0 (auto) or at least 2");
               c.n_spins = static_cast<std::size_t>(v);
           })},
          {"scheme", txt([](C& c, const std::string& s) { c.scheme = scheme_from_string(s); })},
          {"window_lo", freq([](C& c, R&, const E&, double v) { c.window_lo = v; })},
          {"window_hi", freq([](C& c, R&, const E&, double v) { c.window_hi = v; })}}},
        {"drive",
         {{"b_min", freq([](C& c, R& r, const E& e, double v) {
               positive(r, e, v);
               if (!c.drive) c.drive = DriveBand{v, v};
               c.drive->b_min = v;
           })},
          {"b_max", freq([](C& c, R& r, const E& e, double v) {
               positive(r, e, v);
               if (!c.drive) c.drive = DriveBand{v, v};
               c.drive->b_max = v;
           })}}},
        {"cavity",
         {{"kappa", freq([](C& c, R& r, const E& e, double v) { rate(r, e, v); c.kappa = v; })},
          {"detuning", freq([](C& c, R&, const E&, double v) { c.detuning = v; })}}},
        {"run",
         {{"horizon", tim([](C& c, R& r, const E& e, double v) { positive(r, e, v); c.horizon = v; })},
          {"time_step", tim([](C& c, R& r, const E& e, double v) { positive(r, e, v); c.time_step = v; })},
          {"target_time", tim([](C& c, R& r, const E& e, double v) {
               if (v < 0.0) r.error(e, "'target_time' must be >= 0");
               c.target_time = v;
           })},
          {"method", txt([](C& c, const std::string& s) { c.method = method_from_string(s); })},
          {"backend", txt([](C& c, const std::string& s) { c.backend = backend_from_string(s); })},
          {"bracket_lo", num([](C& c, R&, const E&, double v) { c.bracket_lo = v; })},
          {"bracket_hi", num([](C& c, R&, const E&, double v) { c.bracket_hi = v; })},
          {"scan_points", cnt([](C& c, R& r, const E& e, std::uint64_t v) {
               if (v < 4) r.error(e, "'scan_points' must be at least 4");
               c.scan_points = static_cast<std::size_t>(v);
           })},
          {"resolution", freq([](C& c, R& r, const E& e, double v) { positive(r, e, v); c.resolution = v; })},
          {"collectives", {Kind::frequency_list, [](C& c, R& r, const E& e, double d) {
               if (auto v = r.frequencies(e, d)) {
                   for (double x : *v) positive(r, e, x);
                   c.collectives = *v;
               }
           }}},
          {"probe_lo", freq([](C& c, R&, const E&, double v) { c.probe_lo = v; })},
          {"probe_hi", freq([](C& c, R&, const E&, double v) { c.probe_hi = v; })},
          {"probe_points", cnt([](C& c, R& r, const E& e, std::uint64_t v) {
               if (v < 3) r.error(e, "'probe_points' must be at least 3");
               c.probe_points = static_cast<std::size_t>(v);
           })},
          {"density_lo", freq([](C& c, R&, const E&, double v) { c.density_lo = v; })},
          {"density_hi", freq([](C& c, R&, const E&, double v) { c.density_hi = v; })},
          {"density_points", cnt([](C& c, R& r, const E& e, std::uint64_t v) {
               if (v < 2) r.error(e, "'density_points' must be at least 2");
               c.density_points = static_cast<std::size_t>(v);
           })},
          {"seed", cnt([](C& c, R&, const E&, std::uint64_t v) { c.seed = v; })}}},
    };
    return table;
}

}  // namespace

ConfigError::ConfigError(std::vector<ConfigIssue> issues)
    : ValidationError(summarize(issues)), issues_(std::move(issues)) {}

ScenarioConfig parse_config(const std::string& text) {
    std::vector<ConfigIssue> issues;
    std::vector<Entry> entries;
    std::set<std::string> sections_seen;
    std::map<std::string, std::size_t> section_line;
    const auto& table = schema();

    std::istringstream in(text);
    std::string raw;
    std::size_t line_no = 0;
    std::string section;
    bool section_known = false;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = raw;
        const auto hash = line.find_first_of("#;");
        if (hash != std::string::npos) line = line.substr(0, hash);
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const std::size_t col = first + 1;
        std::string body = trim(line);
        if (body.front() == '[') {
            if (body.back() != ']') {
                issues.push_back({line_no, col, "unterminated section header"});
                section_known = false;
                continue;
            }
            section = trim(body.substr(1, body.size() - 2));
            section_known = section == "units" || table.count(section) != 0;
            if (!section_known) {
                issues.push_back({line_no, col, "unknown section [" + section + "]"});
            } else if (!sections_seen.insert(section).second) {
                issues.push_back({line_no, col, "section [" + section + "] appears twice"});
            } else {
                section_line[section] = line_no;
            }
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            issues.push_back({line_no, col, "expected 'key = value'"});
            continue;
        }
        if (section.empty()) {
            issues.push_back({line_no, col, "key outside of any section"});
            continue;
        }
        if (!section_known) continue;  // already reported
        Entry e;
        e.section = section;
        e.key = trim(line.substr(0, eq));
        e.value = trim(line.substr(eq + 1));
        e.line = line_no;
        e.key_col = col;
        const auto vfirst = line.find_first_not_of(" \t", eq + 1);
        e.value_col = vfirst == std::string::npos ? eq + 2 : vfirst + 1;
        if (e.value.empty()) {
            issues.push_back({line_no, e.value_col, "'" + e.key + "' has no value"});
            continue;
        }
        entries.push_back(std::move(e));
    }

    ScenarioConfig cfg;
    Resolver r(issues);
    std::set<std::pair<std::string, std::string>> seen;

    // delta first: MHz values need it.
    double delta = 1.0;
    bool have_delta = false;
    for (const auto& e : entries) {
        if (e.section != "units") continue;
        if (e.key != "delta") {
            issues.push_back({e.line, e.key_col, "unknown key '" + e.key + "' in [units]"});
            continue;
        }
        if (!seen.insert({e.section, e.key}).second) {
            issues.push_back({e.line, e.key_col, "duplicate key 'delta'"});
            continue;
        }
        auto p = r.numbers(e, false);
        if (!p) continue;
        if (p->unit.empty()) {
            r.error(e, "'delta' is missing a unit (MHz)");
        } else if (p->unit != "MHz") {
            r.error(e, "'delta' must be given in MHz");
        } else if (!(p->numbers[0] > 0.0)) {
            r.error(e, "'delta' must be positive");
        } else {
            delta = p->numbers[0];
            have_delta = true;
        }
    }
    if (!have_delta && seen.count({"units", "delta"}) == 0) {
        const std::size_t at = section_line.count("units") ? section_line["units"] : 1;
        issues.push_back({at, 1, "missing [units] delta (the Lorentzian FWHM in MHz)"});
    }
    cfg.delta_mhz = delta;

    std::map<std::string, std::size_t> key_line;
    for (const auto& e : entries) {
        if (e.section == "units") continue;
        const auto& keys = table.at(e.section);
        const auto it = keys.find(e.key);
        if (it == keys.end()) {
            issues.push_back({e.line, e.key_col, "unknown key '" + e.key + "' in [" + e.section + "]"});
            continue;
        }
        if (!seen.insert({e.section, e.key}).second) {
            issues.push_back({e.line, e.key_col, "duplicate key '" + e.key + "'"});
            continue;
        }
        key_line[e.key] = e.line;
        it->second.apply(cfg, r, e, delta);
    }

    auto cross = [&](const std::string& key, const std::string& msg) {
        const std::size_t at = key_line.count(key) ? key_line[key] : 0;
        issues.push_back({at, 1, msg});
    };
    if (sections_seen.count("drive")) {
        const bool lo = key_line.count("b_min") != 0;
        const bool hi = key_line.count("b_max") != 0;
        if (!lo || !hi) {
            issues.push_back({section_line["drive"], 1, "[drive] needs both b_min and b_max"});
        } else if (cfg.drive && cfg.drive->b_max < cfg.drive->b_min) {
            cross("b_max", "b_max must not be below b_min");
        }
        if (!lo || !hi) cfg.drive.reset();
    }
    if (cfg.window_lo.has_value() != cfg.window_hi.has_value()) {
        cross(cfg.window_lo ? "window_lo" : "window_hi", "window_lo and window_hi go together");
    } else if (cfg.window_lo && !(*cfg.window_lo < *cfg.window_hi)) {
        cross("window_hi", "window_hi must exceed window_lo");
    }
    if (cfg.probe_lo && cfg.probe_hi && !(*cfg.probe_lo < *cfg.probe_hi)) {
        cross("probe_hi", "probe_hi must exceed probe_lo");
    }
    if (!(cfg.density_lo < cfg.density_hi)) cross("density_hi", "density_hi must exceed density_lo");
    if (!(cfg.bracket_lo < cfg.bracket_hi)) cross("bracket_hi", "bracket_hi must exceed bracket_lo");
    if (cfg.time_step > cfg.horizon) cross("time_step", "time_step exceeds the horizon");
    if (cfg.target_time > cfg.horizon) cross("target_time", "target_time exceeds the horizon");

    if (!issues.empty()) {
        std::stable_sort(issues.begin(), issues.end(),
                         [](const ConfigIssue& a, const ConfigIssue& b) { return a.line < b.line; });
        throw ConfigError(std::move(issues));
    }
    return cfg;
}

ScenarioConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot read config " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return parse_config(os.str());
}

std::string serialize_config(const ScenarioConfig& c) {
    std::ostringstream os;
    auto f = [](double v) { return fmt(v) + " Delta"; };
    auto t = [](double v) { return fmt(v) + " 1/Delta"; };
    os << "# resolved scenario; frequencies in units of delta, times in 1/delta\n";
    os << "[units]\n";
    os << "delta = " << fmt(c.delta_mhz) << " MHz\n\n";
    os << "[ensemble]\n";
    os << "collective = " << f(c.collective) << '\n';
    os << "gamma = " << f(c.gamma) << '\n';
    os << "n_spins = " << c.n_spins << '\n';
    os << "scheme = " << to_string(c.scheme) << '\n';
    if (c.window_lo) os << "window_lo = " << f(*c.window_lo) << '\n';
    if (c.window_hi) os << "window_hi = " << f(*c.window_hi) << '\n';
    if (c.drive) {
        os << "\n[drive]\n";
        os << "b_min = " << f(c.drive->b_min) << '\n';
        os << "b_max = " << f(c.drive->b_max) << '\n';
    }
    os << "\n[cavity]\n";
    os << "kappa = " << f(c.kappa) << '\n';
    if (c.detuning) os << "detuning = " << f(*c.detuning) << '\n';
    os << "\n[run]\n";
    os << "horizon = " << t(c.horizon) << '\n';
    os << "time_step = " << t(c.time_step) << '\n';
    os << "target_time = " << t(c.target_time) << '\n';
    os << "method = " << to_string(c.method) << '\n';
    os << "backend = " << to_string(c.backend) << '\n';
    os << "bracket_lo = " << fmt(c.bracket_lo) << '\n';
    os << "bracket_hi = " << fmt(c.bracket_hi) << '\n';
    os << "scan_points = " << c.scan_points << '\n';
    os << "resolution = " << f(c.resolution) << '\n';
    if (!c.collectives.empty()) {
        os << "collectives = ";
        for (std::size_t i = 0; i < c.collectives.size(); ++i) os << (i ? ", " : "") << fmt(c.collectives[i]);
        os << " Delta\n";
    }
    if (c.probe_lo) os << "probe_lo = " << f(*c.probe_lo) << '\n';
    if (c.probe_hi) os << "probe_hi = " << f(*c.probe_hi) << '\n';
    os << "probe_points = " << c.probe_points << '\n';
    os << "density_lo = " << f(c.density_lo) << '\n';
    os << "density_hi = " << f(c.density_hi) << '\n';
    os << "density_points = " << c.density_points << '\n';
    os << "seed = " << c.seed << '\n';
    return os.str();
}

std::optional<Window> ScenarioConfig::window() const {
    if (window_lo && window_hi) return Window{*window_lo, *window_hi};
    return std::nullopt;
}

MemoryScenario ScenarioConfig::memory_scenario() const { return memory_scenario(collective); }

MemoryScenario ScenarioConfig::memory_scenario(double collective_value) const {
    MemoryScenario sc;
    sc.width = 1.0;
    if (drive) sc.drive = DriveAmplitudeRange(drive->b_min, drive->b_max);
    sc.collective = collective_value;
    sc.kappa = kappa;
    sc.gamma = gamma;
    sc.detuning = detuning;
    sc.horizon = horizon;
    sc.time_step = time_step;
    sc.target_time = target_time;
    sc.n_spins = n_spins;
    sc.scheme = scheme;
    sc.window = window();
    sc.method = method;
    sc.backend = backend;
    sc.bracket_lo = bracket_lo;
    sc.bracket_hi = bracket_hi;
    sc.scan_points = scan_points;
    sc.resolution = resolution;
    return sc;
}

SpectralDensity ScenarioConfig::density() const {
    if (drive) return DressedDensity(1.0, DriveAmplitudeRange(drive->b_min, drive->b_max));
    return LorentzianDensity(1.0, 0.0);
}

std::vector<double> ScenarioConfig::probe_grid() const {
    const double omega = drive ? 0.5 * collective : collective;
    const double span = 2.0 * omega + 10.0;
    const double lo = probe_lo.value_or(-span);
    const double hi = probe_hi.value_or(span);
    std::vector<double> out(probe_points);
    for (std::size_t i = 0; i < probe_points; ++i) {
        out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(probe_points - 1);
    }
    return out;
}

}  // namespace drivenmem
