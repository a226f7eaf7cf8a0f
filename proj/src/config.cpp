#include "ldae/config.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace ldae {

std::string to_string(Experiment e) {
    switch (e) {
        case Experiment::RISK_CURVE: return "RISK_CURVE";
        case Experiment::BOTTLENECK_SWEEP: return "BOTTLENECK_SWEEP";
        case Experiment::CRITICAL_POINT_COMPARE: return "CRITICAL_POINT_COMPARE";
        case Experiment::SPECTRUM: return "SPECTRUM";
        case Experiment::ALIGNMENT: return "ALIGNMENT";
        case Experiment::TRAIN_VERIFY: return "TRAIN_VERIFY";
    }
    return "?";
}

namespace {

std::string upper(std::string s) {
    for (char& ch : s) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    return s;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string part;
    while (std::getline(ss, part, sep)) {
        part = trim(part);
        if (!part.empty()) out.push_back(part);
    }
    return out;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const std::string& expected) {
    throw InvalidArgument("config key '" + key + "': cannot parse '" + value + "' as " + expected);
}

long long parse_int(const std::string& key, const std::string& v) {
    char* end = nullptr;
    errno = 0;
    const long long x = std::strtoll(v.c_str(), &end, 10);
    if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE) bad_value(key, v, "an integer");
    return x;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    char* end = nullptr;
    errno = 0;
    const unsigned long long x = std::strtoull(v.c_str(), &end, 0);
    if (v.empty() || v[0] == '-' || end != v.c_str() + v.size() || errno == ERANGE)
        bad_value(key, v, "an unsigned 64-bit integer");
    return x;
}

double parse_double(const std::string& key, const std::string& v) {
    char* end = nullptr;
    errno = 0;
    const double x = std::strtod(v.c_str(), &end);
    if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE || !std::isfinite(x)) bad_value(key, v, "a number");
    return x;
}

// "5", "1,2,8", "0-10" or a mix
std::vector<int> parse_int_list(const std::string& key, const std::string& v) {
    std::vector<int> out;
    for (const auto& part : split(v, ',')) {
        const auto dash = part.find('-', 1);
        if (dash == std::string::npos) {
            out.push_back(static_cast<int>(parse_int(key, part)));
        } else {
            const long long lo = parse_int(key, trim(part.substr(0, dash)));
            const long long hi = parse_int(key, trim(part.substr(dash + 1)));
            if (hi < lo) bad_value(key, part, "an increasing range");
            for (long long x = lo; x <= hi; ++x) out.push_back(static_cast<int>(x));
        }
    }
    if (out.empty()) bad_value(key, v, "a nonempty integer list");
    return out;
}

std::vector<double> parse_double_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    for (const auto& part : split(v, ',')) out.push_back(parse_double(key, part));
    if (out.empty()) bad_value(key, v, "a nonempty number list");
    return out;
}

template <class T>
void require_positive(const std::string& key, const std::vector<T>& xs) {
    for (T x : xs)
        if (!(x > 0)) throw InvalidArgument("config key '" + key + "': values must be positive");
}

using Setter = void (*)(SweepSpec&, const std::string&, const std::string&);

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"experiment", [](SweepSpec& s, const std::string&, const std::string& v) { s.experiment = parse_experiment(v); }},
        {"variants",
         [](SweepSpec& s, const std::string& k, const std::string& v) {
             s.variants.clear();
             for (const auto& p : split(v, ',')) s.variants.push_back(parse_variant(p));
             if (s.variants.empty()) bad_value(k, v, "a nonempty variant list");
         }},
        {"sweep_mode",
         [](SweepSpec& s, const std::string& k, const std::string& v) {
             const std::string u = upper(v);
             if (u == "VARY_N") s.mode = SweepMode::VARY_N;
             else if (u == "VARY_D") s.mode = SweepMode::VARY_D;
             else bad_value(k, v, "vary_n or vary_d");
         }},
        {"d", [](SweepSpec& s, const std::string& k, const std::string& v) { s.d = parse_int_list(k, v); require_positive(k, s.d); }},
        {"n", [](SweepSpec& s, const std::string& k, const std::string& v) { s.n = parse_int_list(k, v); require_positive(k, s.n); }},
        {"c", [](SweepSpec& s, const std::string& k, const std::string& v) { s.c = parse_double_list(k, v); require_positive(k, s.c); }},
        {"k",
         [](SweepSpec& s, const std::string& k, const std::string& v) {
             s.k = parse_int_list(k, v);
             for (int x : s.k)
                 if (x < 0) throw InvalidArgument("config key 'k': values must be nonnegative");
         }},
        {"r", [](SweepSpec& s, const std::string& k, const std::string& v) { s.r = parse_int_list(k, v); require_positive(k, s.r); }},
        {"eta_trn", [](SweepSpec& s, const std::string& k, const std::string& v) { s.eta_trn = parse_double_list(k, v); require_positive(k, s.eta_trn); }},
        {"eta_tst", [](SweepSpec& s, const std::string& k, const std::string& v) { s.eta_tst = parse_double_list(k, v); require_positive(k, s.eta_tst); }},
        {"index_sets",
         [](SweepSpec& s, const std::string&, const std::string& v) {
             s.index_sets.clear();
             for (const auto& part : split(v, ';')) s.index_sets.push_back(IndexSet::parse(part));
         }},
        {"lambda",
         [](SweepSpec& s, const std::string& k, const std::string& v) {
             s.lambda = parse_double(k, v);
             if (s.lambda < 0) throw InvalidArgument("config key 'lambda': must be nonnegative");
         }},
        {"trials",
         [](SweepSpec& s, const std::string& k, const std::string& v) {
             s.trials = static_cast<int>(parse_int(k, v));
             if (s.trials < 1) throw InvalidArgument("config key 'trials': must be >= 1");
         }},
        {"inner_trials",
         [](SweepSpec& s, const std::string& k, const std::string& v) {
             s.inner_trials = static_cast<int>(parse_int(k, v));
             if (s.inner_trials < 0) throw InvalidArgument("config key 'inner_trials': must be >= 0");
         }},
        {"seed", [](SweepSpec& s, const std::string& k, const std::string& v) { s.base_seed = parse_u64(k, v); }},
        {"base_seed", [](SweepSpec& s, const std::string& k, const std::string& v) { s.base_seed = parse_u64(k, v); }},
        {"out", [](SweepSpec& s, const std::string&, const std::string& v) { s.out = v; }},
        {"n_tst",
         [](SweepSpec& s, const std::string& k, const std::string& v) {
             s.n_tst = static_cast<int>(parse_int(k, v));
             if (s.n_tst < 1) throw InvalidArgument("config key 'n_tst': must be >= 1");
         }},
        {"cond_bound",
         [](SweepSpec& s, const std::string& k, const std::string& v) {
             s.cond_bound = parse_double(k, v);
             if (s.cond_bound < 1) throw InvalidArgument("config key 'cond_bound': must be >= 1");
         }},
        {"spectrum_shape",
         [](SweepSpec& s, const std::string& k, const std::string& v) {
             const std::string u = upper(v);
             if (u == "LOG_UNIFORM" || u == "LOGUNIFORM") s.shape = SpectrumShape::LogUniform;
             else if (u == "CONSTANT") s.shape = SpectrumShape::Constant;
             else bad_value(k, v, "log_uniform or constant");
         }},
        {"workers",
         [](SweepSpec& s, const std::string& k, const std::string& v) {
             s.workers = static_cast<int>(parse_int(k, v));
             if (s.workers < 1) throw InvalidArgument("config key 'workers': must be >= 1");
         }},
    };
    return table;
}

void apply(SweepSpec& spec, const std::string& key, const std::string& value, int line) {
    const auto& table = setters();
    const auto it = table.find(key);
    if (it == table.end()) {
        std::string msg = "unknown config key '" + key + "'";
        if (line > 0) msg += " (line " + std::to_string(line) + ")";
        msg += "; valid keys:";
        for (const auto& k : valid_config_keys()) msg += " " + k;
        throw InvalidArgument(msg);
    }
    it->second(spec, key, value);
}

}  // namespace

Experiment parse_experiment(const std::string& s) {
    const std::string u = upper(trim(s));
    for (Experiment e : {Experiment::RISK_CURVE, Experiment::BOTTLENECK_SWEEP, Experiment::CRITICAL_POINT_COMPARE,
                         Experiment::SPECTRUM, Experiment::ALIGNMENT, Experiment::TRAIN_VERIFY})
        if (to_string(e) == u) return e;
    throw InvalidArgument("unknown experiment '" + s + "'");
}

std::vector<std::string> valid_config_keys() {
    std::vector<std::string> keys;
    for (const auto& [k, _] : setters()) keys.push_back(k);
    return keys;
}

SweepSpec parse_config_text(const std::string& text, const std::vector<std::pair<std::string, std::string>>& overrides) {
    SweepSpec spec;
    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError("expected 'key = value'", lineno);
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw ParseError("empty key", lineno);
        apply(spec, key, trim(line.substr(eq + 1)), lineno);
    }
    for (const auto& [k, v] : overrides) apply(spec, trim(k), trim(v), 0);
    return spec;
}

SweepSpec parse_config(const std::optional<std::string>& path,
                       const std::vector<std::pair<std::string, std::string>>& overrides) {
    std::string text;
    if (path) {
        std::ifstream in(*path);
        if (!in) throw InvalidArgument("cannot read config file " + *path);
        std::stringstream buf;
        buf << in.rdbuf();
        text = buf.str();
    }
    return parse_config_text(text, overrides);
}

std::string format_config(const SweepSpec& s) {
    std::ostringstream o;
    auto ints = [](const std::vector<int>& v) {
        std::string out;
        for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
        return out;
    };
    auto dbls = [](const std::vector<double>& v) {
        std::string out;
        char buf[32];
        for (std::size_t i = 0; i < v.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%.17g", v[i]);
            out += (i ? "," : "") + std::string(buf);
        }
        return out;
    };
    o << "experiment = " << to_string(s.experiment) << "\n";
    o << "variants = ";
    for (std::size_t i = 0; i < s.variants.size(); ++i) o << (i ? "," : "") << to_string(s.variants[i]);
    o << "\nsweep_mode = " << (s.mode == SweepMode::VARY_N ? "vary_n" : "vary_d") << "\n";
    o << "d = " << ints(s.d) << "\nn = " << ints(s.n) << "\n";
    if (!s.c.empty()) o << "c = " << dbls(s.c) << "\n";
    o << "k = " << ints(s.k) << "\nr = " << ints(s.r) << "\n";
    o << "eta_trn = " << dbls(s.eta_trn) << "\neta_tst = " << dbls(s.eta_tst) << "\n";
    if (!s.index_sets.empty()) {
        o << "index_sets = ";
        for (std::size_t i = 0; i < s.index_sets.size(); ++i) {
            std::string t = s.index_sets[i].to_string();
            std::replace(t.begin(), t.end(), ';', ',');
            o << (i ? ";" : "") << t;
        }
        o << "\n";
    }
    o << "lambda = " << dbls({s.lambda}) << "\ntrials = " << s.trials << "\ninner_trials = " << s.inner_trials << "\n";
    o << "seed = " << s.base_seed << "\nn_tst = " << s.n_tst << "\ncond_bound = " << dbls({s.cond_bound}) << "\n";
    o << "spectrum_shape = " << (s.shape == SpectrumShape::LogUniform ? "log_uniform" : "constant") << "\n";
    o << "workers = " << s.workers << "\n";
    if (!s.out.empty()) o << "out = " << s.out << "\n";
    return o.str();
}

}  // namespace ldae
