#include "taskweave/config.hpp"

#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace tw::cli {

const char* to_string(Workload v) {
    return v == Workload::cg ? "cg" : "pipeline";
}
const char* to_string(Variant v) {
    return v == Variant::monolithic ? "monolithic" : "tasks";
}
const char* to_string(Backend v) {
    switch (v) {
    case Backend::host: return "host";
    case Backend::device_blocking: return "device-blocking";
    case Backend::device_ta: return "device-ta";
    }
    return "?";
}
const char* to_string(Mode v) {
    switch (v) {
    case Mode::single_rt: return "single-rt";
    case Mode::multi_rt_uncoordinated: return "multi-rt-uncoordinated";
    case Mode::multi_rt_unified: return "multi-rt-unified";
    }
    return "?";
}
const char* to_string(Clock v) {
    return v == Clock::virtual_clock ? "virtual" : "real";
}

namespace {

template <typename E>
E parse_choice(const std::string& value, std::initializer_list<E> choices,
               const std::string& key) {
    for (E e : choices)
        if (value == to_string(e))
            return e;
    std::string opts;
    for (E e : choices) {
        if (!opts.empty())
            opts += ", ";
        opts += to_string(e);
    }
    throw ConfigError("key '" + key + "': unknown value '" + value + "' (expected one of " +
                      opts + ")");
}

std::int64_t parse_int(const std::string& value, const std::string& key) {
    std::int64_t out = 0;
    auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc() || p != value.data() + value.size())
        throw ConfigError("key '" + key + "': expected an integer, got '" + value + "'");
    return out;
}

double parse_double(const std::string& value, const std::string& key) {
    try {
        std::size_t used = 0;
        double d = std::stod(value, &used);
        if (used != value.size())
            throw std::invalid_argument(value);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': expected a number, got '" + value + "'");
    }
}

std::vector<int> parse_int_list(const std::string& value, const std::string& key) {
    std::vector<int> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ','))
        out.push_back(static_cast<int>(parse_int(item, key)));
    if (out.empty())
        throw ConfigError("key '" + key + "': empty list");
    return out;
}

using Setter = std::function<void(ScenarioConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> m = {
        {"scenario_id", [](auto& c, auto&, auto& v) { c.scenario_id = v; }},
        {"workload",
         [](auto& c, auto& k, auto& v) {
             c.workload = parse_choice(v, {Workload::cg, Workload::pipeline}, k);
         }},
        {"variant",
         [](auto& c, auto& k, auto& v) {
             c.variant = parse_choice(v, {Variant::monolithic, Variant::tasks}, k);
         }},
        {"tiles", [](auto& c, auto& k, auto& v) { c.tiles = parse_int_list(v, k); }},
        {"backend",
         [](auto& c, auto& k, auto& v) {
             c.backend = parse_choice(
                 v, {Backend::host, Backend::device_blocking, Backend::device_ta}, k);
         }},
        {"mode",
         [](auto& c, auto& k, auto& v) {
             c.mode = parse_choice(v,
                                   {Mode::single_rt, Mode::multi_rt_uncoordinated,
                                    Mode::multi_rt_unified},
                                   k);
         }},
        {"workers",
         [](auto& c, auto& k, auto& v) { c.workers = static_cast<int>(parse_int(v, k)); }},
        {"clock",
         [](auto& c, auto& k, auto& v) {
             c.clock = parse_choice(v, {Clock::virtual_clock, Clock::real_clock}, k);
         }},
        {"repetitions",
         [](auto& c, auto& k, auto& v) { c.repetitions = static_cast<int>(parse_int(v, k)); }},
        {"seed",
         [](auto& c, auto& k, auto& v) {
             c.seed = static_cast<std::uint64_t>(parse_int(v, k));
         }},
        {"poll_period", [](auto& c, auto& k, auto& v) { c.poll_period = parse_double(v, k); }},
        {"pool_count",
         [](auto& c, auto& k, auto& v) { c.pool_count = static_cast<int>(parse_int(v, k)); }},
        {"pool_threads",
         [](auto& c, auto& k, auto& v) { c.pool_threads = static_cast<int>(parse_int(v, k)); }},
        {"stream_pool",
         [](auto& c, auto& k, auto& v) { c.stream_pool = static_cast<int>(parse_int(v, k)); }},
        {"iterations",
         [](auto& c, auto& k, auto& v) { c.iterations = static_cast<int>(parse_int(v, k)); }},
        {"warmup",
         [](auto& c, auto& k, auto& v) { c.warmup = static_cast<int>(parse_int(v, k)); }},
        {"nx", [](auto& c, auto& k, auto& v) { c.nx = static_cast<int>(parse_int(v, k)); }},
        {"ny", [](auto& c, auto& k, auto& v) { c.ny = static_cast<int>(parse_int(v, k)); }},
        {"nz", [](auto& c, auto& k, auto& v) { c.nz = static_cast<int>(parse_int(v, k)); }},
        {"pl_batch", [](auto& c, auto& k, auto& v) { c.pl_batch = parse_int(v, k); }},
        {"pl_context", [](auto& c, auto& k, auto& v) { c.pl_context = parse_int(v, k); }},
        {"pl_channels", [](auto& c, auto& k, auto& v) { c.pl_channels = parse_int(v, k); }},
        {"pl_out_channels",
         [](auto& c, auto& k, auto& v) { c.pl_out_channels = parse_int(v, k); }},
        {"pl_b_gran", [](auto& c, auto& k, auto& v) { c.pl_b_gran = parse_int(v, k); }},
        {"pl_t_gran", [](auto& c, auto& k, auto& v) { c.pl_t_gran = parse_int(v, k); }},
    };
    return m;
}

} // namespace

void apply_key(ScenarioConfig& c, const std::string& key, const std::string& value) {
    auto it = setters().find(key);
    if (it == setters().end())
        throw ConfigError("unknown config key '" + key + "'");
    it->second(c, key, value);
}

std::vector<std::string> config_keys() {
    std::vector<std::string> out;
    for (const auto& [k, _] : setters())
        out.push_back(k);
    return out;
}

void apply_config_stream(ScenarioConfig& c, std::istream& is, const std::string& name) {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        std::size_t b = line.find_first_not_of(" \t");
        if (b == std::string::npos || line[b] == '#')
            continue;
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(name + ":" + std::to_string(lineno) + ": expected key=value");
        std::string key = line.substr(b, eq - b);
        std::string value = line.substr(eq + 1);
        while (!key.empty() && (key.back() == ' ' || key.back() == '\t'))
            key.pop_back();
        std::size_t vb = value.find_first_not_of(" \t");
        value = vb == std::string::npos ? "" : value.substr(vb);
        while (!value.empty() && (value.back() == ' ' || value.back() == '\t' ||
                                  value.back() == '\r'))
            value.pop_back();
        try {
            apply_key(c, key, value);
        } catch (const ConfigError& e) {
            throw ConfigError(name + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
}

void apply_config_file(ScenarioConfig& c, const std::string& path) {
    std::ifstream is(path);
    if (!is)
        throw ConfigError("cannot open config file '" + path + "'");
    apply_config_stream(c, is, path);
}

void apply_env(ScenarioConfig& c) {
    for (const std::string& key : config_keys()) {
        std::string var = "TASKWEAVE_";
        for (char ch : key)
            var += static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
        if (const char* v = std::getenv(var.c_str()))
            apply_key(c, key, v);
    }
}

void ScenarioConfig::validate() const {
    if (tiles.empty())
        throw ConfigError("tiles sweep list is empty");
    for (int t : tiles)
        if (t < 1)
            throw ConfigError("tile count must be >= 1");
    if (workers < 1)
        throw ConfigError("workers must be >= 1");
    if (repetitions < 1)
        throw ConfigError("repetitions must be >= 1");
    if (iterations < 1)
        throw ConfigError("iterations must be >= 1");
    if (warmup < 0)
        throw ConfigError("warmup must be >= 0");
    if (poll_period <= 0)
        throw ConfigError("poll_period must be > 0");
    if (pool_count < 1 || pool_threads < 1)
        throw ConfigError("pool_count and pool_threads must be >= 1");
    if (stream_pool < 1)
        throw ConfigError("stream_pool must be >= 1");
    if (nx < 1 || ny < 1 || nz < 1)
        throw ConfigError("stencil dims must be >= 1");
    if (workload == Workload::pipeline) {
        if (backend != Backend::host)
            throw ConfigError("pipeline workload supports the host backend only");
        if (mode != Mode::single_rt)
            throw ConfigError("pipeline workload supports single-rt mode only");
    }
    if (variant == Variant::monolithic)
        for (int t : tiles)
            if (t != 1)
                throw ConfigError("monolithic variant requires tiles=1");
}

std::string ScenarioConfig::id_for(int tile) const {
    if (!scenario_id.empty())
        return scenario_id + "-t" + std::to_string(tile);
    std::string s;
    s += to_string(workload);
    s += '-';
    s += to_string(variant);
    s += '-';
    s += to_string(backend);
    s += '-';
    s += to_string(mode);
    s += "-w" + std::to_string(workers);
    s += "-t" + std::to_string(tile);
    return s;
}

} // namespace tw::cli
