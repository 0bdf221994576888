#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "taskweave/types.hpp"

namespace tw::cli {

enum class Workload { cg, pipeline };
enum class Variant { monolithic, tasks };
enum class Backend { host, device_blocking, device_ta };
enum class Mode { single_rt, multi_rt_uncoordinated, multi_rt_unified };
enum class Clock { virtual_clock, real_clock };

const char* to_string(Workload v);
const char* to_string(Variant v);
const char* to_string(Backend v);
const char* to_string(Mode v);
const char* to_string(Clock v);

// One experiment description. `tiles` is a sweep list: each entry is the CG
// tile count or the pipeline output-channel split for one run point.
struct ScenarioConfig {
    std::string scenario_id; // derived from the fields when empty
    Workload workload = Workload::cg;
    Variant variant = Variant::tasks;
    std::vector<int> tiles = {16};
    Backend backend = Backend::host;
    Mode mode = Mode::single_rt;
    int workers = 4;
    Clock clock = Clock::virtual_clock;
    int repetitions = 1;
    std::uint64_t seed = 7;
    double poll_period = 0.5;
    int pool_count = 4;   // legacy pools in multi-rt-uncoordinated mode
    int pool_threads = 8; // threads per legacy pool
    int stream_pool = 4;  // device stream pool capacity
    int iterations = 50;
    int warmup = 10; // leading iterations flagged as warmup in the CSV
    // CG stencil dims.
    int nx = 32, ny = 32, nz = 32;
    // Pipeline dims and producer granularity.
    std::int64_t pl_batch = 4, pl_context = 16;
    std::int64_t pl_channels = 32, pl_out_channels = 64;
    std::int64_t pl_b_gran = 1, pl_t_gran = 4;

    void validate() const;
    std::string id_for(int tile) const;
};

// Sets one key on the config; the key set is shared by config files, the
// TASKWEAVE_* environment, and the CLI flags. Throws ConfigError on an
// unknown key or an unparsable value.
void apply_key(ScenarioConfig& c, const std::string& key, const std::string& value);

std::vector<std::string> config_keys();

// Flat key=value lines, '#' comments. Diagnostics carry file:line.
void apply_config_file(ScenarioConfig& c, const std::string& path);
void apply_config_stream(ScenarioConfig& c, std::istream& is, const std::string& name);

// Applies every TASKWEAVE_<KEY> present in the environment.
void apply_env(ScenarioConfig& c);

} // namespace tw::cli
