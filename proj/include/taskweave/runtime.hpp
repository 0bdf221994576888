#pragma once

#include <memory>
#include <string>

#include "taskweave/dep_system.hpp"
#include "taskweave/legacy_pool.hpp"
#include "taskweave/run_log.hpp"
#include "taskweave/sim_device.hpp"
#include "taskweave/substrate.hpp"
#include "taskweave/task_aware.hpp"

namespace tw {

struct RuntimeConfig {
    SubstrateConfig substrate;
    sim::DeviceConfig device;
    pool::ContentionConfig contention; // cores == 0 means "substrate workers"
    double poll_period = 0.5;
};

// Owns one of everything and wires the pieces together. The device, the
// polling layer, and the contention model come up lazily so scenarios that
// never touch them pay nothing.
class Runtime {
public:
    explicit Runtime(RuntimeConfig cfg);
    ~Runtime();

    Runtime(const Runtime&) = delete;
    Runtime& operator=(const Runtime&) = delete;

    deps::DependencySystem& deps() { return deps_; }
    RunLog& log() { return log_; }
    Substrate& substrate() { return *sub_; }
    sim::Device& device();
    ta::TaskAware& task_aware();
    pool::CoreContention& contention();
    const RuntimeConfig& config() const { return cfg_; }

    // Spawns under the default application instance.
    TaskId submit(TaskDef def) { return sub_->spawn(app_, std::move(def)); }

    void run() { sub_->run(); }

private:
    RuntimeConfig cfg_;
    deps::DependencySystem deps_;
    RunLog log_;
    std::unique_ptr<Substrate> sub_;
    InstanceId app_;
    std::unique_ptr<sim::Device> dev_;
    std::unique_ptr<ta::TaskAware> ta_;
    std::unique_ptr<pool::CoreContention> contention_;
};

} // namespace tw
