#include "taskweave/runtime.hpp"

namespace tw {

Runtime::Runtime(RuntimeConfig cfg) : cfg_(cfg) {
    sub_ = Substrate::start(cfg_.substrate, deps_, log_);
    app_ = sub_->register_instance("app");
}

Runtime::~Runtime() = default;

sim::Device& Runtime::device() {
    if (!dev_)
        dev_ = std::make_unique<sim::Device>(*sub_, cfg_.device);
    return *dev_;
}

ta::TaskAware& Runtime::task_aware() {
    if (!ta_) {
        ta_ = std::make_unique<ta::TaskAware>(*sub_, deps_, device(), cfg_.poll_period);
        ta_->start();
    }
    return *ta_;
}

pool::CoreContention& Runtime::contention() {
    if (!contention_) {
        pool::ContentionConfig c = cfg_.contention;
        if (c.cores == 0)
            c.cores = cfg_.substrate.workers;
        contention_ = std::make_unique<pool::CoreContention>(*sub_, c);
    }
    return *contention_;
}

} // namespace tw
