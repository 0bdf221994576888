#pragma once

#include <functional>
#include <utility>

#include <boost/context/fiber.hpp>
#include <boost/context/fixedsize_stack.hpp>

#include "taskweave/types.hpp"

namespace tw {

// Stackful execution context for one task body. The body is a plain
// callable; it parks by switching back to whoever resumed it, which is what
// lets a library call suspend the task transparently mid-body. A fiber may
// migrate between worker threads but runs on at most one at a time.
class Fiber {
public:
    explicit Fiber(std::function<void()> body, std::size_t stack_bytes = 128 * 1024)
        : cont_(std::allocator_arg, boost::context::fixedsize_stack(stack_bytes),
                [this, body = std::move(body)](boost::context::fiber&& from) {
                    return_to_ = std::move(from);
                    body();
                    done_ = true;
                    return std::move(return_to_);
                }) {}

    Fiber(const Fiber&) = delete;
    Fiber& operator=(const Fiber&) = delete;

    // Scheduler side: runs the body until it parks or returns.
    void resume() {
        if (done_ || !cont_)
            throw ContractViolation("resume of a finished fiber");
        cont_ = std::move(cont_).resume();
    }

    // Body side: switches back to the scheduler; returns on next resume().
    void park() { return_to_ = std::move(return_to_).resume(); }

    bool done() const { return done_; }

private:
    boost::context::fiber cont_;
    boost::context::fiber return_to_;
    bool done_ = false;
};

} // namespace tw
