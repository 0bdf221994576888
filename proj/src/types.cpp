#include "taskweave/types.hpp"

namespace tw {

const char* to_string(TaskState s) {
    switch (s) {
    case TaskState::created: return "created";
    case TaskState::ready: return "ready";
    case TaskState::running: return "running";
    case TaskState::suspended: return "suspended";
    case TaskState::body_finished_pending_ops: return "body-finished-pending-ops";
    case TaskState::finished: return "finished";
    }
    return "?";
}

} // namespace tw
