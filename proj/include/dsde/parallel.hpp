#pragma once

#include <cstddef>
#include <functional>

namespace dsde {

/// Worker cap: min(hardware_concurrency, DSDE_THREADS if set). At least 1.
int worker_count();

/// Runs body(i) for i in [0, count) across workers. Each index must write only
/// to its own pre-allocated slots; the split is deterministic, so results do
/// not depend on the worker cap.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

} // namespace dsde
