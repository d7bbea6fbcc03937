#pragma once

#include <cstdint>
#include <functional>

namespace mlrn {

/// Worker cap: MLRN_THREADS if set and positive, else hardware concurrency.
int worker_count();

/// Runs body(i) for i in [0, count). Each index is handled by exactly one
/// worker, so results depend only on body, never on scheduling.
void parallel_for(std::int64_t count, const std::function<void(std::int64_t)>& body);

}  // namespace mlrn
