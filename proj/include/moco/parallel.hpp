#pragma once

#include <cstddef>
#include <functional>

namespace moco {

/// Runs body(i) for i in [0, n) on up to `threads` workers. Work is handed
/// out by index, so results written to slot i do not depend on scheduling.
/// The exception from the lowest failing index is rethrown after all
/// workers have stopped.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body);

}  // namespace moco
