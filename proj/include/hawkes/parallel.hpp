#pragma once

#include <cstddef>
#include <functional>
#include <optional>

namespace hawkes {

// Worker count: explicit request, else HAWKES_CPD_THREADS, else hardware.
int resolve_threads(std::optional<int> requested = std::nullopt);

// Runs body(i) for i in [0, n) on up to `threads` workers. Results must be
// written by index; the first exception thrown is rethrown after joining.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body);

}  // namespace hawkes
