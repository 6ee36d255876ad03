#pragma once

#include <cstddef>
#include <functional>

namespace flowsentry::par {

/// Process-wide worker cap. Defaults to the logical core count; the CLI's
/// --threads flag lowers it. Always >= 1.
int max_threads();
void set_max_threads(int n);

/// Runs fn(begin, end) over [0, n) split into fixed-size chunks of `grain`
/// elements. Chunk boundaries depend only on (n, grain), never on the worker
/// count, so per-chunk outputs are identical for any thread setting. fn must
/// write only to its own slots; reductions happen after, in chunk order.
void parallel_for(std::size_t n, std::size_t grain,
                  const std::function<void(std::size_t, std::size_t)>& fn);

} // namespace flowsentry::par
