#pragma once

#include <cstddef>
#include <functional>

namespace vmm {

/// Worker count: VM_THREADS if set to a positive integer, else the hardware concurrency.
unsigned worker_count();

/// Run body(i) for i in [0, n) on up to worker_count() threads.
/// If several bodies throw, the exception of the lowest index is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace vmm
