#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>

namespace roughvol {

// Worker count used by parallel_for. 0 selects the number of hardware threads.
void set_thread_count(std::size_t n);
std::size_t thread_count();

// Runs body(i) for i in [0, count). Work items must write to disjoint outputs;
// the first exception (lowest index) is rethrown after all workers stop.
// Nested calls run serially on the calling worker.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

// True on a thread currently running a parallel_for body.
bool in_parallel_region();

// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

// Deterministic child seed for an (a, b) stream of a base seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

}  // namespace roughvol
