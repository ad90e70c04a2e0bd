#pragma once

#include <atomic>
#include <cstdint>

namespace sea::instrument {

// Process-wide accounting counters. Training-cost contracts (renders per
// sample, gradient-bearing forwards, tape-free momentum path) are asserted
// against these in tests. Bookkeeping paths (evaluation, feature export)
// suspend render counting with a PauseGuard so the training ledger stays
// exact.

std::atomic<std::uint64_t>& render_calls();
std::atomic<std::uint64_t>& grad_forward_rows();
std::atomic<std::uint64_t>& tape_nodes();
std::atomic<std::uint64_t>& momentum_tape_nodes();

void reset_all();

bool render_counting_paused();

class PauseGuard {
public:
    PauseGuard();
    ~PauseGuard();
    PauseGuard(const PauseGuard&) = delete;
    PauseGuard& operator=(const PauseGuard&) = delete;
};

inline void count_render() {
    if (!render_counting_paused()) render_calls().fetch_add(1, std::memory_order_relaxed);
}

}  // namespace sea::instrument
