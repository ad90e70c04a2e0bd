#include "sea/instrument.hpp"

namespace sea::instrument {

namespace {
std::atomic<std::uint64_t> g_render_calls{0};
std::atomic<std::uint64_t> g_grad_forward_rows{0};
std::atomic<std::uint64_t> g_tape_nodes{0};
std::atomic<std::uint64_t> g_momentum_tape_nodes{0};
thread_local int t_pause_depth = 0;
}  // namespace

std::atomic<std::uint64_t>& render_calls() { return g_render_calls; }
std::atomic<std::uint64_t>& grad_forward_rows() { return g_grad_forward_rows; }
std::atomic<std::uint64_t>& tape_nodes() { return g_tape_nodes; }
std::atomic<std::uint64_t>& momentum_tape_nodes() { return g_momentum_tape_nodes; }

void reset_all() {
    g_render_calls = 0;
    g_grad_forward_rows = 0;
    g_tape_nodes = 0;
    g_momentum_tape_nodes = 0;
}

bool render_counting_paused() { return t_pause_depth > 0; }

PauseGuard::PauseGuard() { ++t_pause_depth; }
PauseGuard::~PauseGuard() { --t_pause_depth; }

}  // namespace sea::instrument
