#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ifcps/linalg.hpp"

namespace ifcps {

// A rollout or demonstration: T+1 states and the action taken at each state,
// including one at the final state, so pairs = T+1.
struct Trajectory {
    std::vector<FlatVec> states;
    std::vector<FlatVec> actions;
    bool diverged = false; // set when a rollout was truncated on non-finite state

    int length() const { return static_cast<int>(states.size()) - 1; } // T
};

struct Dataset {
    std::string env;
    std::size_t state_dim = 0;
    std::size_t action_dim = 0;
    double dt = 0.0;
    std::vector<Trajectory> demos;
    std::vector<std::uint8_t> poison_labels; // empty when no ground truth

    std::size_t size() const { return demos.size(); }
};

enum class FaultModel { ActionNoise, ActionOffset, ActionFlip };

std::string to_string(FaultModel fault);
FaultModel fault_from_string(const std::string& name);

} // namespace ifcps
