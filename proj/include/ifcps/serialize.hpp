#pragma once

#include <string>

#include "ifcps/env.hpp"
#include "ifcps/mlp.hpp"
#include "ifcps/trajectory.hpp"

namespace ifcps {

// Reals in every emitted file are printed with 17 significant digits, enough
// to reload any double bit-exactly.
std::string format_real(double v);

// One JSON document per dataset:
// {env, n, m, dt, demos:[{states:[[..]], actions:[[..]]}], poison_labels:[..]}
void save_dataset(const std::string& path, const Dataset& data);
Dataset load_dataset(const std::string& path);

struct Checkpoint {
    MlpParams params;
    ActionKind action_kind = ActionKind::Continuous;
};

// Model checkpoint: {arch:{n, hidden, m, action_kind}, flat_params:[..]}
void save_checkpoint(const std::string& path, const MlpParams& params, ActionKind kind);
Checkpoint load_checkpoint(const std::string& path);

} // namespace ifcps
