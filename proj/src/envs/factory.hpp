#pragma once

#include <memory>

#include "ifcps/env.hpp"

namespace ifcps {

std::unique_ptr<Environment> make_pendulum();
std::unique_ptr<Environment> make_cartpole();
std::unique_ptr<Environment> make_lander2d();
std::unique_ptr<Environment> make_quadrotor();
std::unique_ptr<Environment> make_hvac();
std::unique_ptr<Environment> make_cstr();

} // namespace ifcps
