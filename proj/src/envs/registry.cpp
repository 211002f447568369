#include "factory.hpp"
#include "ifcps/errors.hpp"

namespace ifcps {

std::vector<std::string> registered_envs() {
    return {"pendulum", "cartpole", "lander2d", "quadrotor", "hvac", "cstr"};
}

std::unique_ptr<Environment> make_env(const std::string& name) {
    if (name == "pendulum") return make_pendulum();
    if (name == "cartpole") return make_cartpole();
    if (name == "lander2d") return make_lander2d();
    if (name == "quadrotor") return make_quadrotor();
    if (name == "hvac") return make_hvac();
    if (name == "cstr") return make_cstr();
    std::string valid;
    for (const auto& n : registered_envs()) {
        if (!valid.empty()) valid += ", ";
        valid += n;
    }
    throw ConfigError("unknown environment '" + name + "' (valid: " + valid + ")");
}

} // namespace ifcps
