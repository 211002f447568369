#pragma once

#include <cstdint>
#include <string>

#include "ifcps/protocols.hpp"

namespace ifcps {

enum class Protocol { Diagnosis, Curation, Safety, Ablation, Score };

std::string to_string(Protocol p);
Protocol protocol_from_string(const std::string& name);

struct RunConfig {
    std::string env;
    Protocol protocol = Protocol::Score;
    std::string out_dir = "runs";
    bool rates_given = false; // user set rates explicitly (score protocol poisons only then)
    ProtocolConfig protocol_cfg;
};

// Parses a flat JSON object; unknown keys and out-of-range values raise
// ConfigError naming the offender. Defaults fill everything except env and
// protocol.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

// Canonical snapshot with every field in fixed order; identical configs hash
// identically and any field change alters the hash.
std::string canonical_config_json(const RunConfig& cfg);
std::uint64_t config_hash(const RunConfig& cfg);

} // namespace ifcps
