#pragma once

#include <functional>

#include "mavtrack/environment.hpp"

namespace mavtrack {

using Policy = std::function<Commandd(const Observation&)>;

/// In-process policy for the configured controller type. Stateful
/// controllers own their memory inside the returned closure; `external`
/// has no in-process policy and is rejected.
Policy make_policy(const EpisodeConfig& cfg);

EpisodeLog run_episode(const EpisodeConfig& cfg, std::uint64_t seed);
EpisodeLog run_episode_with_policy(const EpisodeConfig& cfg, std::uint64_t seed, const Policy& policy);

/// Hover command for the nominal parameters.
Commandd hover_command(const VehicleParamsd& nominal);

}  // namespace mavtrack
