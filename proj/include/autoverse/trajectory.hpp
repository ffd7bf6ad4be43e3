#pragma once

#include "autoverse/core.hpp"
#include "autoverse/dsl.hpp"
#include "autoverse/sim.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace autoverse {

// A genome together with its best known action sequence; the unit stored in
// the archive and replayed into imitation-learning pairs.
struct TrajectoryRecord {
    std::string genome_id;
    std::string genome_text;
    std::vector<Action> actions;
    double reward = 0.0;
    std::int64_t fitness = 0;
    std::int64_t budget = 0;
    int generation = 0;

    friend bool operator==(const TrajectoryRecord&, const TrajectoryRecord&) = default;
};

inline double replay_reward(const TrajectoryRecord& rec) {
    const EnvGenome g = parse(rec.genome_text);
    return rollout(g, rec.actions).final_state.total_reward;
}

} // namespace autoverse
