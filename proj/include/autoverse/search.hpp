#pragma once

#include "autoverse/core.hpp"
#include "autoverse/dsl.hpp"
#include "autoverse/sim.hpp"
#include "autoverse/trajectory.hpp"

#include <algorithm>
#include <cstdint>
#include <queue>
#include <unordered_map>
#include <vector>

namespace autoverse {

struct SearchResult {
    std::vector<Action> best_actions;
    double best_reward = 0.0;
    // Expansions performed when the best node was generated (0 if the root is best).
    std::int64_t fitness = 0;
    std::int64_t expanded = 0;
    bool frontier_exhausted = false;
    std::int64_t budget = 0;
};

// Greedy best-first search over action sequences.
//
// The frontier pops the node with the highest accumulated reward, breaking
// ties by shallower depth and then by insertion order. Each expansion steps
// all three actions. Repeated states are deduplicated on state_key: a child is
// pruned when the same state is already known at a depth no greater and with
// a reward no smaller; otherwise it is kept and any entries it dominates are
// retired (their queued copies are skipped when popped and do not count as
// expansions). Terminal children are scored but never expanded. The search
// stops after `budget` expansions or when the frontier empties.
//
// The best solution is the node with the highest reward, shorter action
// sequences winning ties; the root is the initial best.
inline SearchResult best_first_search(const EnvGenome& g, std::int64_t budget) {
    if (budget < 1) {
        throw ValidationError("search budget must be >= 1");
    }

    struct Node {
        int parent;
        Action action;
        int depth;
        double reward;
        StateKey key;
        Orientation orientation;
        std::vector<std::uint8_t> packed; // board of an unexpanded node
    };
    struct Known {
        int depth;
        double reward;
        int node;
    };
    struct Entry {
        double reward;
        int depth;
        std::uint64_t seq;
        int node;
    };
    // std::priority_queue is a max-heap on `less`: "less" means lower priority.
    auto lower_priority = [](const Entry& a, const Entry& b) {
        if (a.reward != b.reward) {
            return a.reward < b.reward;
        }
        if (a.depth != b.depth) {
            return a.depth > b.depth;
        }
        return a.seq > b.seq;
    };

    std::vector<Node> nodes;
    std::unordered_map<StateKey, std::vector<Known>> seen;
    std::priority_queue<Entry, std::vector<Entry>, decltype(lower_priority)> frontier(lower_priority);
    std::uint64_t seq = 0;

    SearchResult res;
    res.budget = budget;

    const Board& init = g.init_map();
    auto restore = [&](const Node& n) {
        GameState s;
        s.board = Board::unpack(init.height(), init.width(), init.channels(), n.packed);
        s.player_pos = s.board.first_player();
        s.orientation = n.orientation;
        s.total_reward = n.reward;
        s.tick = n.depth;
        return s;
    };

    const GameState root = reset(g);
    const StateKey root_key = state_key(root);
    nodes.push_back({-1, Action::Forward, 0, root.total_reward, root_key, root.orientation, root.board.pack()});
    int best = 0;
    res.best_reward = nodes[0].reward;

    auto is_live = [&](const Entry& e) {
        const auto& list = seen.at(nodes[static_cast<std::size_t>(e.node)].key);
        return std::ranges::any_of(list, [&](const Known& k) { return k.node == e.node; });
    };
    auto consider = [&](int idx) {
        const Node& n = nodes[static_cast<std::size_t>(idx)];
        const Node& b = nodes[static_cast<std::size_t>(best)];
        if (n.reward > b.reward || (n.reward == b.reward && n.depth < b.depth)) {
            best = idx;
            res.fitness = res.expanded;
        }
    };

    if (!root.done) {
        seen[root_key].push_back({0, nodes[0].reward, 0});
        frontier.push({nodes[0].reward, 0, seq++, 0});
    }

    while (res.expanded < budget) {
        while (!frontier.empty() && !is_live(frontier.top())) {
            frontier.pop();
        }
        if (frontier.empty()) {
            break;
        }
        const int parent = frontier.top().node;
        frontier.pop();
        ++res.expanded;

        const GameState pstate = restore(nodes[static_cast<std::size_t>(parent)]);
        // Expanded nodes only need their path links from here on.
        nodes[static_cast<std::size_t>(parent)].packed = {};
        for (Action a : kAllActions) {
            StepResult sr = step(pstate, a, g);
            const int depth = pstate.tick + 1;
            const double reward = sr.state.total_reward;
            const int idx = static_cast<int>(nodes.size());

            if (sr.state.done) {
                nodes.push_back({parent, a, depth, reward, StateKey{}, sr.state.orientation, {}});
                consider(idx);
                continue;
            }

            const StateKey key = state_key(sr.state);
            auto& known = seen[key];
            const bool dominated = std::ranges::any_of(known, [&](const Known& k) {
                return k.depth <= depth && k.reward >= reward;
            });
            if (dominated) {
                continue;
            }
            std::erase_if(known, [&](const Known& k) { return depth <= k.depth && reward >= k.reward; });
            known.push_back({depth, reward, idx});
            nodes.push_back({parent, a, depth, reward, key, sr.state.orientation, sr.state.board.pack()});
            frontier.push({reward, depth, seq++, idx});
            consider(idx);
        }
    }

    while (!frontier.empty() && !is_live(frontier.top())) {
        frontier.pop();
    }
    res.frontier_exhausted = frontier.empty();

    res.best_reward = nodes[static_cast<std::size_t>(best)].reward;
    for (int i = best; nodes[static_cast<std::size_t>(i)].parent >= 0; i = nodes[static_cast<std::size_t>(i)].parent) {
        res.best_actions.push_back(nodes[static_cast<std::size_t>(i)].action);
    }
    std::ranges::reverse(res.best_actions);
    return res;
}

inline TrajectoryRecord extract_trajectory(const SearchResult& r, const EnvGenome& g, int generation = 0) {
    TrajectoryRecord rec;
    rec.genome_id = g.id();
    rec.genome_text = g.canonical_text();
    rec.actions = r.best_actions;
    rec.reward = r.best_reward;
    rec.fitness = r.fitness;
    rec.budget = r.budget;
    rec.generation = generation;
    return rec;
}

} // namespace autoverse
