#pragma once

#include "autoverse/core.hpp"
#include "autoverse/dsl.hpp"
#include "autoverse/rule_engine.hpp"

#include <array>
#include <barrier>
#include <cstdint>
#include <span>
#include <thread>
#include <vector>

namespace autoverse {

inline GameState reset(const EnvGenome& g) {
    GameState s;
    s.board = g.init_map();
    s.player_pos = s.board.first_player();
    s.orientation = Orientation::North;
    s.total_reward = 0.0;
    s.tick = 0;
    s.done = !s.player_pos.has_value();
    return s;
}

struct StepResult {
    GameState state;
    double reward = 0.0;
};

// One environment tick: the action places force (Forward) or turns the
// player, every rule fires once against the resulting board, and leftover
// force is cleared so it never outlives its tick.
inline StepResult step(const GameState& s, Action a, const EnvGenome& g) {
    if (s.done) {
        throw ContractError("step called on a finished episode (tick " + std::to_string(s.tick) + ")");
    }
    Board board = s.board;
    Orientation facing = s.orientation;
    switch (a) {
    case Action::RotateLeft: facing = rotate_left(facing); break;
    case Action::RotateRight: facing = rotate_right(facing); break;
    case Action::Forward:
        if (s.player_pos) {
            const Cell d = facing_offset(facing);
            const int r = s.player_pos->row + d.row;
            const int c = s.player_pos->col + d.col;
            if (board.in_bounds(r, c)) {
                board.set(kForce, r, c);
            }
        }
        break;
    }

    TickResult tick = step_rules(board, g.rules());
    tick.next.clear_plane(kForce);

    StepResult out;
    out.reward = tick.reward;
    out.state.board = std::move(tick.next);
    out.state.player_pos = out.state.board.first_player();
    out.state.orientation = facing;
    out.state.total_reward = s.total_reward + tick.reward;
    out.state.tick = s.tick + 1;
    out.state.done = !out.state.player_pos || out.state.tick >= g.episode_limit();
    return out;
}

struct RolloutResult {
    GameState final_state;
    std::vector<double> rewards; // one per executed action
};

// Actions past the end of the episode are ignored.
inline RolloutResult rollout(const EnvGenome& g, std::span<const Action> actions) {
    RolloutResult res{reset(g), {}};
    res.rewards.reserve(actions.size());
    for (Action a : actions) {
        if (res.final_state.done) {
            break;
        }
        auto [next, reward] = step(res.final_state, a, g);
        res.final_state = std::move(next);
        res.rewards.push_back(reward);
    }
    return res;
}

// Batched rollouts. Environments are split across workers and advance in
// lockstep: no environment starts tick t + 1 before every environment has
// finished tick t. Result i is identical to rollout(genomes[i], actions[i]).
inline std::vector<RolloutResult> rollout_batch(std::span<const EnvGenome> genomes,
                                                std::span<const std::vector<Action>> actions,
                                                unsigned workers = std::thread::hardware_concurrency()) {
    if (genomes.size() != actions.size()) {
        throw ContractError("rollout_batch: " + std::to_string(genomes.size()) + " genomes but " +
                            std::to_string(actions.size()) + " action lists");
    }
    const std::size_t n = genomes.size();
    std::vector<RolloutResult> results(n);
    std::size_t horizon = 0;
    for (std::size_t i = 0; i < n; ++i) {
        results[i].final_state = reset(genomes[i]);
        results[i].rewards.reserve(actions[i].size());
        horizon = std::max(horizon, actions[i].size());
    }

    auto advance = [&](std::size_t i, std::size_t t) {
        auto& r = results[i];
        if (t >= actions[i].size() || r.final_state.done) {
            return;
        }
        auto [next, reward] = step(r.final_state, actions[i][t], genomes[i]);
        r.final_state = std::move(next);
        r.rewards.push_back(reward);
    };

    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
    if (workers == 1) {
        for (std::size_t t = 0; t < horizon; ++t) {
            for (std::size_t i = 0; i < n; ++i) {
                advance(i, t);
            }
        }
        return results;
    }

    std::barrier sync(static_cast<std::ptrdiff_t>(workers));
    {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                for (std::size_t t = 0; t < horizon; ++t) {
                    for (std::size_t i = w; i < n; i += workers) {
                        advance(i, t);
                    }
                    sync.arrive_and_wait();
                }
            });
        }
    }
    return results;
}

// Rule patterns are padded to 3x3 in the encoding so its length only depends
// on the number of mutable rules and tiles.
inline std::size_t rule_encoding_length(std::size_t mutable_rules, int channels) {
    return mutable_rules * (2 * kMaxPatternSide * kMaxPatternSide * static_cast<std::size_t>(channels) + 3);
}

struct Observation {
    int window = 0;
    int channels = 0;
    std::vector<std::uint8_t> patch;         // window x window x channels, [row][col][tile]
    std::vector<std::uint8_t> rule_encoding; // per mutable rule: in (3x3xC), out (3x3xC), reward sign (-,0,+)
    std::array<std::uint8_t, 4> orientation{}; // one-hot N, E, S, W

    std::size_t bit_count() const { return patch.size() + rule_encoding.size() + orientation.size(); }

    // patch, then rule encoding, then orientation; one byte per bit.
    std::vector<std::uint8_t> flatten() const {
        std::vector<std::uint8_t> out;
        out.reserve(bit_count());
        out.insert(out.end(), patch.begin(), patch.end());
        out.insert(out.end(), rule_encoding.begin(), rule_encoding.end());
        out.insert(out.end(), orientation.begin(), orientation.end());
        return out;
    }

    friend bool operator==(const Observation&, const Observation&) = default;
};

inline void validate_window(int window, const Board& board) {
    const int max_window = 2 * std::max(board.height(), board.width()) - 1;
    if (window < 1 || window % 2 == 0 || window > max_window) {
        throw ValidationError("obs window " + std::to_string(window) + " must be odd and within 1.." +
                              std::to_string(max_window));
    }
}

inline std::vector<std::uint8_t> encode_rules(const Ruleset& rs) {
    const int c = rs.tiles().count();
    std::vector<std::uint8_t> enc;
    enc.reserve(rule_encoding_length(rs.mutable_count(), c));
    auto put_pattern = [&](const Pattern& p) {
        for (int r = 0; r < kMaxPatternSide; ++r) {
            for (int col = 0; col < kMaxPatternSide; ++col) {
                const TileMask m = (r < p.rows() && col < p.cols()) ? p.at(r, col) : 0;
                for (int t = 0; t < c; ++t) {
                    enc.push_back((m & tile_bit(t)) ? 1 : 0);
                }
            }
        }
    };
    for (const auto& rule : rs.rules()) {
        if (!rule.is_mutable) {
            continue;
        }
        put_pattern(rule.input);
        put_pattern(rule.output);
        enc.push_back(rule.reward < 0 ? 1 : 0);
        enc.push_back(rule.reward == 0 ? 1 : 0);
        enc.push_back(rule.reward > 0 ? 1 : 0);
    }
    return enc;
}

// Zero-padded window centred on the player plus the mutable-rule encoding
// (zeroed when rules are hidden) and the orientation.
inline Observation observe(const GameState& s, const EnvGenome& g, int window, bool show_rules) {
    const Board& b = s.board;
    validate_window(window, b);
    Observation obs;
    obs.window = window;
    obs.channels = b.channels();
    obs.patch.assign(static_cast<std::size_t>(window) * window * b.channels(), 0);
    if (s.player_pos) {
        const int half = window / 2;
        for (int dr = 0; dr < window; ++dr) {
            for (int dc = 0; dc < window; ++dc) {
                const int r = s.player_pos->row - half + dr;
                const int c = s.player_pos->col - half + dc;
                if (!b.in_bounds(r, c)) {
                    continue;
                }
                const std::size_t base = (static_cast<std::size_t>(dr) * window + dc) * b.channels();
                for (int t = 0; t < b.channels(); ++t) {
                    obs.patch[base + t] = b.get(t, r, c) ? 1 : 0;
                }
            }
        }
    }
    if (show_rules) {
        obs.rule_encoding = encode_rules(g.rules());
    } else {
        obs.rule_encoding.assign(rule_encoding_length(g.rules().mutable_count(), b.channels()), 0);
    }
    obs.orientation[static_cast<std::size_t>(s.orientation)] = 1;
    return obs;
}

} // namespace autoverse
