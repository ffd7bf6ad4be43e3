#pragma once

#include "autoverse/dsl.hpp"
#include "autoverse/evolve.hpp"
#include "autoverse/sim.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace autoverse {

// One glyph per cell: player, force, food and wall win in that order; a
// floor-only cell is '.', a cell with exactly one extra tile shows that
// tile's letter (a, b, ...), several extras show '*', an empty cell ' '.
inline char cell_glyph(TileMask m) {
    if (m & tile_bit(kPlayer)) return '@';
    if (m & tile_bit(kForce)) return '+';
    if (m & tile_bit(kFood)) return 'o';
    if (m & tile_bit(kWall)) return '#';
    const TileMask extras = m & ~((tile_bit(kReservedTiles)) - 1);
    if (extras == 0) {
        return (m & tile_bit(kFloor)) ? '.' : ' ';
    }
    if (std::popcount(extras) > 1) {
        return '*';
    }
    const int idx = std::countr_zero(extras) - kReservedTiles;
    return idx < 26 ? static_cast<char>('a' + idx) : '?';
}

inline std::string render_frame(const GameState& s) {
    std::string out = "t=" + std::to_string(s.tick) + " reward=" + detail::format_real(s.total_reward) + '\n';
    for (int r = 0; r < s.board.height(); ++r) {
        for (int c = 0; c < s.board.width(); ++c) {
            out += cell_glyph(s.board.cell(r, c));
        }
        out += '\n';
    }
    return out;
}

// Episode states from reset through each executed action (actions after the
// episode ends are dropped).
inline std::vector<GameState> episode_states(const EnvGenome& g, std::span<const Action> actions) {
    std::vector<GameState> states{reset(g)};
    for (Action a : actions) {
        if (states.back().done) {
            break;
        }
        states.push_back(step(states.back(), a, g).state);
    }
    return states;
}

inline std::vector<std::string> render_frames(const EnvGenome& g, std::span<const Action> actions) {
    std::vector<std::string> frames;
    for (const auto& s : episode_states(g, actions)) {
        frames.push_back(render_frame(s));
    }
    return frames;
}

using Rgb = std::array<std::uint8_t, 3>;

inline Rgb cell_colour(TileMask m) {
    static constexpr std::array<Rgb, 8> extra_palette{{{230, 200, 40},
                                                       {220, 60, 60},
                                                       {160, 80, 200},
                                                       {240, 140, 40},
                                                       {60, 200, 200},
                                                       {200, 100, 160},
                                                       {120, 160, 60},
                                                       {150, 110, 70}}};
    if (m & tile_bit(kPlayer)) return {40, 90, 240};
    if (m & tile_bit(kForce)) return {255, 255, 255};
    if (m & tile_bit(kFood)) return {40, 180, 70};
    if (m & tile_bit(kWall)) return {70, 70, 70};
    const TileMask extras = m & ~((tile_bit(kReservedTiles)) - 1);
    if (extras != 0) {
        return extra_palette[static_cast<std::size_t>(std::countr_zero(extras) - kReservedTiles) % extra_palette.size()];
    }
    return (m & tile_bit(kFloor)) ? Rgb{215, 215, 200} : Rgb{0, 0, 0};
}

// Binary PPM (P6), `scale` pixels per cell.
inline std::string render_ppm(const Board& b, int scale = 8) {
    const int h = b.height() * scale;
    const int w = b.width() * scale;
    std::string out = "P6\n" + std::to_string(w) + ' ' + std::to_string(h) + "\n255\n";
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const Rgb px = cell_colour(b.cell(y / scale, x / scale));
            out.append(reinterpret_cast<const char*>(px.data()), px.size());
        }
    }
    return out;
}

inline std::optional<Action> key_action(char key) {
    switch (key) {
    case 'a': case 'h': return Action::RotateLeft;
    case 'd': case 'l': return Action::RotateRight;
    case 'w': case 'k': return Action::Forward;
    default: return std::nullopt;
    }
}

// Interactive episode: one key per step (a/h left, d/l right, w/k forward,
// q quit). Unknown keys leave the state untouched. Returns the total reward.
inline double play_session(const EnvGenome& g, std::istream& in, std::ostream& out) {
    GameState s = reset(g);
    out << render_frame(s) << "keys: a=left d=right w=forward q=quit\n";
    char key = 0;
    while (!s.done && in.get(key)) {
        if (key == ' ' || key == '\n' || key == '\r' || key == '\t') {
            continue;
        }
        if (key == 'q') {
            break;
        }
        const auto action = key_action(key);
        if (!action) {
            out << "unknown key '" << key << "' (a=left d=right w=forward q=quit)\n";
            continue;
        }
        s = step(s, *action, g).state;
        out << render_frame(s);
    }
    if (s.done) {
        out << (s.player_pos ? "episode limit reached\n" : "player removed, episode over\n");
    }
    out << "total reward: " << detail::format_real(s.total_reward) << '\n';
    return s.total_reward;
}

} // namespace autoverse
