#pragma once

#include "autoverse/core.hpp"

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace autoverse {

// When `input` is present at tick t, `output` replaces it at tick t + 1 and
// `reward` is paid once per match.
struct RewriteRule {
    std::string name;
    Pattern input;
    Pattern output;
    double reward = 0.0;
    bool rotate = false;    // also apply the three quarter-turn rotations
    bool is_mutable = true; // evolution may edit patterns and reward

    friend bool operator==(const RewriteRule&, const RewriteRule&) = default;
};

inline void validate_rule(const RewriteRule& rule, const TileSet& tiles) {
    if (!is_identifier(rule.name)) {
        throw ValidationError("invalid rule name '" + rule.name + "'");
    }
    if (rule.input.rows() != rule.output.rows() || rule.input.cols() != rule.output.cols()) {
        throw ValidationError("rule '" + rule.name + "': input and output shapes differ");
    }
    if (rule.input.max_tile() >= tiles.count() || rule.output.max_tile() >= tiles.count()) {
        throw ValidationError("rule '" + rule.name + "': tile index out of range for tileset of " +
                              std::to_string(tiles.count()));
    }
}

// Kernel pair for one orientation of a rule.
//
// kernel_in holds a 1 at every required input entry and kernel_out holds
// (output - input) entry-wise, both laid out [tile][row][col]. The tap lists
// are the non-zero entries of the kernels, precomputed so the convolutions
// only visit the support of the kernel.
struct CompiledRule {
    struct InTap {
        int tile, row, col;
    };
    struct OutTap {
        int tile, row, col, delta;
    };

    int rows = 1;
    int cols = 1;
    int channels = 0;
    std::vector<std::int8_t> kernel_in;
    std::vector<std::int8_t> kernel_out;
    int threshold = 0;
    double reward = 0.0;
    int source = 0; // index of the originating RewriteRule in its ruleset
    Pattern input;
    Pattern output;
    std::vector<InTap> in_taps;
    std::vector<OutTap> out_taps;

    std::int8_t in_at(int tile, int r, int c) const {
        return kernel_in[static_cast<std::size_t>((tile * rows + r) * cols + c)];
    }
    std::int8_t out_at(int tile, int r, int c) const {
        return kernel_out[static_cast<std::size_t>((tile * rows + r) * cols + c)];
    }
};

namespace detail {

inline CompiledRule build_kernels(const Pattern& in, const Pattern& out, int channels, double reward,
                                  int source) {
    CompiledRule cr;
    cr.rows = in.rows();
    cr.cols = in.cols();
    cr.channels = channels;
    cr.reward = reward;
    cr.source = source;
    cr.input = in;
    cr.output = out;
    const auto n = static_cast<std::size_t>(channels * cr.rows * cr.cols);
    cr.kernel_in.assign(n, 0);
    cr.kernel_out.assign(n, 0);
    for (int t = 0; t < channels; ++t) {
        for (int r = 0; r < cr.rows; ++r) {
            for (int c = 0; c < cr.cols; ++c) {
                const int i = (in.at(r, c) & tile_bit(t)) ? 1 : 0;
                const int o = (out.at(r, c) & tile_bit(t)) ? 1 : 0;
                const auto idx = static_cast<std::size_t>((t * cr.rows + r) * cr.cols + c);
                cr.kernel_in[idx] = static_cast<std::int8_t>(i);
                cr.kernel_out[idx] = static_cast<std::int8_t>(o - i);
                cr.threshold += i;
                if (i != 0) {
                    cr.in_taps.push_back({t, r, c});
                }
                if (o != i) {
                    cr.out_taps.push_back({t, r, c, o - i});
                }
            }
        }
    }
    return cr;
}

} // namespace detail

// One CompiledRule per distinct orientation (original, then clockwise quarter
// turns); rotations identical to an earlier one are dropped.
inline std::vector<CompiledRule> compile(const RewriteRule& rule, const TileSet& tiles, int source = 0) {
    validate_rule(rule, tiles);
    std::vector<CompiledRule> out;
    Pattern in = rule.input;
    Pattern op = rule.output;
    const int turns = rule.rotate ? 4 : 1;
    for (int k = 0; k < turns; ++k) {
        const bool dup = std::ranges::any_of(out, [&](const CompiledRule& cr) {
            return cr.input == in && cr.output == op;
        });
        if (!dup) {
            out.push_back(detail::build_kernels(in, op, tiles.count(), rule.reward, source));
        }
        in = in.rotated_cw();
        op = op.rotated_cw();
    }
    return out;
}

class Ruleset {
public:
    Ruleset() = default;

    Ruleset(TileSet tiles, std::vector<RewriteRule> rules) : m_tiles(std::move(tiles)), m_rules(std::move(rules)) {
        for (std::size_t i = 0; i < m_rules.size(); ++i) {
            for (std::size_t j = 0; j < i; ++j) {
                if (m_rules[i].name == m_rules[j].name) {
                    throw ValidationError("duplicate rule name '" + m_rules[i].name + "'");
                }
            }
            auto compiled = compile(m_rules[i], m_tiles, static_cast<int>(i));
            m_compiled.insert(m_compiled.end(), compiled.begin(), compiled.end());
        }
    }

    const TileSet& tiles() const noexcept { return m_tiles; }
    const std::vector<RewriteRule>& rules() const noexcept { return m_rules; }
    const std::vector<CompiledRule>& compiled() const noexcept { return m_compiled; }

    std::size_t mutable_count() const {
        return static_cast<std::size_t>(std::ranges::count_if(m_rules, &RewriteRule::is_mutable));
    }

    friend bool operator==(const Ruleset& a, const Ruleset& b) {
        return a.m_tiles == b.m_tiles && a.m_rules == b.m_rules;
    }

private:
    TileSet m_tiles;
    std::vector<RewriteRule> m_rules;
    std::vector<CompiledRule> m_compiled;
};

namespace detail {

// conv_{K_I}(D) at one anchor, i.e. the number of required entries present.
inline int conv_at(const Board& board, const CompiledRule& cr, int row, int col) {
    const auto values = board.values();
    const std::size_t plane = board.plane_size();
    const int w = board.width();
    int sum = 0;
    for (const auto& tap : cr.in_taps) {
        sum += values[static_cast<std::size_t>(tap.tile) * plane +
                      static_cast<std::size_t>((row + tap.row) * w + col + tap.col)];
    }
    return sum;
}

// ReLU(conv - I + 1); an empty input pattern (I = 0) never activates.
inline int activation_at(const Board& board, const CompiledRule& cr, int row, int col) {
    if (cr.threshold == 0) {
        return 0;
    }
    return std::max(0, conv_at(board, cr, row, col) - cr.threshold + 1);
}

// Same predicate as activation_at(...) > 0, stopping at the first missing entry.
inline bool all_taps_at(std::span<const std::uint8_t> values, std::size_t plane, int w, const CompiledRule& cr,
                        int row, int col) {
    for (const auto& tap : cr.in_taps) {
        if (!values[static_cast<std::size_t>(tap.tile) * plane +
                    static_cast<std::size_t>((row + tap.row) * w + col + tap.col)]) {
            return false;
        }
    }
    return true;
}

} // namespace detail

// Binary H x W activation map; cell (r, c) is 1 when the rule's patch anchored
// at its top-left corner (r, c) matches. Anchors whose patch would leave the
// board are always 0.
inline std::vector<std::uint8_t> match_map(const Board& board, const CompiledRule& cr) {
    if (board.channels() != cr.channels) {
        throw ContractError("board has " + std::to_string(board.channels()) + " channels, kernel has " +
                            std::to_string(cr.channels));
    }
    std::vector<std::uint8_t> act(board.plane_size(), 0);
    for (int r = 0; r + cr.rows <= board.height(); ++r) {
        for (int c = 0; c + cr.cols <= board.width(); ++c) {
            act[static_cast<std::size_t>(r * board.width() + c)] =
                static_cast<std::uint8_t>(detail::activation_at(board, cr, r, c));
        }
    }
    return act;
}

struct TickResult {
    Board next;
    double reward = 0.0;
    std::vector<int> fire_counts; // one per compiled rule
};

// Applies every compiled rule in parallel against the pre-tick board: the
// transposed convolutions of all activation maps are summed into one delta,
// added to the board and clamped to {0, 1}.
inline TickResult step_rules(const Board& board, const Ruleset& rs) {
    const auto& compiled = rs.compiled();
    TickResult res;
    res.fire_counts.assign(compiled.size(), 0);
    const int h = board.height();
    const int w = board.width();
    const std::size_t plane = board.plane_size();
    const auto values = board.values();
    std::vector<std::pair<std::size_t, int>> delta; // (bit index, +-1) per output tap of each firing
    std::vector<std::optional<std::vector<int>>> occupied(static_cast<std::size_t>(board.channels()));

    for (std::size_t k = 0; k < compiled.size(); ++k) {
        const auto& cr = compiled[k];
        if (cr.channels != board.channels()) {
            throw ContractError("ruleset and board disagree on tile count");
        }
        if (cr.threshold == 0) {
            continue;
        }
        // Anchors are visited via the set cells of the first required tile.
        const auto& lead = cr.in_taps.front();
        auto& cells = occupied[static_cast<std::size_t>(lead.tile)];
        if (!cells) {
            cells.emplace();
            const auto p = board.plane(lead.tile);
            for (std::size_t i = 0; i < p.size(); ++i) {
                if (p[i]) {
                    cells->push_back(static_cast<int>(i));
                }
            }
        }
        for (int at : *cells) {
            const int r = at / w - lead.row;
            const int c = at % w - lead.col;
            if (r < 0 || c < 0 || r + cr.rows > h || c + cr.cols > w ||
                !detail::all_taps_at(values, plane, w, cr, r, c)) {
                continue;
            }
            ++res.fire_counts[k];
            for (const auto& tap : cr.out_taps) {
                delta.emplace_back(static_cast<std::size_t>(tap.tile) * plane +
                                       static_cast<std::size_t>((r + tap.row) * w + c + tap.col),
                                   tap.delta);
            }
        }
        res.reward += cr.reward * res.fire_counts[k];
    }

    res.next = board;
    std::ranges::sort(delta);
    auto v = res.next.values();
    for (std::size_t i = 0; i < delta.size();) {
        const std::size_t at = delta[i].first;
        int x = v[at];
        for (; i < delta.size() && delta[i].first == at; ++i) {
            x += delta[i].second;
        }
        v[at] = static_cast<std::uint8_t>(std::clamp(x, 0, 1));
    }
    return res;
}

// The maze base game: movement, blocked-by-wall, food consumption (+1), plus
// `noop_rules` empty mutable slots of noop_rows x noop_cols for evolution.
//
// Walkable cells carry `floor`; the player's own cell carries only `player`,
// and the cell it leaves becomes floor.
inline Ruleset base_maze_ruleset(const TileSet& tiles, int noop_rules = 5, int noop_rows = 3,
                                 int noop_cols = 3) {
    std::vector<RewriteRule> rules;

    RewriteRule move{"move", Pattern(1, 2), Pattern(1, 2), 0.0, true, false};
    move.input.at(0, 0) = tile_bit(kPlayer);
    move.input.at(0, 1) = tile_bit(kForce) | tile_bit(kFloor);
    move.output.at(0, 0) = tile_bit(kFloor);
    move.output.at(0, 1) = tile_bit(kPlayer);
    rules.push_back(move);

    RewriteRule blocked{"blocked", Pattern(1, 1), Pattern(1, 1), 0.0, false, false};
    blocked.input.at(0, 0) = tile_bit(kForce) | tile_bit(kWall);
    blocked.output.at(0, 0) = tile_bit(kWall);
    rules.push_back(blocked);

    RewriteRule eat{"eat", Pattern(1, 2), Pattern(1, 2), 1.0, true, false};
    eat.input.at(0, 0) = tile_bit(kPlayer);
    eat.input.at(0, 1) = tile_bit(kForce) | tile_bit(kFood);
    eat.output.at(0, 0) = tile_bit(kFloor);
    eat.output.at(0, 1) = tile_bit(kPlayer);
    rules.push_back(eat);

    for (int i = 0; i < noop_rules; ++i) {
        rules.push_back(RewriteRule{"noop" + std::to_string(i), Pattern(noop_rows, noop_cols),
                                    Pattern(noop_rows, noop_cols), 0.0, false, true});
    }
    return Ruleset(tiles, std::move(rules));
}

} // namespace autoverse
