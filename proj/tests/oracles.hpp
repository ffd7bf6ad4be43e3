#pragma once

// Test-only reference implementations. These work from RewriteRule patterns
// and cell tile sets directly and never touch the compiled kernels or the
// search frontier, so they can check those independently.

#include "autoverse/autoverse.hpp"

#include <algorithm>
#include <array>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <tuple>
#include <vector>

namespace oracle {

using namespace autoverse;

struct PlainPattern {
    int rows, cols;
    std::vector<TileMask> cells; // row-major

    TileMask at(int r, int c) const { return cells[static_cast<std::size_t>(r * cols + c)]; }
    bool operator==(const PlainPattern&) const = default;
};

inline PlainPattern plain(const Pattern& p) {
    PlainPattern out{p.rows(), p.cols(), {}};
    for (int r = 0; r < p.rows(); ++r) {
        for (int c = 0; c < p.cols(); ++c) {
            out.cells.push_back(p.at(r, c));
        }
    }
    return out;
}

// Clockwise quarter turn: the top row becomes the right column.
inline PlainPattern turn(const PlainPattern& p) {
    PlainPattern out{p.cols, p.rows, std::vector<TileMask>(p.cells.size())};
    for (int r = 0; r < out.rows; ++r) {
        for (int c = 0; c < out.cols; ++c) {
            // out(r, c) = p(rows - 1 - c, r)
            out.cells[static_cast<std::size_t>(r * out.cols + c)] = p.at(p.rows - 1 - c, r);
        }
    }
    return out;
}

struct Variant {
    PlainPattern in, out;
    double reward;
};

inline std::vector<Variant> variants(const RewriteRule& rule) {
    std::vector<Variant> v;
    PlainPattern in = plain(rule.input), out = plain(rule.output);
    for (int k = 0; k < (rule.rotate ? 4 : 1); ++k) {
        bool dup = false;
        for (const auto& e : v) {
            dup = dup || (e.in == in && e.out == out);
        }
        if (!dup) {
            v.push_back({in, out, rule.reward});
        }
        in = turn(in);
        out = turn(out);
    }
    return v;
}

inline bool matches_at(const Board& b, const PlainPattern& in, int r, int c) {
    if (r + in.rows > b.height() || c + in.cols > b.width()) {
        return false;
    }
    bool any = false;
    for (int i = 0; i < in.rows; ++i) {
        for (int j = 0; j < in.cols; ++j) {
            const TileMask need = in.at(i, j);
            any = any || need != 0;
            if ((b.cell(r + i, c + j) & need) != need) {
                return false;
            }
        }
    }
    return any;
}

// Sliding-window matcher: 1 at each anchor where every required tile is present.
inline std::vector<std::uint8_t> naive_match(const Board& b, const PlainPattern& in) {
    std::vector<std::uint8_t> act(static_cast<std::size_t>(b.height() * b.width()), 0);
    for (int r = 0; r < b.height(); ++r) {
        for (int c = 0; c < b.width(); ++c) {
            act[static_cast<std::size_t>(r * b.width() + c)] = matches_at(b, in, r, c) ? 1 : 0;
        }
    }
    return act;
}

struct NaiveTick {
    Board next;
    double reward = 0.0;
};

// Match every variant against the pre-tick board, sum (out - in) per tile,
// clamp to {0, 1}.
inline NaiveTick naive_step(const Board& b, const std::vector<RewriteRule>& rules) {
    const int h = b.height(), w = b.width(), ch = b.channels();
    std::vector<int> delta(static_cast<std::size_t>(h * w * ch), 0);
    double reward = 0.0;
    for (const auto& rule : rules) {
        for (const auto& v : variants(rule)) {
            for (int r = 0; r < h; ++r) {
                for (int c = 0; c < w; ++c) {
                    if (!matches_at(b, v.in, r, c)) {
                        continue;
                    }
                    reward += v.reward;
                    for (int i = 0; i < v.in.rows; ++i) {
                        for (int j = 0; j < v.in.cols; ++j) {
                            for (int t = 0; t < ch; ++t) {
                                const int o = (v.out.at(i, j) >> t) & 1;
                                const int x = (v.in.at(i, j) >> t) & 1;
                                delta[static_cast<std::size_t>(((r + i) * w + (c + j)) * ch + t)] += o - x;
                            }
                        }
                    }
                }
            }
        }
    }
    NaiveTick out{Board(h, w, ch), reward};
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            for (int t = 0; t < ch; ++t) {
                const int x = (b.get(t, r, c) ? 1 : 0) + delta[static_cast<std::size_t>((r * w + c) * ch + t)];
                out.next.set(t, r, c, x > 0);
            }
        }
    }
    return out;
}

// ---- random generators ----

inline Board random_board(Rng& rng, int h, int w, int channels, double density) {
    Board b(h, w, channels);
    for (auto& v : b.values()) {
        v = rng.chance(density) ? 1 : 0;
    }
    return b;
}

inline Pattern random_pattern(Rng& rng, int rows, int cols, int channels, double density) {
    Pattern p(rows, cols);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            for (int t = 0; t < channels; ++t) {
                if (rng.chance(density)) {
                    p.at(r, c) |= tile_bit(t);
                }
            }
        }
    }
    return p;
}

inline RewriteRule random_rule(Rng& rng, int channels, const std::string& name, double density = 0.12) {
    const int rows = 1 + static_cast<int>(rng.below(3));
    const int cols = 1 + static_cast<int>(rng.below(3));
    RewriteRule r;
    r.name = name;
    r.input = random_pattern(rng, rows, cols, channels, density);
    r.output = random_pattern(rng, rows, cols, channels, density);
    r.reward = kRewardAlphabet[rng.below(3)] * static_cast<double>(1 + rng.below(2));
    r.rotate = rng.chance(0.5);
    r.is_mutable = rng.chance(0.7);
    return r;
}

inline std::vector<RewriteRule> random_rules(Rng& rng, int channels, int max_rules) {
    std::vector<RewriteRule> rules;
    const int n = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_rules)));
    for (int i = 0; i < n; ++i) {
        rules.push_back(random_rule(rng, channels, "r" + std::to_string(i)));
    }
    return rules;
}

// Random but valid genome: random map bits with exactly one player, a few
// random rules, sometimes the base rules too.
inline EnvGenome random_genome(Rng& rng, int side = 0, int episode_limit = 0) {
    const int extras = static_cast<int>(rng.below(4));
    const TileSet tiles = TileSet::with_extras(extras);
    const int h = side ? side : 3 + static_cast<int>(rng.below(8));
    const int w = side ? side : 3 + static_cast<int>(rng.below(8));
    Board map = random_board(rng, h, w, tiles.count(), 0.25);
    map.clear_plane(kPlayer);
    map.set(kPlayer, static_cast<int>(rng.below(static_cast<std::uint64_t>(h))),
            static_cast<int>(rng.below(static_cast<std::uint64_t>(w))));
    std::vector<RewriteRule> rules;
    if (rng.chance(0.5)) {
        rules = base_maze_ruleset(tiles, 0).rules();
    }
    const int extra_rules = static_cast<int>(rng.below(5));
    for (int i = 0; i < extra_rules; ++i) {
        rules.push_back(random_rule(rng, tiles.count(), "m" + std::to_string(i), 0.15));
    }
    const int limit = episode_limit ? episode_limit : 1 + static_cast<int>(rng.below(200));
    return EnvGenome(Ruleset(tiles, std::move(rules)), std::move(map), limit);
}

// ---- search oracles ----

// Fewest actions to step onto the food in a base-rules maze: breadth-first
// search over (row, col, facing), where Forward enters a cell holding floor
// or food. nullopt if unreachable.
inline std::optional<int> shortest_food_path(const Board& b) {
    const auto start = b.first_player();
    if (!start) {
        return std::nullopt;
    }
    using Key = std::tuple<int, int, int>;
    std::map<Key, int> dist;
    std::deque<Key> queue;
    dist[{start->row, start->col, 0}] = 0;
    queue.push_back({start->row, start->col, 0});
    static constexpr std::array<std::pair<int, int>, 4> step{{{-1, 0}, {0, 1}, {1, 0}, {0, -1}}};
    while (!queue.empty()) {
        const auto [r, c, o] = queue.front();
        queue.pop_front();
        const int d = dist[{r, c, o}];
        std::vector<Key> next{{r, c, (o + 3) % 4}, {r, c, (o + 1) % 4}};
        const int nr = r + step[static_cast<std::size_t>(o)].first;
        const int nc = c + step[static_cast<std::size_t>(o)].second;
        if (b.in_bounds(nr, nc)) {
            if (b.get(kFood, nr, nc)) {
                return d + 1;
            }
            if (b.get(kFloor, nr, nc)) {
                next.push_back({nr, nc, o});
            }
        }
        for (const auto& k : next) {
            if (!dist.contains(k)) {
                dist[k] = d + 1;
                queue.push_back(k);
            }
        }
    }
    return std::nullopt;
}

// Best total reward over every action prefix of length <= depth (stopping at
// episode end), by full enumeration.
inline double exhaustive_best_reward(const EnvGenome& g, int depth) {
    std::function<double(const GameState&, int)> go = [&](const GameState& s, int left) {
        double best = s.total_reward;
        if (left == 0 || s.done) {
            return best;
        }
        for (Action a : kAllActions) {
            best = std::max(best, go(step(s, a, g).state, left - 1));
        }
        return best;
    };
    return go(reset(g), depth);
}

} // namespace oracle
