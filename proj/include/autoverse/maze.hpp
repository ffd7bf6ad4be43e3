#pragma once

#include "autoverse/dsl.hpp"
#include "autoverse/random.hpp"
#include "autoverse/rule_engine.hpp"

#include <vector>

namespace autoverse {

inline constexpr int kDefaultBoardSide = 16;
inline constexpr int kDefaultExtraTiles = 5;
inline constexpr int kDefaultNoopRules = 5;

// Walled room with a floor interior; the player and food cells hold only
// their own tile.
inline Board open_room(const TileSet& tiles, int height, int width, Cell player, Cell food) {
    Board b(height, width, tiles.count());
    for (int r = 0; r < height; ++r) {
        for (int c = 0; c < width; ++c) {
            const bool border = r == 0 || c == 0 || r == height - 1 || c == width - 1;
            b.set(border ? kWall : kFloor, r, c);
        }
    }
    b.set_cell(player.row, player.col, tile_bit(kPlayer));
    b.set_cell(food.row, food.col, tile_bit(kFood));
    return b;
}

// Perfect (loop-free) maze carved by randomized depth-first search over the
// odd-coordinate cells, with player and food on two distinct open cells.
inline Board random_maze(const TileSet& tiles, int height, int width, Rng& rng) {
    Board b(height, width, tiles.count());
    for (int r = 0; r < height; ++r) {
        for (int c = 0; c < width; ++c) {
            b.set(kWall, r, c);
        }
    }
    auto open = [&](int r, int c) {
        b.set(kWall, r, c, false);
        b.set(kFloor, r, c);
    };
    std::vector<Cell> stack{{1, 1}};
    open(1, 1);
    while (!stack.empty()) {
        const Cell cur = stack.back();
        std::vector<Cell> next;
        for (Orientation o : {Orientation::North, Orientation::East, Orientation::South, Orientation::West}) {
            const Cell d = facing_offset(o);
            const int r = cur.row + 2 * d.row;
            const int c = cur.col + 2 * d.col;
            if (r >= 1 && r < height - 1 && c >= 1 && c < width - 1 && b.get(kWall, r, c)) {
                next.push_back({r, c});
            }
        }
        if (next.empty()) {
            stack.pop_back();
            continue;
        }
        const Cell to = next[rng.below(next.size())];
        open((cur.row + to.row) / 2, (cur.col + to.col) / 2);
        open(to.row, to.col);
        stack.push_back(to);
    }

    std::vector<Cell> floor_cells;
    for (int r = 0; r < height; ++r) {
        for (int c = 0; c < width; ++c) {
            if (b.get(kFloor, r, c)) {
                floor_cells.push_back({r, c});
            }
        }
    }
    const std::size_t pi = rng.below(floor_cells.size());
    std::size_t fi = rng.below(floor_cells.size() - 1);
    if (fi >= pi) {
        ++fi;
    }
    b.set_cell(floor_cells[pi].row, floor_cells[pi].col, tile_bit(kPlayer));
    b.set_cell(floor_cells[fi].row, floor_cells[fi].col, tile_bit(kFood));
    return b;
}

// Base maze rules with no-op slots on a random 16x16 maze over 10 tiles.
inline EnvGenome base_maze_genome(std::uint64_t seed, int side = kDefaultBoardSide) {
    const TileSet tiles = TileSet::with_extras(kDefaultExtraTiles);
    Rng rng(seed);
    return EnvGenome(base_maze_ruleset(tiles, kDefaultNoopRules), random_maze(tiles, side, side, rng));
}

} // namespace autoverse
