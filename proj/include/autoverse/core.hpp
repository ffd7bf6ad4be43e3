#pragma once

#include "autoverse/digest.hpp"
#include "autoverse/error.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace autoverse {

// Reserved tile indices. Every tileset starts with these five, in this order.
inline constexpr int kPlayer = 0;
inline constexpr int kForce = 1;
inline constexpr int kWall = 2;
inline constexpr int kFloor = 3;
inline constexpr int kFood = 4;
inline constexpr int kReservedTiles = 5;

// Cell contents are tile bitmasks, which bounds the tileset size.
inline constexpr int kMaxTiles = 64;

using TileMask = std::uint64_t;

inline constexpr TileMask tile_bit(int tile) { return TileMask{1} << tile; }

inline bool is_identifier(std::string_view s) {
    if (s.empty() || s[0] < 'a' || s[0] > 'z') {
        return false;
    }
    return std::all_of(s.begin(), s.end(), [](char ch) {
        return (ch >= 'a' && ch <= 'z') || (ch >= '0' && ch <= '9') || ch == '_';
    });
}

class TileSet {
public:
    TileSet() : TileSet(std::vector<std::string>{"player", "force", "wall", "floor", "food"}) {}

    explicit TileSet(std::vector<std::string> names) : m_names(std::move(names)) {
        static constexpr std::array<std::string_view, kReservedTiles> reserved{
            "player", "force", "wall", "floor", "food"};
        if (m_names.size() < reserved.size()) {
            throw ValidationError("tileset needs at least the five reserved tiles");
        }
        if (m_names.size() > static_cast<std::size_t>(kMaxTiles)) {
            throw ValidationError("tileset has more than " + std::to_string(kMaxTiles) + " tiles");
        }
        for (std::size_t i = 0; i < reserved.size(); ++i) {
            if (m_names[i] != reserved[i]) {
                throw ValidationError("tile " + std::to_string(i) + " must be '" +
                                      std::string(reserved[i]) + "', got '" + m_names[i] + "'");
            }
        }
        std::unordered_set<std::string_view> seen;
        for (const auto& n : m_names) {
            if (!is_identifier(n)) {
                throw ValidationError("invalid tile name '" + n + "'");
            }
            if (!seen.insert(n).second) {
                throw ValidationError("duplicate tile name '" + n + "'");
            }
        }
    }

    // The five reserved tiles plus `extra` no-op tiles named extra0, extra1, ...
    static TileSet with_extras(int extra) {
        std::vector<std::string> names{"player", "force", "wall", "floor", "food"};
        for (int i = 0; i < extra; ++i) {
            names.push_back("extra" + std::to_string(i));
        }
        return TileSet(std::move(names));
    }

    int count() const noexcept { return static_cast<int>(m_names.size()); }
    const std::vector<std::string>& names() const noexcept { return m_names; }
    const std::string& name(int i) const { return m_names.at(static_cast<std::size_t>(i)); }

    std::optional<int> index_of(std::string_view name) const {
        auto it = std::find(m_names.begin(), m_names.end(), name);
        if (it == m_names.end()) {
            return std::nullopt;
        }
        return static_cast<int>(it - m_names.begin());
    }

    friend bool operator==(const TileSet&, const TileSet&) = default;

private:
    std::vector<std::string> m_names;
};

struct Cell {
    int row = 0;
    int col = 0;

    friend auto operator<=>(const Cell&, const Cell&) = default;
};

// H x W x C binary occupancy grid, stored channel-major ([tile][row][col]) so
// each tile is a contiguous plane for the convolution passes.
class Board {
public:
    Board() = default;

    Board(int height, int width, int channels)
        : m_height(height), m_width(width), m_channels(channels) {
        if (height < 3 || width < 3) {
            throw ValidationError("board must be at least 3x3");
        }
        if (channels < kReservedTiles || channels > kMaxTiles) {
            throw ValidationError("board channel count out of range");
        }
        m_bits.assign(static_cast<std::size_t>(height) * width * channels, 0);
    }

    int height() const noexcept { return m_height; }
    int width() const noexcept { return m_width; }
    int channels() const noexcept { return m_channels; }
    std::size_t plane_size() const noexcept { return static_cast<std::size_t>(m_height) * m_width; }

    bool in_bounds(int row, int col) const noexcept {
        return row >= 0 && row < m_height && col >= 0 && col < m_width;
    }

    bool get(int tile, int row, int col) const { return m_bits[index(tile, row, col)] != 0; }
    void set(int tile, int row, int col, bool on = true) { m_bits[index(tile, row, col)] = on ? 1 : 0; }
    void flip(int tile, int row, int col) { m_bits[index(tile, row, col)] ^= 1; }

    TileMask cell(int row, int col) const {
        TileMask m = 0;
        for (int t = 0; t < m_channels; ++t) {
            if (get(t, row, col)) {
                m |= tile_bit(t);
            }
        }
        return m;
    }

    void set_cell(int row, int col, TileMask mask) {
        for (int t = 0; t < m_channels; ++t) {
            set(t, row, col, (mask & tile_bit(t)) != 0);
        }
    }

    std::span<const std::uint8_t> plane(int tile) const {
        return std::span(m_bits).subspan(static_cast<std::size_t>(tile) * plane_size(), plane_size());
    }
    std::span<std::uint8_t> plane(int tile) {
        return std::span(m_bits).subspan(static_cast<std::size_t>(tile) * plane_size(), plane_size());
    }

    void clear_plane(int tile) { std::ranges::fill(plane(tile), std::uint8_t{0}); }

    // Raw channel-major values, one byte (0 or 1) per bit.
    std::span<const std::uint8_t> values() const noexcept { return m_bits; }
    std::span<std::uint8_t> values() noexcept { return m_bits; }

    std::size_t popcount() const { return static_cast<std::size_t>(std::ranges::count(m_bits, 1)); }

    // First active player cell in row-major order.
    std::optional<Cell> first_player() const {
        const auto p = plane(kPlayer);
        auto it = std::ranges::find(p, std::uint8_t{1});
        if (it == p.end()) {
            return std::nullopt;
        }
        const auto off = static_cast<int>(it - p.begin());
        return Cell{off / m_width, off % m_width};
    }

    // Bit-packed, channel-major, LSB-first within each byte.
    std::vector<std::uint8_t> pack() const {
        std::vector<std::uint8_t> out((m_bits.size() + 7) / 8, 0);
        std::size_t whole = 0;
        if constexpr (std::endian::native == std::endian::little) {
            whole = m_bits.size() / 8;
            for (std::size_t j = 0; j < whole; ++j) {
                std::uint64_t x;
                std::memcpy(&x, m_bits.data() + 8 * j, 8);
                out[j] = static_cast<std::uint8_t>((x * 0x0102040810204080ULL) >> 56);
            }
        }
        for (std::size_t i = 8 * whole; i < m_bits.size(); ++i) {
            out[i / 8] |= static_cast<std::uint8_t>(m_bits[i] << (i % 8));
        }
        return out;
    }

    static Board unpack(int height, int width, int channels, std::span<const std::uint8_t> packed) {
        Board b(height, width, channels);
        if (packed.size() != (b.m_bits.size() + 7) / 8) {
            throw ValidationError("packed board has wrong length");
        }
        std::size_t whole = 0;
        if constexpr (std::endian::native == std::endian::little) {
            whole = b.m_bits.size() / 8;
            for (std::size_t j = 0; j < whole; ++j) {
                std::uint64_t x = (packed[j] * 0x0101010101010101ULL) & 0x8040201008040201ULL;
                x = ((x + 0x7F7F7F7F7F7F7F7FULL) >> 7) & 0x0101010101010101ULL;
                std::memcpy(b.m_bits.data() + 8 * j, &x, 8);
            }
        }
        for (std::size_t i = 8 * whole; i < b.m_bits.size(); ++i) {
            b.m_bits[i] = (packed[i / 8] >> (i % 8)) & 1;
        }
        return b;
    }

    friend bool operator==(const Board&, const Board&) = default;

private:
    std::size_t index(int tile, int row, int col) const noexcept {
        return (static_cast<std::size_t>(tile) * m_height + row) * m_width + col;
    }

    int m_height = 0;
    int m_width = 0;
    int m_channels = 0;
    std::vector<std::uint8_t> m_bits;
};

inline constexpr int kMaxPatternSide = 3;

// n x m patch of required tile sets.
class Pattern {
public:
    Pattern() : Pattern(1, 1) {}

    Pattern(int rows, int cols) : m_rows(rows), m_cols(cols) {
        if (rows < 1 || rows > kMaxPatternSide || cols < 1 || cols > kMaxPatternSide) {
            throw ValidationError("pattern size " + std::to_string(rows) + "x" + std::to_string(cols) +
                                  " out of range 1..3");
        }
        m_cells.assign(static_cast<std::size_t>(rows * cols), 0);
    }

    int rows() const noexcept { return m_rows; }
    int cols() const noexcept { return m_cols; }

    TileMask at(int r, int c) const { return m_cells[static_cast<std::size_t>(r * m_cols + c)]; }
    TileMask& at(int r, int c) { return m_cells[static_cast<std::size_t>(r * m_cols + c)]; }

    std::span<const TileMask> cells() const noexcept { return m_cells; }

    // Number of required (cell, tile) entries.
    int required_count() const {
        int n = 0;
        for (auto m : m_cells) {
            n += std::popcount(m);
        }
        return n;
    }

    bool empty() const { return required_count() == 0; }

    // Highest tile index referenced, or -1 for an empty pattern.
    int max_tile() const {
        TileMask all = 0;
        for (auto m : m_cells) {
            all |= m;
        }
        return all == 0 ? -1 : 63 - std::countl_zero(all);
    }

    // Quarter turn clockwise: an n x m pattern becomes m x n.
    Pattern rotated_cw() const {
        Pattern out(m_cols, m_rows);
        for (int r = 0; r < m_rows; ++r) {
            for (int c = 0; c < m_cols; ++c) {
                out.at(c, m_rows - 1 - r) = at(r, c);
            }
        }
        return out;
    }

    friend bool operator==(const Pattern&, const Pattern&) = default;

private:
    int m_rows;
    int m_cols;
    std::vector<TileMask> m_cells;
};

enum class Orientation : std::uint8_t { North = 0, East = 1, South = 2, West = 3 };

inline constexpr Orientation rotate_left(Orientation o) {
    return static_cast<Orientation>((static_cast<int>(o) + 3) % 4);
}

inline constexpr Orientation rotate_right(Orientation o) {
    return static_cast<Orientation>((static_cast<int>(o) + 1) % 4);
}

// (row, col) step for moving one cell in direction `o`.
inline constexpr Cell facing_offset(Orientation o) {
    switch (o) {
    case Orientation::North: return {-1, 0};
    case Orientation::East: return {0, 1};
    case Orientation::South: return {1, 0};
    case Orientation::West: return {0, -1};
    }
    return {0, 0};
}

// Integer codes 0/1/2 are the on-disk encoding in action traces and datasets.
enum class Action : std::uint8_t { RotateLeft = 0, RotateRight = 1, Forward = 2 };

inline constexpr std::array<Action, 3> kAllActions{Action::RotateLeft, Action::RotateRight, Action::Forward};

inline Action action_from_code(int code) {
    if (code < 0 || code > 2) {
        throw ValidationError("action code " + std::to_string(code) + " not in {0,1,2}");
    }
    return static_cast<Action>(code);
}

inline constexpr int action_code(Action a) { return static_cast<int>(a); }

struct GameState {
    Board board;
    std::optional<Cell> player_pos;
    Orientation orientation = Orientation::North;
    double total_reward = 0.0;
    int tick = 0;
    bool done = false;

    friend bool operator==(const GameState&, const GameState&) = default;
};

// 128-bit digest of (board, player position, orientation).
struct StateKey {
    std::array<std::uint8_t, 16> bytes{};

    friend bool operator==(const StateKey&, const StateKey&) = default;
    friend auto operator<=>(const StateKey&, const StateKey&) = default;

    std::string hex() const { return to_hex(bytes); }
};

// Total reward and tick are deliberately excluded: states that differ only in
// those are the same search node.
inline StateKey state_key(const GameState& s) {
    std::vector<std::uint8_t> buf = s.board.pack();
    auto put32 = [&buf](std::int32_t v) {
        for (int i = 0; i < 4; ++i) {
            buf.push_back(static_cast<std::uint8_t>(static_cast<std::uint32_t>(v) >> (8 * i)));
        }
    };
    put32(s.board.height());
    put32(s.board.width());
    put32(s.board.channels());
    put32(s.player_pos ? s.player_pos->row : -1);
    put32(s.player_pos ? s.player_pos->col : -1);
    buf.push_back(static_cast<std::uint8_t>(s.orientation));
    const Sha256 full = sha256(buf);
    StateKey k;
    std::memcpy(k.bytes.data(), full.data(), k.bytes.size());
    return k;
}

} // namespace autoverse

template <>
struct std::hash<autoverse::StateKey> {
    std::size_t operator()(const autoverse::StateKey& k) const noexcept {
        std::size_t h;
        std::memcpy(&h, k.bytes.data(), sizeof h);
        return h;
    }
};
