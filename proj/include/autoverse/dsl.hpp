#pragma once

#include "autoverse/core.hpp"
#include "autoverse/rule_engine.hpp"

#include <charconv>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace autoverse {

inline constexpr int kDefaultEpisodeLimit = 102;
inline constexpr int kMaxMapSide = 256;

class EnvGenome;
inline std::string serialize_genome(const EnvGenome& g);

// A complete environment: tileset, initial map, ruleset and episode length.
// Immutable once built; the id is a digest of the canonical text form.
class EnvGenome {
public:
    EnvGenome(Ruleset rules, Board init_map, int episode_limit = kDefaultEpisodeLimit)
        : m_rules(std::move(rules)), m_map(std::move(init_map)), m_episode_limit(episode_limit) {
        if (m_map.channels() != m_rules.tiles().count()) {
            throw ValidationError("map has " + std::to_string(m_map.channels()) + " channels but tileset has " +
                                  std::to_string(m_rules.tiles().count()) + " tiles");
        }
        const auto players = std::ranges::count(m_map.plane(kPlayer), std::uint8_t{1});
        if (players != 1) {
            throw ValidationError("map must contain exactly one player, found " + std::to_string(players));
        }
        if (episode_limit < 1) {
            throw ValidationError("episode_limit must be >= 1");
        }
        m_text = serialize_genome(*this);
        const Sha256 digest = sha256(m_text);
        m_id = to_hex(std::span(digest).first(16));
    }

    const TileSet& tiles() const noexcept { return m_rules.tiles(); }
    const Board& init_map() const noexcept { return m_map; }
    const Ruleset& rules() const noexcept { return m_rules; }
    int episode_limit() const noexcept { return m_episode_limit; }

    // 32 hex characters; equal ids iff equal canonical text.
    const std::string& id() const noexcept { return m_id; }
    const std::string& canonical_text() const noexcept { return m_text; }

    friend bool operator==(const EnvGenome& a, const EnvGenome& b) {
        return a.m_episode_limit == b.m_episode_limit && a.m_rules == b.m_rules && a.m_map == b.m_map;
    }

private:
    Ruleset m_rules;
    Board m_map;
    int m_episode_limit;
    std::string m_text;
    std::string m_id;
};

namespace detail {

inline std::string format_cell(TileMask mask, const TileSet& tiles) {
    if (mask == 0) {
        return ".";
    }
    std::string s;
    for (int t = 0; t < tiles.count(); ++t) {
        if (mask & tile_bit(t)) {
            if (!s.empty()) {
                s += '+';
            }
            s += tiles.name(t);
        }
    }
    return s;
}

inline std::string format_reward(double r) {
    if (r == 0.0) {
        return "0";
    }
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, r);
    return std::string(buf, end);
}

inline void write_pattern_rows(std::string& out, const Pattern& p, const TileSet& tiles) {
    for (int r = 0; r < p.rows(); ++r) {
        for (int c = 0; c < p.cols(); ++c) {
            if (c) {
                out += ' ';
            }
            out += format_cell(p.at(r, c), tiles);
        }
        out += '\n';
    }
}

} // namespace detail

// Canonical text: single spaces, '\n' endings, tiles within a cell in index
// order, rules in stored order, episode_limit always written last.
inline std::string serialize_genome(const EnvGenome& g) {
    const TileSet& tiles = g.tiles();
    const Board& map = g.init_map();
    std::string out = "autoverse 1\ntiles";
    for (const auto& n : tiles.names()) {
        out += ' ';
        out += n;
    }
    out += "\nmap " + std::to_string(map.height()) + ' ' + std::to_string(map.width()) + '\n';
    for (int r = 0; r < map.height(); ++r) {
        for (int c = 0; c < map.width(); ++c) {
            if (c) {
                out += ' ';
            }
            out += detail::format_cell(map.cell(r, c), tiles);
        }
        out += '\n';
    }
    for (const auto& rule : g.rules().rules()) {
        out += "rule " + rule.name + " reward " + detail::format_reward(rule.reward);
        if (rule.rotate) {
            out += " rotate";
        }
        if (!rule.is_mutable) {
            out += " immutable";
        }
        out += "\nin " + std::to_string(rule.input.rows()) + ' ' + std::to_string(rule.input.cols()) + '\n';
        detail::write_pattern_rows(out, rule.input, tiles);
        out += "out\n";
        detail::write_pattern_rows(out, rule.output, tiles);
        out += "end\n";
    }
    out += "episode_limit " + std::to_string(g.episode_limit()) + '\n';
    return out;
}

inline std::string serialize(const EnvGenome& g) { return g.canonical_text(); }

namespace detail {

struct SourceLine {
    int number;
    std::vector<std::string_view> tokens;
};

class LineReader {
public:
    explicit LineReader(std::string_view text) {
        int number = 0;
        std::size_t pos = 0;
        while (pos <= text.size()) {
            std::size_t nl = text.find('\n', pos);
            if (nl == std::string_view::npos) {
                nl = text.size();
            }
            ++number;
            std::string_view line = text.substr(pos, nl - pos);
            if (auto hash = line.find('#'); hash != std::string_view::npos) {
                line = line.substr(0, hash);
            }
            std::vector<std::string_view> tokens;
            std::size_t i = 0;
            while (i < line.size()) {
                while (i < line.size() && is_space(line[i])) {
                    ++i;
                }
                std::size_t j = i;
                while (j < line.size() && !is_space(line[j])) {
                    ++j;
                }
                if (j > i) {
                    tokens.push_back(line.substr(i, j - i));
                }
                i = j;
            }
            if (!tokens.empty()) {
                m_lines.push_back({number, std::move(tokens)});
            }
            m_last_line = number;
            pos = nl + 1;
        }
    }

    bool done() const { return m_next >= m_lines.size(); }

    const SourceLine& peek() const { return m_lines[m_next]; }

    const SourceLine& next(std::string_view expecting) {
        if (done()) {
            throw ValidationError(m_last_line, "unexpected end of input, expected " + std::string(expecting));
        }
        return m_lines[m_next++];
    }

    int last_line() const { return m_last_line; }

private:
    static bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\v' || c == '\f'; }

    std::vector<SourceLine> m_lines;
    std::size_t m_next = 0;
    int m_last_line = 0;
};

inline int parse_int(std::string_view tok, int line, std::string_view what) {
    int v = 0;
    auto [end, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || end != tok.data() + tok.size()) {
        throw ValidationError(line, "expected integer " + std::string(what) + ", got '" + std::string(tok) + "'");
    }
    return v;
}

inline double parse_reward(std::string_view tok, int line) {
    double v = 0.0;
    auto [end, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || end != tok.data() + tok.size() || !std::isfinite(v)) {
        throw ValidationError(line, "malformed reward '" + std::string(tok) + "'");
    }
    return v == 0.0 ? 0.0 : v;
}

inline TileMask parse_cell(std::string_view tok, const TileSet& tiles, int line) {
    if (tok == ".") {
        return 0;
    }
    TileMask mask = 0;
    std::size_t pos = 0;
    while (true) {
        const std::size_t plus = tok.find('+', pos);
        const std::string_view name = tok.substr(pos, plus == std::string_view::npos ? tok.npos : plus - pos);
        const auto idx = tiles.index_of(name);
        if (!idx) {
            throw ValidationError(line, "unknown tile '" + std::string(name) + "'");
        }
        if (mask & tile_bit(*idx)) {
            throw ValidationError(line, "tile '" + std::string(name) + "' repeated in cell");
        }
        mask |= tile_bit(*idx);
        if (plus == std::string_view::npos) {
            break;
        }
        pos = plus + 1;
    }
    return mask;
}

inline Pattern parse_pattern_rows(LineReader& in, int rows, int cols, const TileSet& tiles, std::string_view rule) {
    Pattern p(rows, cols);
    for (int r = 0; r < rows; ++r) {
        const auto& line = in.next("pattern row");
        if (static_cast<int>(line.tokens.size()) != cols) {
            throw ValidationError(line.number, "shape mismatch in rule '" + std::string(rule) + "': expected " +
                                                   std::to_string(cols) + " cells, got " +
                                                   std::to_string(line.tokens.size()));
        }
        for (int c = 0; c < cols; ++c) {
            p.at(r, c) = parse_cell(line.tokens[static_cast<std::size_t>(c)], tiles, line.number);
        }
    }
    return p;
}

inline RewriteRule parse_rule(LineReader& in, const SourceLine& head, const TileSet& tiles) {
    const auto& t = head.tokens;
    if (t.size() < 4 || t[2] != "reward") {
        throw ValidationError(head.number, "expected 'rule <name> reward <decimal> [rotate] [immutable]'");
    }
    RewriteRule rule;
    rule.name = std::string(t[1]);
    if (!is_identifier(rule.name)) {
        throw ValidationError(head.number, "invalid rule name '" + rule.name + "'");
    }
    rule.reward = parse_reward(t[3], head.number);
    for (std::size_t i = 4; i < t.size(); ++i) {
        if (t[i] == "rotate" && !rule.rotate) {
            rule.rotate = true;
        } else if (t[i] == "immutable" && rule.is_mutable) {
            rule.is_mutable = false;
        } else {
            throw ValidationError(head.number, "unexpected rule flag '" + std::string(t[i]) + "'");
        }
    }

    const auto& in_line = in.next("'in <n> <m>'");
    if (in_line.tokens.size() != 3 || in_line.tokens[0] != "in") {
        throw ValidationError(in_line.number, "expected 'in <n> <m>'");
    }
    const int rows = parse_int(in_line.tokens[1], in_line.number, "pattern rows");
    const int cols = parse_int(in_line.tokens[2], in_line.number, "pattern cols");
    if (rows < 1 || rows > kMaxPatternSide || cols < 1 || cols > kMaxPatternSide) {
        throw ValidationError(in_line.number, "pattern size " + std::to_string(rows) + "x" + std::to_string(cols) +
                                                  " out of range 1..3");
    }
    rule.input = parse_pattern_rows(in, rows, cols, tiles, rule.name);

    const auto& out_line = in.next("'out'");
    if (out_line.tokens.size() != 1 || out_line.tokens[0] != "out") {
        throw ValidationError(out_line.number, "shape mismatch in rule '" + rule.name + "': expected 'out' after " +
                                                   std::to_string(rows) + " input rows");
    }
    rule.output = parse_pattern_rows(in, rows, cols, tiles, rule.name);

    const auto& end_line = in.next("'end'");
    if (end_line.tokens.size() != 1 || end_line.tokens[0] != "end") {
        throw ValidationError(end_line.number, "shape mismatch in rule '" + rule.name + "': expected 'end' after " +
                                                   std::to_string(rows) + " output rows");
    }
    return rule;
}

} // namespace detail

// Parses the `.av` text format. Every failure is a ValidationError carrying
// the offending line number.
inline EnvGenome parse(std::string_view text) {
    detail::LineReader in(text);

    const auto& header = in.next("'autoverse 1' header");
    if (header.tokens.size() != 2 || header.tokens[0] != "autoverse" || header.tokens[1] != "1") {
        throw ValidationError(header.number, "malformed header, expected 'autoverse 1'");
    }

    const auto& tiles_line = in.next("'tiles' line");
    if (tiles_line.tokens.empty() || tiles_line.tokens[0] != "tiles") {
        throw ValidationError(tiles_line.number, "malformed header, expected 'tiles <name> ...'");
    }
    std::optional<TileSet> tiles;
    try {
        tiles.emplace(std::vector<std::string>(tiles_line.tokens.begin() + 1, tiles_line.tokens.end()));
    } catch (const ValidationError& e) {
        throw ValidationError(tiles_line.number, e.what());
    }

    const auto& map_line = in.next("'map <H> <W>'");
    if (map_line.tokens.size() != 3 || map_line.tokens[0] != "map") {
        throw ValidationError(map_line.number, "malformed header, expected 'map <H> <W>'");
    }
    const int h = detail::parse_int(map_line.tokens[1], map_line.number, "map height");
    const int w = detail::parse_int(map_line.tokens[2], map_line.number, "map width");
    if (h < 3 || w < 3 || h > kMaxMapSide || w > kMaxMapSide) {
        throw ValidationError(map_line.number, "map size must be within 3.." + std::to_string(kMaxMapSide));
    }
    Board board(h, w, tiles->count());
    int players = 0;
    for (int r = 0; r < h; ++r) {
        const auto& row = in.next("map row");
        if (static_cast<int>(row.tokens.size()) != w) {
            throw ValidationError(row.number, "map row has " + std::to_string(row.tokens.size()) + " cells, expected " +
                                                  std::to_string(w));
        }
        for (int c = 0; c < w; ++c) {
            const TileMask m = detail::parse_cell(row.tokens[static_cast<std::size_t>(c)], *tiles, row.number);
            if (m & tile_bit(kPlayer)) {
                if (++players > 1) {
                    throw ValidationError(row.number, "duplicate player tile");
                }
            }
            board.set_cell(r, c, m);
        }
    }
    if (players == 0) {
        throw ValidationError(map_line.number, "map has no player tile");
    }

    std::vector<RewriteRule> rules;
    std::optional<int> episode_limit;
    while (!in.done()) {
        const auto& line = in.next("rule or episode_limit");
        if (line.tokens[0] == "rule") {
            RewriteRule rule = detail::parse_rule(in, line, *tiles);
            for (const auto& other : rules) {
                if (other.name == rule.name) {
                    throw ValidationError(line.number, "duplicate rule name '" + rule.name + "'");
                }
            }
            rules.push_back(std::move(rule));
        } else if (line.tokens[0] == "episode_limit") {
            if (episode_limit || line.tokens.size() != 2) {
                throw ValidationError(line.number, "malformed or repeated episode_limit");
            }
            episode_limit = detail::parse_int(line.tokens[1], line.number, "episode_limit");
            if (*episode_limit < 1) {
                throw ValidationError(line.number, "episode_limit must be >= 1");
            }
        } else {
            throw ValidationError(line.number, "unexpected '" + std::string(line.tokens[0]) + "'");
        }
    }

    try {
        return EnvGenome(Ruleset(*tiles, std::move(rules)), std::move(board),
                         episode_limit.value_or(kDefaultEpisodeLimit));
    } catch (const ValidationError& e) {
        if (e.line() != 0) {
            throw;
        }
        throw ValidationError(in.last_line(), e.what());
    }
}

} // namespace autoverse
