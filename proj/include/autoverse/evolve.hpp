#pragma once

#include "autoverse/dsl.hpp"
#include "autoverse/parallel.hpp"
#include "autoverse/random.hpp"
#include "autoverse/search.hpp"
#include "autoverse/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace autoverse {

struct EvoConfig {
    int mu = 10;
    int lambda = 40;
    int generations = 50;
    std::int64_t initial_budget = 512;
    double budget_growth = 2.0;
    double budget_threshold = 0.9; // grow once any fitness reaches this fraction of the budget
    double p_map = 0.005;          // per map bit
    double p_rule = 0.02;          // per (pattern cell, tile) of each mutable rule
    double p_reward = 0.1;         // per mutable rule
    bool freeze_rules = false;     // map-only evolution
    std::uint64_t seed = 0;
    unsigned workers = default_workers();

    void validate() const {
        if (mu < 1 || lambda < 1) {
            throw ValidationError("mu and lambda must be >= 1");
        }
        if (generations < 0) {
            throw ValidationError("generations must be >= 0");
        }
        if (initial_budget < 1) {
            throw ValidationError("initial budget must be >= 1");
        }
        if (!(budget_growth > 1.0)) {
            throw ValidationError("budget growth factor must be > 1");
        }
        if (!(budget_threshold > 0.0 && budget_threshold < 1.0)) {
            throw ValidationError("budget threshold must lie in (0, 1)");
        }
        for (double p : {p_map, p_rule, p_reward}) {
            if (!(p >= 0.0 && p <= 1.0)) {
                throw ValidationError("mutation rates must lie in [0, 1]");
            }
        }
    }
};

inline constexpr std::array<double, 3> kRewardAlphabet{-1.0, 0.0, 1.0};

namespace detail {

// Flips each bit independently with probability p; returns the flip count.
inline std::size_t flip_map_bits(Board& map, double p, Rng& rng) {
    std::size_t flips = 0;
    if (p <= 0.0) {
        return flips;
    }
    for (auto& bit : map.values()) {
        if (rng.chance(p)) {
            bit ^= 1;
            ++flips;
        }
    }
    return flips;
}

// Leaves exactly one player: extras are cleared around one uniformly chosen
// survivor, and a missing player is placed on a uniformly chosen floor cell
// (any cell if there is no floor).
inline void repair_single_player(Board& map, Rng& rng) {
    std::vector<Cell> players;
    std::vector<Cell> floor;
    for (int r = 0; r < map.height(); ++r) {
        for (int c = 0; c < map.width(); ++c) {
            if (map.get(kPlayer, r, c)) {
                players.push_back({r, c});
            }
            if (map.get(kFloor, r, c)) {
                floor.push_back({r, c});
            }
        }
    }
    if (players.size() > 1) {
        const std::size_t keep = rng.below(players.size());
        for (std::size_t i = 0; i < players.size(); ++i) {
            if (i != keep) {
                map.set(kPlayer, players[i].row, players[i].col, false);
            }
        }
    } else if (players.empty()) {
        if (floor.empty()) {
            map.set(kPlayer, static_cast<int>(rng.below(static_cast<std::uint64_t>(map.height()))),
                    static_cast<int>(rng.below(static_cast<std::uint64_t>(map.width()))));
        } else {
            const Cell at = floor[rng.below(floor.size())];
            map.set(kPlayer, at.row, at.col);
        }
    }
}

} // namespace detail

// Map bit flips, then per-tile toggles of mutable rule patterns, then reward
// resampling. Immutable rules are never touched.
inline EnvGenome mutate(const EnvGenome& g, const EvoConfig& cfg, Rng& rng) {
    Board map = g.init_map();
    detail::flip_map_bits(map, cfg.p_map, rng);
    detail::repair_single_player(map, rng);

    std::vector<RewriteRule> rules = g.rules().rules();
    if (!cfg.freeze_rules) {
        const int c = g.tiles().count();
        auto toggle = [&](Pattern& p) {
            for (int r = 0; r < p.rows(); ++r) {
                for (int col = 0; col < p.cols(); ++col) {
                    for (int t = 0; t < c; ++t) {
                        if (rng.chance(cfg.p_rule)) {
                            p.at(r, col) ^= tile_bit(t);
                        }
                    }
                }
            }
        };
        for (auto& rule : rules) {
            if (!rule.is_mutable) {
                continue;
            }
            toggle(rule.input);
            toggle(rule.output);
            if (rng.chance(cfg.p_reward)) {
                rule.reward = kRewardAlphabet[rng.below(kRewardAlphabet.size())];
            }
        }
    }
    return EnvGenome(Ruleset(g.tiles(), std::move(rules)), std::move(map), g.episode_limit());
}

struct Evaluation {
    std::int64_t fitness = 0;
    TrajectoryRecord record;
};

// Pluggable environment fitness. Search effort is the only one shipped.
using FitnessFn = std::function<Evaluation(const EnvGenome&, std::int64_t budget)>;

inline Evaluation evaluate(const EnvGenome& g, std::int64_t budget) {
    const SearchResult r = best_first_search(g, budget);
    return {r.fitness, extract_trajectory(r, g)};
}

namespace detail {

inline std::string format_real(double v) {
    if (v == 0.0) {
        return "0";
    }
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out << content;
    if (!out) {
        throw IoError("write failed for " + path.string());
    }
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot read " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (true) {
        const auto tab = line.find('\t', pos);
        out.push_back(line.substr(pos, tab == std::string::npos ? std::string::npos : tab - pos));
        if (tab == std::string::npos) {
            return out;
        }
        pos = tab + 1;
    }
}

} // namespace detail

inline std::string format_actions(std::span<const Action> actions) {
    std::string s;
    for (Action a : actions) {
        s += std::to_string(action_code(a));
        s += '\n';
    }
    return s;
}

// One integer in {0,1,2} per non-blank line.
inline std::vector<Action> parse_actions(std::string_view text) {
    std::vector<Action> out;
    std::istringstream in{std::string(text)};
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) {
            continue;
        }
        const auto last = line.find_last_not_of(" \t\r");
        const std::string tok = line.substr(first, last - first + 1);
        if (tok.size() != 1 || tok[0] < '0' || tok[0] > '2') {
            throw ValidationError(number, "expected action code 0, 1 or 2, got '" + tok + "'");
        }
        out.push_back(static_cast<Action>(tok[0] - '0'));
    }
    return out;
}

// Best trajectory per genome id. A record only replaces the stored one when
// its reward is strictly higher.
class Archive {
public:
    // True when the record was inserted or replaced the stored one.
    bool offer(const TrajectoryRecord& rec) {
        auto it = m_records.find(rec.genome_id);
        if (it == m_records.end()) {
            m_records.emplace(rec.genome_id, rec);
            m_order.push_back(rec.genome_id);
            return true;
        }
        if (rec.reward > it->second.reward) {
            it->second = rec;
            return true;
        }
        return false;
    }

    std::size_t size() const noexcept { return m_records.size(); }
    bool empty() const noexcept { return m_records.empty(); }

    const TrajectoryRecord* find(const std::string& id) const {
        auto it = m_records.find(id);
        return it == m_records.end() ? nullptr : &it->second;
    }

    const TrajectoryRecord& at(const std::string& id) const { return m_records.at(id); }

    // Genome ids in first-insertion order.
    const std::vector<std::string>& order() const noexcept { return m_order; }

    std::string manifest() const {
        std::string s = "genome_id\treward\tfitness\tgeneration\n";
        for (const auto& id : m_order) {
            const auto& r = m_records.at(id);
            s += id + '\t' + detail::format_real(r.reward) + '\t' + std::to_string(r.fitness) + '\t' +
                 std::to_string(r.generation) + '\n';
        }
        return s;
    }

    // <dir>/manifest.tsv and <dir>/archive/<genome_id>/{env.av, actions.txt, meta.tsv}
    void write(const std::filesystem::path& dir) const {
        namespace fs = std::filesystem;
        std::error_code ec;
        fs::create_directories(dir / "archive", ec);
        if (ec) {
            throw IoError("cannot create " + (dir / "archive").string() + ": " + ec.message());
        }
        for (const auto& id : m_order) {
            const auto& r = m_records.at(id);
            const fs::path sub = dir / "archive" / id;
            fs::create_directories(sub, ec);
            if (ec) {
                throw IoError("cannot create " + sub.string() + ": " + ec.message());
            }
            detail::write_file(sub / "env.av", r.genome_text);
            detail::write_file(sub / "actions.txt", format_actions(r.actions));
            detail::write_file(sub / "meta.tsv", "reward\tfitness\tbudget\tgeneration\n" +
                                                     detail::format_real(r.reward) + '\t' +
                                                     std::to_string(r.fitness) + '\t' + std::to_string(r.budget) +
                                                     '\t' + std::to_string(r.generation) + '\n');
        }
        detail::write_file(dir / "manifest.tsv", manifest());
    }

    static Archive load(const std::filesystem::path& dir) {
        Archive a;
        const std::string manifest = detail::read_file(dir / "manifest.tsv");
        std::istringstream lines(manifest);
        std::string line;
        std::getline(lines, line); // header
        while (std::getline(lines, line)) {
            if (line.empty()) {
                continue;
            }
            const auto cols = detail::split_tabs(line);
            if (cols.empty() || cols[0].empty()) {
                throw ValidationError("malformed manifest row '" + line + "'");
            }
            const auto sub = dir / "archive" / cols[0];
            TrajectoryRecord rec;
            rec.genome_id = cols[0];
            rec.genome_text = detail::read_file(sub / "env.av");
            rec.actions = parse_actions(detail::read_file(sub / "actions.txt"));
            const std::string meta = detail::read_file(sub / "meta.tsv");
            const auto nl = meta.find('\n');
            const auto m = detail::split_tabs(meta.substr(nl + 1, meta.find('\n', nl + 1) - nl - 1));
            if (m.size() != 4) {
                throw ValidationError("malformed " + (sub / "meta.tsv").string());
            }
            try {
                rec.reward = std::stod(m[0]);
                rec.fitness = std::stoll(m[1]);
                rec.budget = std::stoll(m[2]);
                rec.generation = std::stoi(m[3]);
            } catch (const std::exception&) {
                throw ValidationError("malformed " + (sub / "meta.tsv").string());
            }
            a.offer(rec);
        }
        return a;
    }

private:
    std::map<std::string, TrajectoryRecord> m_records;
    std::vector<std::string> m_order;
};

struct GenerationStats {
    int generation = 0;
    std::int64_t budget = 0; // budget this generation was evaluated at
    std::int64_t max_fitness = 0;
    double mean_fitness = 0.0;
    std::size_t archive_size = 0;
    std::size_t elite_length = 0; // action count of the top individual's solution
    double elite_reward = 0.0;
};

inline std::string format_stats(std::span<const GenerationStats> stats) {
    std::string s = "generation\tbudget\tmax_fitness\tmean_fitness\tarchive_size\telite_length\telite_reward\n";
    for (const auto& g : stats) {
        s += std::to_string(g.generation) + '\t' + std::to_string(g.budget) + '\t' + std::to_string(g.max_fitness) +
             '\t' + detail::format_real(g.mean_fitness) + '\t' + std::to_string(g.archive_size) + '\t' +
             std::to_string(g.elite_length) + '\t' + detail::format_real(g.elite_reward) + '\n';
    }
    return s;
}

struct Individual {
    EnvGenome genome;
    Evaluation eval;
};

struct EvolutionResult {
    Archive archive;
    std::vector<GenerationStats> stats;
    std::vector<Individual> population; // final elites, best first
    std::int64_t final_budget = 0;
};

// (mu + lambda) evolution maximising fitness.
//
// Each generation draws lambda parents uniformly from the elites, mutates
// them, evaluates the offspring in parallel and keeps the top mu of elites
// plus offspring (stable: incumbents win ties). Every evaluation is offered
// to the archive in a fixed order. When any elite's fitness reaches
// threshold * budget the budget grows and the elites are re-evaluated.
inline EvolutionResult run_evolution(const EnvGenome& seed, const EvoConfig& cfg, const FitnessFn& fitness = evaluate,
                                     const std::function<void(const GenerationStats&)>& on_generation = {}) {
    cfg.validate();
    Rng rng(cfg.seed);
    EvolutionResult res;
    std::int64_t budget = cfg.initial_budget;

    auto evaluate_all = [&](std::vector<Individual>& inds, int generation) {
        parallel_for(inds.size(), cfg.workers, [&](std::size_t i) {
            inds[i].eval = fitness(inds[i].genome, budget);
            inds[i].eval.record.generation = generation;
        });
        for (const auto& ind : inds) {
            res.archive.offer(ind.eval.record);
        }
    };

    auto record_stats = [&](int generation) {
        GenerationStats st;
        st.generation = generation;
        st.budget = budget;
        double sum = 0.0;
        for (const auto& ind : res.population) {
            st.max_fitness = std::max(st.max_fitness, ind.eval.fitness);
            sum += static_cast<double>(ind.eval.fitness);
        }
        st.mean_fitness = sum / static_cast<double>(res.population.size());
        st.archive_size = res.archive.size();
        const auto& elite = res.population.front().eval.record;
        st.elite_length = elite.actions.size();
        st.elite_reward = elite.reward;
        if (replay_reward(elite) != elite.reward) {
            throw std::logic_error("archive record " + elite.genome_id + " does not replay to its reward");
        }
        res.stats.push_back(st);
        if (on_generation) {
            on_generation(st);
        }
    };

    auto maybe_grow_budget = [&](int generation) {
        const bool near_cap = std::ranges::any_of(res.population, [&](const Individual& ind) {
            return static_cast<double>(ind.eval.fitness) >= cfg.budget_threshold * static_cast<double>(budget);
        });
        if (!near_cap) {
            return;
        }
        budget = static_cast<std::int64_t>(std::ceil(static_cast<double>(budget) * cfg.budget_growth));
        evaluate_all(res.population, generation);
        std::ranges::stable_sort(res.population, std::greater<>{},
                                 [](const Individual& ind) { return ind.eval.fitness; });
    };

    res.population.push_back({seed, {}});
    evaluate_all(res.population, 0);
    record_stats(0);
    maybe_grow_budget(0);

    for (int gen = 1; gen <= cfg.generations; ++gen) {
        std::vector<Individual> offspring;
        offspring.reserve(static_cast<std::size_t>(cfg.lambda));
        for (int i = 0; i < cfg.lambda; ++i) {
            const auto& parent = res.population[rng.below(res.population.size())];
            offspring.push_back({mutate(parent.genome, cfg, rng), {}});
        }
        evaluate_all(offspring, gen);

        std::vector<Individual> pool = std::move(res.population);
        pool.insert(pool.end(), std::make_move_iterator(offspring.begin()), std::make_move_iterator(offspring.end()));
        std::ranges::stable_sort(pool, std::greater<>{}, [](const Individual& ind) { return ind.eval.fitness; });
        if (pool.size() > static_cast<std::size_t>(cfg.mu)) {
            pool.erase(pool.begin() + cfg.mu, pool.end());
        }
        res.population = std::move(pool);
        record_stats(gen);
        maybe_grow_budget(gen);
    }
    res.final_budget = budget;
    return res;
}

} // namespace autoverse
