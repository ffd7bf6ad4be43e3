// Acceptance gate: one PASS/FAIL line per criterion, non-zero exit if any fail.

#include "autoverse/autoverse.hpp"
#include "oracles.hpp"

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

using namespace autoverse;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v, int digits = 2) {
    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(digits);
    s << v;
    return s.str();
}

Outcome conv_equivalence() {
    const auto t0 = Clock::now();
    Rng rng(1001);
    const TileSet tiles = TileSet::with_extras(5);
    const int trials = 1000;
    std::size_t fired = 0;
    for (int i = 0; i < trials; ++i) {
        const Board b = oracle::random_board(rng, 16, 16, tiles.count(), 0.1 + 0.5 * rng.uniform());
        const auto rules = oracle::random_rules(rng, tiles.count(), 8);
        const Ruleset rs(tiles, rules);
        const TickResult got = step_rules(b, rs);
        const auto want = oracle::naive_step(b, rules);
        if (got.next != want.next || got.reward != want.reward) {
            return {false, "mismatch at pair " + std::to_string(i)};
        }
        fired += got.next != b;
    }
    const double secs = seconds_since(t0);
    return {secs < 60.0, std::to_string(trials) + " pairs bit-identical (" + std::to_string(fired) +
                             " changed the board), " + fmt(secs) + " s"};
}

Outcome batch_equals_sequential() {
    const auto t0 = Clock::now();
    Rng rng(2002);
    std::vector<EnvGenome> genomes;
    std::vector<std::vector<Action>> traces;
    for (int i = 0; i < 64; ++i) {
        genomes.push_back(oracle::random_genome(rng, 16, kDefaultEpisodeLimit));
        std::vector<Action> acts(kDefaultEpisodeLimit);
        for (auto& a : acts) {
            a = kAllActions[rng.below(3)];
        }
        traces.push_back(std::move(acts));
    }
    const auto batch = rollout_batch(genomes, traces, 4);
    for (std::size_t i = 0; i < genomes.size(); ++i) {
        const auto seq = rollout(genomes[i], traces[i]);
        const auto& a = batch[i].final_state;
        const auto& b = seq.final_state;
        if (batch[i].rewards != seq.rewards || a.board != b.board || a.player_pos != b.player_pos ||
            a.orientation != b.orientation || a.total_reward != b.total_reward || a.tick != b.tick ||
            a.done != b.done) {
            return {false, "genome " + std::to_string(i) + " diverges"};
        }
    }
    const double secs = seconds_since(t0);
    return {secs < 60.0, "64 genomes x 102 steps bit-exact, " + fmt(secs) + " s"};
}

Outcome maze_optimality() {
    const auto t0 = Clock::now();
    Rng rng(3003);
    const TileSet tiles = TileSet::with_extras(kDefaultExtraTiles);
    const Ruleset rules = base_maze_ruleset(tiles);
    int solved = 0;
    int longest = 0;
    while (solved < 25) {
        const EnvGenome g(rules, random_maze(tiles, 16, 16, rng));
        const auto want = oracle::shortest_food_path(g.init_map());
        if (!want || *want > g.episode_limit()) {
            continue;
        }
        const SearchResult r = best_first_search(g, 200000);
        if (r.best_reward != 1.0 || static_cast<int>(r.best_actions.size()) != *want) {
            return {false, "maze " + std::to_string(solved) + ": oracle " + std::to_string(*want) + ", search " +
                               std::to_string(r.best_actions.size()) + " (reward " + fmt(r.best_reward) + ")"};
        }
        longest = std::max(longest, *want);
        ++solved;
    }
    const double secs = seconds_since(t0);
    return {secs < 60.0, "25 mazes match the BFS oracle (longest path " + std::to_string(longest) + "), " +
                             fmt(secs) + " s"};
}

Outcome search_vs_exhaustive() {
    Rng rng(4004);
    int nonzero = 0;
    for (int i = 0; i < 50; ++i) {
        const EnvGenome g = oracle::random_genome(rng, 0, 3);
        const SearchResult r = best_first_search(g, 10000);
        const double want = oracle::exhaustive_best_reward(g, 3);
        if (r.best_reward != want) {
            return {false, "genome " + std::to_string(i) + ": search " + fmt(r.best_reward) + ", exhaustive " +
                               fmt(want)};
        }
        nonzero += want != 0.0;
    }
    return {true, "50 genomes match exhaustive enumeration (" + std::to_string(nonzero) + " with nonzero reward)"};
}

Outcome evolution_sanity() {
    const auto t0 = Clock::now();
    EvoConfig cfg;
    cfg.mu = 5;
    cfg.lambda = 20;
    cfg.generations = 30;
    cfg.freeze_rules = true;
    cfg.initial_budget = 128;
    cfg.budget_growth = 1.25;
    cfg.seed = 0;
    const auto res = run_evolution(base_maze_genome(0), cfg);

    int increases = 0;
    int records = 0;
    std::size_t best_len = res.stats.front().elite_length;
    bool elitism = true;
    for (std::size_t i = 1; i < res.stats.size(); ++i) {
        const auto& prev = res.stats[i - 1];
        const auto& cur = res.stats[i];
        increases += cur.elite_length > prev.elite_length;
        if (cur.elite_length > best_len) {
            ++records;
            best_len = cur.elite_length;
        }
        if (cur.budget == prev.budget && cur.max_fitness < prev.max_fitness) {
            elitism = false;
        }
    }
    const double secs = seconds_since(t0);
    const bool pass = increases >= 3 && elitism && secs < 600.0;
    return {pass, "elite length " + std::to_string(res.stats.front().elite_length) + " -> " +
                      std::to_string(res.stats.back().elite_length) + ", " + std::to_string(increases) +
                      " increases (" + std::to_string(records) + " new maxima), budget 128 x1.25, fitness at fixed budget " +
                      (elitism ? "non-decreasing" : "DECREASED") + ", final budget " +
                      std::to_string(res.final_budget) + ", " + fmt(secs) + " s"};
}

Outcome archive_fidelity() {
    EvoConfig cfg;
    cfg.mu = 10;
    cfg.lambda = 40;
    cfg.generations = 6;
    cfg.initial_budget = 256;
    cfg.p_rule = 0.05;
    cfg.p_reward = 0.3;
    cfg.seed = 6006;
    const auto res = run_evolution(base_maze_genome(6), cfg);
    const fs::path dir = fs::temp_directory_path() / "autoverse_acceptance_archive";
    fs::remove_all(dir);
    res.archive.write(dir);
    const Archive loaded = Archive::load(dir);
    fs::remove_all(dir);
    if (loaded.size() < 200) {
        return {false, "archive holds only " + std::to_string(loaded.size()) + " genomes"};
    }
    std::size_t rewarded = 0;
    for (const auto& id : loaded.order()) {
        const auto& rec = loaded.at(id);
        if (replay_reward(rec) != rec.reward) {
            return {false, "record " + id + " replays to " + fmt(replay_reward(rec)) + ", stored " + fmt(rec.reward)};
        }
        rewarded += rec.reward != 0.0;
    }
    return {true, std::to_string(loaded.size()) + " records (" + std::to_string(rewarded) +
                      " nonzero reward) replay exactly after a disk round trip"};
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(AUTOVERSE_CLI) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome determinism() {
    const fs::path base = fs::temp_directory_path() / "autoverse_acceptance_det";
    fs::remove_all(base);
    const std::string common = "evolve --mu 4 --lambda 8 --gens 4 --budget 256 --seed 77 ";
    const int a = run_cli(common + "--workers 1 --out " + (base / "a").string());
    const int b = run_cli(common + "--workers 3 --out " + (base / "b").string());
    if (a != 0 || b != 0) {
        fs::remove_all(base);
        return {false, "evolve exited with " + std::to_string(a) + " / " + std::to_string(b)};
    }
    const std::string ma = detail::read_file(base / "a" / "manifest.tsv");
    const std::string mb = detail::read_file(base / "b" / "manifest.tsv");
    fs::remove_all(base);
    const auto rows = std::ranges::count(ma, '\n') - 1;
    return {ma == mb, std::to_string(rows) + "-row manifest.tsv " + (ma == mb ? "byte-identical" : "DIFFERS") +
                          " across runs (1 vs 3 workers)"};
}

Outcome throughput() {
    Rng rng(8008);
    const TileSet tiles = TileSet::with_extras(5);
    const Ruleset base = base_maze_ruleset(tiles, 0);
    // move (4 rotations) + blocked (1) + three non-rotating 3x3 rules = 8 kernels
    std::vector<RewriteRule> rules{base.rules()[0], base.rules()[1]};
    for (int i = 0; i < 3; ++i) {
        RewriteRule r{"r" + std::to_string(i), oracle::random_pattern(rng, 3, 3, tiles.count(), 0.08),
                      oracle::random_pattern(rng, 3, 3, tiles.count(), 0.08), 0.0, false, true};
        rules.push_back(r);
    }
    const Ruleset rs(tiles, rules);
    if (rs.compiled().size() != 8) {
        return {false, "ruleset compiled to " + std::to_string(rs.compiled().size()) + " kernels"};
    }
    std::vector<EnvGenome> genomes;
    std::vector<std::vector<Action>> traces;
    for (int i = 0; i < 64; ++i) {
        genomes.emplace_back(rs, random_maze(tiles, 16, 16, rng));
        std::vector<Action> acts(kDefaultEpisodeLimit);
        for (auto& a : acts) {
            a = kAllActions[rng.below(3)];
        }
        traces.push_back(std::move(acts));
    }
    const unsigned workers = default_workers();
    std::size_t steps = 0;
    const auto t0 = Clock::now();
    int rounds = 0;
    while (seconds_since(t0) < 2.0) {
        for (const auto& r : rollout_batch(genomes, traces, workers)) {
            steps += r.rewards.size();
        }
        ++rounds;
    }
    const double rate = static_cast<double>(steps) / seconds_since(t0);
    return {rate >= 10000.0, fmt(rate, 0) + " env-steps/s on " + std::to_string(workers) +
                                 " worker(s) (16x16x10, 8 kernels, " + std::to_string(rounds) + " batches)"};
}

Outcome dsl_round_trip_and_fuzz() {
    Rng rng(9009);
    for (int i = 0; i < 1000; ++i) {
        const EnvGenome g = oracle::random_genome(rng);
        const EnvGenome back = parse(serialize(g));
        if (back != g || serialize(back) != serialize(g) || back.id() != g.id()) {
            return {false, "round trip " + std::to_string(i) + " differs"};
        }
    }
    const std::string seed_text = serialize(base_maze_genome(9));
    static const std::string alphabet =
        "autoverse 1\ntiles map rule in out end reward rotate immutable episode_limit player force wall floor "
        "food extra0 .+#-0123456789 \n\t";
    int accepted = 0;
    for (int i = 0; i < 100000; ++i) {
        std::string text;
        switch (rng.below(3)) {
        case 0:
            for (auto n = rng.below(256); n > 0; --n) {
                text.push_back(static_cast<char>(rng.below(256)));
            }
            break;
        case 1:
            for (auto n = rng.below(512); n > 0; --n) {
                text.push_back(alphabet[rng.below(alphabet.size())]);
            }
            break;
        default:
            text = seed_text;
            for (auto n = 1 + rng.below(6); n > 0 && !text.empty(); --n) {
                const auto pos = rng.below(text.size());
                switch (rng.below(3)) {
                case 0: text[pos] = static_cast<char>(rng.below(256)); break;
                case 1: text.erase(pos, rng.below(24)); break;
                default: text.insert(pos, text.substr(rng.below(text.size()), rng.below(24))); break;
                }
            }
        }
        try {
            (void)parse(text);
            ++accepted;
        } catch (const ValidationError&) {
        } catch (const std::exception& e) {
            return {false, "fuzz input " + std::to_string(i) + " raised " + e.what()};
        }
    }
    return {true, "1000 round trips identical; 100000 fuzz inputs handled (" + std::to_string(accepted) +
                      " accepted, rest rejected with diagnostics)"};
}

} // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"conv-vs-oracle equivalence", conv_equivalence},
        {"batched = sequential", batch_equals_sequential},
        {"maze optimality", maze_optimality},
        {"search fitness oracle", search_vs_exhaustive},
        {"evolution sanity", evolution_sanity},
        {"archive fidelity", archive_fidelity},
        {"determinism", determinism},
        {"throughput floor", throughput},
        {"dsl round-trip and fuzz", dsl_round_trip_and_fuzz},
    };
    int failed = 0;
    for (const auto& [name, check] : criteria) {
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
    }
    std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size()
              << " criteria passed" << std::endl;
    return failed == 0 ? 0 : 1;
}
