// Command-line front end: parse, init, simulate, search, evolve, export,
// render and play.

#include "autoverse/autoverse.hpp"

#include <CLI11.hpp>

#include <termios.h>
#include <unistd.h>

#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace autoverse;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;

EnvGenome load_genome(const std::string& path) {
    const std::string text = detail::read_file(path);
    try {
        return parse(text);
    } catch (const ValidationError& e) {
        throw ValidationError(path + ": " + e.what());
    }
}

std::vector<Action> load_actions(const std::string& path) {
    try {
        return parse_actions(detail::read_file(path));
    } catch (const ValidationError& e) {
        throw ValidationError(path + ": " + e.what());
    }
}

void emit(const std::string& out_path, const std::string& content) {
    if (out_path.empty()) {
        std::cout << content;
    } else {
        detail::write_file(out_path, content);
    }
}

std::string reward_trace(std::span<const double> rewards) {
    std::string s;
    for (double r : rewards) {
        s += detail::format_real(r) + '\n';
    }
    return s;
}

// Restores the terminal mode on scope exit.
class RawTerminal {
public:
    RawTerminal() {
        if (tcgetattr(STDIN_FILENO, &m_saved) == 0) {
            termios raw = m_saved;
            raw.c_lflag &= static_cast<tcflag_t>(~(ICANON | ECHO));
            raw.c_cc[VMIN] = 1;
            raw.c_cc[VTIME] = 0;
            m_active = tcsetattr(STDIN_FILENO, TCSANOW, &raw) == 0;
        }
    }
    ~RawTerminal() {
        if (m_active) {
            tcsetattr(STDIN_FILENO, TCSANOW, &m_saved);
        }
    }
    RawTerminal(const RawTerminal&) = delete;
    RawTerminal& operator=(const RawTerminal&) = delete;

private:
    termios m_saved{};
    bool m_active = false;
};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Autoverse: rewrite-rule grid games, search, evolution and dataset export"};
    app.require_subcommand(1);

    // parse
    std::string parse_file;
    bool parse_canonical = false;
    auto* cmd_parse = app.add_subcommand("parse", "Validate an .av file and print its id (or canonical form)");
    cmd_parse->add_option("file", parse_file, "Environment file")->required();
    cmd_parse->add_flag("--canonical", parse_canonical, "Print the canonical serialization");

    // init
    std::uint64_t init_seed = 0;
    int init_size = kDefaultBoardSide;
    std::string init_out;
    auto* cmd_init = app.add_subcommand("init", "Write a base maze environment with empty no-op rules");
    cmd_init->add_option("--seed", init_seed, "Maze layout seed");
    cmd_init->add_option("--size", init_size, "Board side length")->check(CLI::Range(3, kMaxMapSide));
    cmd_init->add_option("--out", init_out, "Output file (stdout if omitted)");

    // simulate
    std::string sim_env, sim_actions, sim_batch, sim_out;
    unsigned sim_workers = default_workers();
    auto* cmd_sim = app.add_subcommand("simulate", "Replay action traces and print reward traces");
    cmd_sim->add_option("env", sim_env, "Environment file");
    cmd_sim->add_option("--actions", sim_actions, "Action trace (one code 0/1/2 per line)");
    cmd_sim->add_option("--batch", sim_batch, "File of '<env.av> <actions.txt>' lines to roll out in lockstep");
    cmd_sim->add_option("--out", sim_out, "Reward trace file (single) or output directory (batch)");
    cmd_sim->add_option("--workers", sim_workers, "Batch worker threads")->check(CLI::PositiveNumber);

    // search
    std::string search_env, search_out;
    std::int64_t search_budget = 512;
    auto* cmd_search = app.add_subcommand("search", "Best-first search for the highest-reward action sequence");
    cmd_search->add_option("env", search_env, "Environment file")->required();
    cmd_search->add_option("--budget", search_budget, "Maximum node expansions")->check(CLI::PositiveNumber);
    cmd_search->add_option("--out", search_out, "Write the best action trace to this file");

    // evolve
    EvoConfig evo;
    std::string evo_seed_env, evo_out;
    auto* cmd_evolve = app.add_subcommand("evolve", "Evolve environments for search difficulty");
    cmd_evolve->add_option("--seed-env", evo_seed_env, "Initial environment (default: random base maze)");
    cmd_evolve->add_option("--mu", evo.mu, "Elites kept per generation")->capture_default_str();
    cmd_evolve->add_option("--lambda", evo.lambda, "Offspring per generation")->capture_default_str();
    cmd_evolve->add_option("--gens", evo.generations, "Generations")->capture_default_str();
    cmd_evolve->add_option("--budget", evo.initial_budget, "Initial search budget")->capture_default_str();
    cmd_evolve->add_option("--budget-growth", evo.budget_growth, "Budget growth factor")->capture_default_str();
    cmd_evolve->add_option("--budget-threshold", evo.budget_threshold, "Fraction of budget that triggers growth")
        ->capture_default_str();
    cmd_evolve->add_option("--p-map", evo.p_map, "Map bit flip probability")->capture_default_str();
    cmd_evolve->add_option("--p-rule", evo.p_rule, "Rule pattern toggle probability")->capture_default_str();
    cmd_evolve->add_option("--p-reward", evo.p_reward, "Rule reward resample probability")->capture_default_str();
    cmd_evolve->add_flag("--freeze-rules", evo.freeze_rules, "Mutate only the map");
    cmd_evolve->add_option("--seed", evo.seed, "RNG seed")->capture_default_str();
    cmd_evolve->add_option("--workers", evo.workers, "Evaluation threads")->check(CLI::PositiveNumber);
    cmd_evolve->add_option("--out", evo_out, "Output directory")->required();

    // export
    std::string exp_archive, exp_out;
    ExportOptions exp;
    bool exp_hide_rules = false;
    auto* cmd_export = app.add_subcommand("export", "Replay an archive into observation/action tensors");
    cmd_export->add_option("--archive", exp_archive, "Directory written by evolve")->required();
    cmd_export->add_option("--out", exp_out, "Output directory")->required();
    cmd_export->add_option("--obs-window", exp.window, "Odd observation window")->capture_default_str();
    cmd_export->add_flag("--hide-rules", exp_hide_rules, "Zero the rule encoding");
    cmd_export->add_option("--test-fraction", exp.test_fraction, "Held-out fraction")->capture_default_str();
    cmd_export->add_option("--seed", exp.seed, "Split seed")->capture_default_str();
    cmd_export->add_option("--workers", exp.workers, "Replay threads")->check(CLI::PositiveNumber);

    // render
    std::string render_env, render_actions, render_ppm_dir, render_out;
    std::int64_t render_search = 0;
    auto* cmd_render = app.add_subcommand("render", "Render an episode as ASCII frames (and optional PPM images)");
    cmd_render->add_option("env", render_env, "Environment file")->required();
    cmd_render->add_option("--actions", render_actions, "Action trace to render");
    cmd_render->add_option("--search", render_search, "Render the best-first solution found with this budget");
    cmd_render->add_option("--ppm", render_ppm_dir, "Also write frame_<t>.ppm images here");
    cmd_render->add_option("--out", render_out, "Write ASCII frames to this file");

    // play
    std::string play_env;
    auto* cmd_play = app.add_subcommand("play", "Play an environment interactively in the terminal");
    cmd_play->add_option("env", play_env, "Environment file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitValidation;
    }

    try {
        if (*cmd_parse) {
            const EnvGenome g = load_genome(parse_file);
            if (parse_canonical) {
                std::cout << g.canonical_text();
            } else {
                std::cout << "genome_id\t" << g.id() << "\ntiles\t" << g.tiles().count() << "\nmap\t"
                          << g.init_map().height() << "x" << g.init_map().width() << "\nrules\t"
                          << g.rules().rules().size() << "\ncompiled\t" << g.rules().compiled().size()
                          << "\nepisode_limit\t" << g.episode_limit() << '\n';
            }
        } else if (*cmd_init) {
            emit(init_out, base_maze_genome(init_seed, init_size).canonical_text());
        } else if (*cmd_sim) {
            if (!sim_batch.empty()) {
                std::vector<EnvGenome> genomes;
                std::vector<std::vector<Action>> actions;
                std::istringstream lines(detail::read_file(sim_batch));
                std::string line;
                while (std::getline(lines, line)) {
                    std::istringstream cols(line);
                    std::string env, acts;
                    if (!(cols >> env)) {
                        continue;
                    }
                    if (!(cols >> acts)) {
                        throw ValidationError(sim_batch + ": expected '<env.av> <actions.txt>' in '" + line + "'");
                    }
                    genomes.push_back(load_genome(env));
                    actions.push_back(load_actions(acts));
                }
                const auto results = rollout_batch(genomes, actions, sim_workers);
                if (!sim_out.empty()) {
                    fs::create_directories(sim_out);
                }
                std::cout << "index\tgenome_id\ttotal_reward\tticks\tdone\tstate_key\n";
                for (std::size_t i = 0; i < results.size(); ++i) {
                    const auto& s = results[i].final_state;
                    std::cout << i << '\t' << genomes[i].id() << '\t' << detail::format_real(s.total_reward) << '\t'
                              << s.tick << '\t' << (s.done ? 1 : 0) << '\t' << state_key(s).hex() << '\n';
                    if (!sim_out.empty()) {
                        detail::write_file(fs::path(sim_out) / (std::to_string(i) + ".rewards.txt"),
                                           reward_trace(results[i].rewards));
                    }
                }
            } else {
                if (sim_env.empty() || sim_actions.empty()) {
                    throw ValidationError("simulate needs <env> and --actions, or --batch");
                }
                const EnvGenome g = load_genome(sim_env);
                const auto res = rollout(g, load_actions(sim_actions));
                emit(sim_out, reward_trace(res.rewards));
                std::cerr << "total_reward " << detail::format_real(res.final_state.total_reward) << " ticks "
                          << res.final_state.tick << (res.final_state.done ? " done" : "") << '\n';
            }
        } else if (*cmd_search) {
            const EnvGenome g = load_genome(search_env);
            const SearchResult r = best_first_search(g, search_budget);
            std::cout << "fitness\t" << r.fitness << "\nbest_reward\t" << detail::format_real(r.best_reward)
                      << "\nexpanded\t" << r.expanded << "\nfrontier_exhausted\t" << (r.frontier_exhausted ? 1 : 0)
                      << "\nactions\t";
            for (Action a : r.best_actions) {
                std::cout << action_code(a);
            }
            std::cout << '\n';
            if (!search_out.empty()) {
                detail::write_file(search_out, format_actions(r.best_actions));
            }
        } else if (*cmd_evolve) {
            const EnvGenome seed = evo_seed_env.empty() ? base_maze_genome(evo.seed) : load_genome(evo_seed_env);
            const auto res = run_evolution(seed, evo, evaluate, [](const GenerationStats& st) {
                std::cerr << "gen " << st.generation << " budget " << st.budget << " max " << st.max_fitness
                          << " mean " << st.mean_fitness << " archive " << st.archive_size << " elite_len "
                          << st.elite_length << '\n';
            });
            res.archive.write(evo_out);
            detail::write_file(fs::path(evo_out) / "stats.tsv", format_stats(res.stats));
        } else if (*cmd_export) {
            exp.show_rules = !exp_hide_rules;
            const Archive archive = Archive::load(exp_archive);
            const auto summary = export_dataset(archive, exp_out, exp);
            std::cout << "records\t" << summary.records << "\npairs\t" << summary.pairs << "\ntrain\t"
                      << summary.split.train.size() << "\ntest\t" << summary.split.test.size() << '\n';
        } else if (*cmd_render) {
            const EnvGenome g = load_genome(render_env);
            std::vector<Action> actions;
            if (!render_actions.empty()) {
                actions = load_actions(render_actions);
            } else if (render_search > 0) {
                actions = best_first_search(g, render_search).best_actions;
            }
            const auto states = episode_states(g, actions);
            std::string frames;
            for (const auto& s : states) {
                frames += render_frame(s) + '\n';
            }
            emit(render_out, frames);
            if (!render_ppm_dir.empty()) {
                fs::create_directories(render_ppm_dir);
                for (const auto& s : states) {
                    detail::write_file(fs::path(render_ppm_dir) / ("frame_" + std::to_string(s.tick) + ".ppm"),
                                       render_ppm(s.board));
                }
            }
        } else if (*cmd_play) {
            const EnvGenome g = load_genome(play_env);
            if (!isatty(STDIN_FILENO)) {
                std::cerr << "play needs an interactive terminal; use 'simulate --actions <file>' for scripted "
                             "input\n";
                return kExitValidation;
            }
            RawTerminal raw;
            play_session(g, std::cin, std::cout);
        }
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const ContractError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    }
    return kExitOk;
}
