#pragma once

#include "autoverse/evolve.hpp"
#include "autoverse/parallel.hpp"
#include "autoverse/random.hpp"
#include "autoverse/sim.hpp"
#include "autoverse/trajectory.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace autoverse {

struct Pair {
    Observation observation;
    Action action;
};

// (observe(state_t), action_t) for every action, states from a fresh replay.
inline std::vector<Pair> build_pairs(const TrajectoryRecord& rec, int window, bool show_rules) {
    const EnvGenome g = parse(rec.genome_text);
    std::vector<Pair> pairs;
    pairs.reserve(rec.actions.size());
    GameState s = reset(g);
    for (Action a : rec.actions) {
        if (s.done) {
            throw ValidationError("trajectory for " + rec.genome_id + " continues past the end of its episode");
        }
        pairs.push_back({observe(s, g, window, show_rules), a});
        s = step(s, a, g).state;
    }
    return pairs;
}

struct Split {
    std::vector<std::string> train;
    std::vector<std::string> test;
};

// Seeded partition of genome ids; round(fraction * n) ids go to the test set.
// Depends only on the set of ids, not on archive insertion order.
inline Split split(const Archive& archive, double test_fraction, std::uint64_t seed) {
    if (archive.empty()) {
        throw ValidationError("cannot split an empty archive");
    }
    if (!(test_fraction >= 0.0 && test_fraction <= 1.0)) {
        throw ValidationError("test fraction must lie in [0, 1]");
    }
    std::vector<std::string> ids = archive.order();
    std::ranges::sort(ids);
    Rng rng(seed);
    rng.shuffle(std::span(ids));
    const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(ids.size())));
    Split s;
    s.test.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_test));
    s.train.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_test), ids.end());
    std::ranges::sort(s.test);
    std::ranges::sort(s.train);
    return s;
}

// Observation tensor file (<genome_id>.obs):
//   magic "AVOB", then little-endian u32: version, window, channels,
//   mutable_rules, count, bits_per_observation;
//   then `count` records of ceil(bits/8) bytes each, holding the flattened
//   observation bits MSB-first (numpy.unpackbits order).
// Action file (<genome_id>.act): `count` bytes, one action code each.
inline constexpr std::array<char, 4> kObsMagic{'A', 'V', 'O', 'B'};
inline constexpr std::uint32_t kObsVersion = 1;

struct ObsFileHeader {
    std::uint32_t version = kObsVersion;
    std::uint32_t window = 0;
    std::uint32_t channels = 0;
    std::uint32_t mutable_rules = 0;
    std::uint32_t count = 0;
    std::uint32_t bits = 0;

    friend bool operator==(const ObsFileHeader&, const ObsFileHeader&) = default;
};

inline std::vector<std::uint8_t> pack_bits_msb(std::span<const std::uint8_t> bits) {
    std::vector<std::uint8_t> out((bits.size() + 7) / 8, 0);
    for (std::size_t i = 0; i < bits.size(); ++i) {
        if (bits[i]) {
            out[i / 8] |= static_cast<std::uint8_t>(0x80u >> (i % 8));
        }
    }
    return out;
}

inline std::vector<std::uint8_t> encode_observations(std::span<const Pair> pairs, const ObsFileHeader& header) {
    std::vector<std::uint8_t> out(kObsMagic.begin(), kObsMagic.end());
    auto put32 = [&out](std::uint32_t v) {
        for (int i = 0; i < 4; ++i) {
            out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
        }
    };
    for (std::uint32_t v : {header.version, header.window, header.channels, header.mutable_rules, header.count,
                            header.bits}) {
        put32(v);
    }
    for (const auto& p : pairs) {
        const auto packed = pack_bits_msb(p.observation.flatten());
        out.insert(out.end(), packed.begin(), packed.end());
    }
    return out;
}

struct ObsFile {
    ObsFileHeader header;
    std::vector<std::vector<std::uint8_t>> observations; // unpacked, one byte per bit
};

inline ObsFile decode_observations(std::span<const std::uint8_t> bytes) {
    constexpr std::size_t header_size = 4 + 6 * 4;
    if (bytes.size() < header_size || !std::equal(kObsMagic.begin(), kObsMagic.end(), bytes.begin())) {
        throw ValidationError("not an observation file");
    }
    auto get32 = [&](std::size_t off) {
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            v |= static_cast<std::uint32_t>(bytes[off + static_cast<std::size_t>(i)]) << (8 * i);
        }
        return v;
    };
    ObsFile f;
    f.header = {get32(4), get32(8), get32(12), get32(16), get32(20), get32(24)};
    if (f.header.version != kObsVersion) {
        throw ValidationError("unsupported observation file version " + std::to_string(f.header.version));
    }
    const std::size_t stride = (f.header.bits + 7) / 8;
    if (bytes.size() != header_size + stride * f.header.count) {
        throw ValidationError("observation file length does not match its header");
    }
    for (std::uint32_t n = 0; n < f.header.count; ++n) {
        const auto rec = bytes.subspan(header_size + n * stride, stride);
        std::vector<std::uint8_t> bits(f.header.bits);
        for (std::size_t i = 0; i < bits.size(); ++i) {
            bits[i] = (rec[i / 8] >> (7 - i % 8)) & 1;
        }
        f.observations.push_back(std::move(bits));
    }
    return f;
}

struct ExportOptions {
    int window = 31;
    bool show_rules = true;
    double test_fraction = 0.2;
    std::uint64_t seed = 0;
    unsigned workers = default_workers();
};

struct ExportSummary {
    std::size_t records = 0;
    std::size_t pairs = 0;
    Split split;
};

// Writes <out>/<genome_id>.obs, <out>/<genome_id>.act and <out>/index.tsv
// (genome_id, split, pairs, reward, obs_file, act_file) in sorted id order.
inline ExportSummary export_dataset(const Archive& archive, const std::filesystem::path& out,
                                    const ExportOptions& opt) {
    namespace fs = std::filesystem;
    ExportSummary summary;
    summary.split = split(archive, opt.test_fraction, opt.seed);
    std::vector<std::string> ids = archive.order();
    std::ranges::sort(ids);

    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) {
        throw IoError("cannot create " + out.string() + ": " + ec.message());
    }

    std::vector<std::size_t> counts(ids.size(), 0);
    parallel_for(ids.size(), opt.workers, [&](std::size_t i) {
        const auto& rec = archive.at(ids[i]);
        const auto pairs = build_pairs(rec, opt.window, opt.show_rules);
        const EnvGenome g = parse(rec.genome_text);
        ObsFileHeader h;
        h.window = static_cast<std::uint32_t>(opt.window);
        h.channels = static_cast<std::uint32_t>(g.tiles().count());
        h.mutable_rules = static_cast<std::uint32_t>(g.rules().mutable_count());
        h.count = static_cast<std::uint32_t>(pairs.size());
        h.bits = static_cast<std::uint32_t>(static_cast<std::size_t>(opt.window) * opt.window * h.channels +
                                            rule_encoding_length(h.mutable_rules, static_cast<int>(h.channels)) + 4);
        const auto obs = encode_observations(pairs, h);
        std::string acts;
        for (const auto& p : pairs) {
            acts.push_back(static_cast<char>(action_code(p.action)));
        }
        detail::write_file(out / (ids[i] + ".obs"), std::string(obs.begin(), obs.end()));
        detail::write_file(out / (ids[i] + ".act"), acts);
        counts[i] = pairs.size();
    });

    std::string index = "genome_id\tsplit\tpairs\treward\tobs_file\tact_file\n";
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const bool is_test = std::ranges::binary_search(summary.split.test, ids[i]);
        index += ids[i] + '\t' + (is_test ? "test" : "train") + '\t' + std::to_string(counts[i]) + '\t' +
                 detail::format_real(archive.at(ids[i]).reward) + '\t' + ids[i] + ".obs\t" + ids[i] + ".act\n";
        summary.pairs += counts[i];
    }
    detail::write_file(out / "index.tsv", index);
    summary.records = ids.size();
    return summary;
}

} // namespace autoverse
