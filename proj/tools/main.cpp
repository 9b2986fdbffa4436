#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "covershape/audio_io.hpp"
#include "covershape/errors.hpp"
#include "covershape/feature_cache.hpp"
#include "covershape/matrix_io.hpp"
#include "covershape/pipeline.hpp"
#include "covershape/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace covershape;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string trimmed(const std::string& s) {
    const auto from = s.find_first_not_of(" \t\r");
    if (from == std::string::npos) return "";
    const auto to = s.find_last_not_of(" \t\r");
    return s.substr(from, to - from + 1);
}

std::vector<double> parse_bias_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trimmed(item);
        if (item.empty()) continue;
        try {
            size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw UsageError("invalid tempo bias: '" + item + "'");
        }
    }
    if (out.empty()) throw UsageError("empty tempo bias list");
    return out;
}

// Shared pipeline flags, attached to each subcommand.
struct Shared {
    double kappa = 0.1;
    int beats = 14;
    int dim = 200;
    std::string biases;
    int sample_rate = 22050;
    std::string config_path;
    int jobs = 1;
    std::string cache_dir;

    CLI::Option* o_kappa = nullptr;
    CLI::Option* o_beats = nullptr;
    CLI::Option* o_dim = nullptr;
    CLI::Option* o_biases = nullptr;
    CLI::Option* o_rate = nullptr;

    void attach(CLI::App* cmd) {
        o_kappa = cmd->add_option("--kappa", kappa, "mutual nearest neighbor fraction");
        o_beats = cmd->add_option("--beats", beats, "beat intervals per block");
        o_dim = cmd->add_option("--dim", dim, "resized SSM side length");
        o_biases = cmd->add_option("--biases", biases,
                                   "comma separated tempo biases in BPM");
        o_rate = cmd->add_option("--sample-rate", sample_rate,
                                 "processing sample rate in Hz");
        cmd->add_option("--config", config_path, "key = value config file");
        cmd->add_option("--jobs", jobs, "worker threads");
        cmd->add_option("--cache-dir", cache_dir, "feature cache directory");
    }

    PipelineConfig resolve() const {
        PipelineConfig cfg;
        if (!config_path.empty()) apply_config_file(&cfg);
        if (o_kappa->count()) cfg.kappa = kappa;
        if (o_beats->count()) cfg.beats_per_block = beats;
        if (o_dim->count()) cfg.ssm_dim = dim;
        if (o_biases->count()) cfg.tempo_biases = parse_bias_list(biases);
        if (o_rate->count()) cfg.sample_rate = sample_rate;
        if (!(cfg.kappa > 0.0 && cfg.kappa <= 1.0)) throw UsageError("kappa must be in (0, 1]");
        if (cfg.beats_per_block < 1) throw UsageError("beats must be at least 1");
        if (cfg.ssm_dim < 2) throw UsageError("dim must be at least 2");
        if (cfg.sample_rate < 1) throw UsageError("sample-rate must be positive");
        if (cfg.tempo_biases.empty()) throw UsageError("empty tempo bias list");
        return cfg;
    }

    std::optional<FeatureCache> open_cache() const {
        if (cache_dir.empty()) return std::nullopt;
        return FeatureCache(cache_dir);
    }

  private:
    void apply_config_file(PipelineConfig* cfg) const {
        std::ifstream in(config_path);
        if (!in) throw IoError("cannot open config file: " + config_path);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (const auto hash = line.find('#'); hash != std::string::npos)
                line.erase(hash);
            line = trimmed(line);
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw UsageError(config_path + ":" + std::to_string(lineno) +
                                 ": expected key = value");
            const std::string key = trimmed(line.substr(0, eq));
            std::string value = trimmed(line.substr(eq + 1));
            try {
                if (key == "kappa") {
                    cfg->kappa = std::stod(value);
                } else if (key == "beats_per_block") {
                    cfg->beats_per_block = std::stoi(value);
                } else if (key == "ssm_dim") {
                    cfg->ssm_dim = std::stoi(value);
                } else if (key == "sample_rate") {
                    cfg->sample_rate = std::stoi(value);
                } else if (key == "tempo_biases") {
                    if (value.size() >= 2 && value.front() == '[' && value.back() == ']')
                        value = value.substr(1, value.size() - 2);
                    cfg->tempo_biases = parse_bias_list(value);
                } else {
                    throw UsageError(config_path + ":" + std::to_string(lineno) +
                                     ": unknown key '" + key + "'");
                }
            } catch (const UsageError&) {
                throw;
            } catch (const std::exception&) {
                throw UsageError(config_path + ":" + std::to_string(lineno) +
                                 ": invalid value for '" + key + "'");
            }
        }
    }
};

json config_echo(const PipelineConfig& cfg) {
    return json{{"kappa", cfg.kappa},
                {"beats", cfg.beats_per_block},
                {"dim", cfg.ssm_dim},
                {"biases", cfg.tempo_biases},
                {"sample_rate", cfg.sample_rate}};
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << text;
    if (!out) throw IoError("write failed: " + path.string());
}

std::vector<std::string> load_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest: " + path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ManifestError("invalid manifest " + path.string() + ": " + e.what());
    }
    if (!doc.is_object() || !doc.contains("songs") || !doc["songs"].is_array())
        throw ManifestError("manifest " + path.string() + " lacks a songs array");
    std::vector<std::string> out;
    const fs::path base = path.parent_path();
    for (const auto& entry : doc["songs"]) {
        if (!entry.is_string())
            throw ManifestError("manifest " + path.string() + " has a non-string entry");
        fs::path p = entry.get<std::string>();
        if (p.is_relative()) p = base / p;
        out.push_back(p.string());
    }
    if (out.empty()) throw ManifestError("manifest " + path.string() + " is empty");
    return out;
}

std::vector<int> load_truth(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open truth file: " + path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ManifestError("invalid truth file " + path.string() + ": " + e.what());
    }
    if (!doc.is_array())
        throw ManifestError("truth file " + path.string() + " is not an array");
    std::vector<int> out;
    for (const auto& entry : doc) {
        if (!entry.is_number_integer())
            throw ManifestError("truth file " + path.string() + " has a non-integer entry");
        out.push_back(entry.get<int>());
    }
    return out;
}

std::vector<AudioSignal> load_songs(const std::vector<std::string>& paths) {
    std::vector<AudioSignal> out;
    out.reserve(paths.size());
    for (const auto& p : paths) out.push_back(load_wav(p));
    return out;
}

json combo_json(const ComboScore& combo) {
    json j{{"bias_a", combo.bias_a}, {"bias_b", combo.bias_b}, {"usable", combo.usable}};
    if (combo.usable) {
        j["score"] = combo.score;
        j["normalized"] = combo.normalized;
        j["blocks_a"] = combo.blocks_a;
        j["blocks_b"] = combo.blocks_b;
    }
    return j;
}

int cmd_score(const std::string& path_a, const std::string& path_b, const Shared& shared) {
    const PipelineConfig cfg = shared.resolve();
    auto cache = shared.open_cache();
    FeatureCache* cache_ptr = cache ? &*cache : nullptr;

    const auto features = extract_many({load_wav(path_a), load_wav(path_b)}, cfg,
                                       cache_ptr, shared.jobs);
    const PairScore details = score_pair_details(features[0], features[1], cfg);

    json combos = json::array();
    for (const auto& combo : details.combos) combos.push_back(combo_json(combo));
    const ComboScore& best = details.combos[size_t(details.best_combo)];
    const json out{{"score_ab", details.score},
                   {"normalized", best.normalized},
                   {"best", {{"bias_a", best.bias_a}, {"bias_b", best.bias_b}}},
                   {"song_a", path_a},
                   {"song_b", path_b},
                   {"combos", combos},
                   {"config", config_echo(cfg)}};
    std::printf("%s\n", out.dump(2).c_str());
    return 0;
}

int cmd_benchmark(const std::string& list_a, const std::string& list_b,
                  const std::string& truth_path, const std::string& out_dir, bool sweep,
                  const Shared& shared) {
    const PipelineConfig cfg = shared.resolve();
    auto cache = shared.open_cache();
    FeatureCache* cache_ptr = cache ? &*cache : nullptr;

    const auto paths_a = load_manifest(list_a);
    const auto paths_b = load_manifest(list_b);
    const auto truth = load_truth(truth_path);
    const auto songs_a = load_songs(paths_a);
    const auto songs_b = load_songs(paths_b);

    fs::create_directories(out_dir);

    if (sweep) {
        const SweepGrid grid;
        const SweepResult result =
            sweep_benchmark(songs_a, songs_b, truth, cfg, grid, cache_ptr, shared.jobs);
        json cells = json::array();
        for (const auto& cell : result.cells)
            cells.push_back(json{{"kappa", cell.kappa},
                                 {"beats", cell.block_size},
                                 {"dim", cell.ssm_dim},
                                 {"correct", cell.correct},
                                 {"total", cell.total}});
        write_text(fs::path(out_dir) / "sweep.json",
                   json{{"cells", cells}}.dump(2) + "\n");
        std::printf("%s", format_sweep_table(result, grid).c_str());
        return 0;
    }

    const auto feats_a = extract_many(songs_a, cfg, cache_ptr, shared.jobs);
    const auto feats_b = extract_many(songs_b, cfg, cache_ptr, shared.jobs);
    const BenchmarkReport report = benchmark(feats_a, feats_b, truth, cfg, shared.jobs);

    save_csv((fs::path(out_dir) / "scores.csv").string(), report.scores);
    json queries = json::array();
    for (const auto& q : report.queries)
        queries.push_back(json{{"query", q.query},
                               {"predicted", q.predicted},
                               {"truth", q.truth},
                               {"rank", q.rank},
                               {"score", q.score},
                               {"tie", q.tie}});
    const json rep{{"correct", report.correct},
                   {"total", int(report.queries.size())},
                   {"mean_rank", report.mean_rank},
                   {"queries", queries},
                   {"config", config_echo(cfg)}};
    write_text(fs::path(out_dir) / "report.json", rep.dump(2) + "\n");
    std::printf("%d/%d\n", report.correct, int(report.queries.size()));
    return 0;
}

int cmd_synth_corpus(const std::string& out_dir, int count, unsigned seed,
                     const Shared& shared) {
    if (count < 2) throw UsageError("count must be at least 2");
    const PipelineConfig cfg = shared.resolve();
    fs::create_directories(out_dir);

    const auto specs = example_corpus(count, seed);
    const CoverTransform transform = default_cover_transform();

    std::vector<int> perm(static_cast<size_t>(count));
    for (int i = 0; i < count; ++i) perm[size_t(i)] = i;
    std::mt19937 rng(seed ^ 0x5bf03635u);
    std::shuffle(perm.begin(), perm.end(), rng);

    std::vector<std::string> names_b(static_cast<size_t>(count));
    json spec_entries = json::array();
    for (int i = 0; i < count; ++i) {
        char name_a[32], name_b[32];
        std::snprintf(name_a, sizeof name_a, "a_%02d.wav", i);
        std::snprintf(name_b, sizeof name_b, "b_%02d.wav", perm[size_t(i)]);
        const SongSpec cover = make_cover(specs[size_t(i)], transform);
        save_wav((fs::path(out_dir) / name_a).string(),
                 render_song(specs[size_t(i)], cfg.sample_rate, seed + 2654435761u * unsigned(i)));
        save_wav((fs::path(out_dir) / name_b).string(),
                 render_song(cover, cfg.sample_rate, seed + 2654435761u * unsigned(i) + 0x9e3779b9u));
        names_b[size_t(perm[size_t(i)])] = name_b;
        spec_entries.push_back(json{{"name", specs[size_t(i)].name},
                                    {"wav_a", name_a},
                                    {"wav_b", name_b},
                                    {"truth", perm[size_t(i)]},
                                    {"spec", json::parse(spec_to_json_string(specs[size_t(i)]))},
                                    {"cover_spec", json::parse(spec_to_json_string(cover))}});
    }

    json songs_a = json::array();
    for (int i = 0; i < count; ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "a_%02d.wav", i);
        songs_a.push_back(std::string(name));
    }
    json songs_b = json::array();
    for (const auto& name : names_b) songs_b.push_back(name);
    json truth = json::array();
    for (int i = 0; i < count; ++i) truth.push_back(perm[size_t(i)]);

    write_text(fs::path(out_dir) / "songs_a.json", json{{"songs", songs_a}}.dump(2) + "\n");
    write_text(fs::path(out_dir) / "songs_b.json", json{{"songs", songs_b}}.dump(2) + "\n");
    write_text(fs::path(out_dir) / "truth.json", truth.dump() + "\n");
    write_text(fs::path(out_dir) / "specs.json", json{{"songs", spec_entries}}.dump(2) + "\n");

    const json out{{"dir", out_dir},
                   {"count", count},
                   {"seed", seed},
                   {"manifests", {{"songs_a", "songs_a.json"},
                                  {"songs_b", "songs_b.json"},
                                  {"truth", "truth.json"},
                                  {"specs", "specs.json"}}}};
    std::printf("%s\n", out.dump(2).c_str());
    return 0;
}

// First bias whose beat grid yields at least one block.
size_t pick_bias(const std::vector<BeatTrack>& tracks, const PipelineConfig& cfg,
                 const CLI::Option* bias_opt, double bias_flag) {
    if (bias_opt->count()) {
        for (size_t i = 0; i < cfg.tempo_biases.size(); ++i)
            if (cfg.tempo_biases[i] == bias_flag) return i;
        throw UsageError("--bias must match one of the configured tempo biases");
    }
    for (size_t i = 0; i < tracks.size(); ++i)
        if (tracks[i].intervals() >= cfg.beats_per_block) return i;
    throw DegenerateInput("song too short");
}

int cmd_dump(const std::string& what, const std::vector<std::string>& song_paths,
             const std::string& out_dir, int block_index, const CLI::Option* bias_opt,
             double bias_flag, const Shared& shared) {
    const PipelineConfig cfg = shared.resolve();
    fs::create_directories(out_dir);

    const bool needs_two = (what == "csm" || what == "sw");
    if (needs_two && song_paths.size() != 2)
        throw UsageError("dump " + what + " needs two songs");
    if (!needs_two && song_paths.size() != 1)
        throw UsageError("dump " + what + " needs one song");

    if (what == "beats" || what == "pca" || what == "ssm") {
        AudioSignal signal = load_wav(song_paths[0]);
        if (signal.sample_rate != cfg.sample_rate) signal = resample(signal, cfg.sample_rate);
        const OnsetEnvelope env = onset_envelope(signal, cfg.tracker.onset);
        std::vector<BeatTrack> tracks;
        for (double bias : cfg.tempo_biases)
            tracks.push_back(track_at_bias(env, bias, cfg.tracker.tempo, cfg.tracker.track));

        if (what == "beats") {
            std::ostringstream csv;
            char buf[64];
            for (size_t b = 0; b < tracks.size(); ++b)
                for (size_t k = 0; k < tracks[b].beat_times.size(); ++k) {
                    std::snprintf(buf, sizeof buf, "%g,%zu,%.17g\n", cfg.tempo_biases[b],
                                  k, tracks[b].beat_times[k]);
                    csv << buf;
                }
            write_text(fs::path(out_dir) / "beats.csv", csv.str());
            return 0;
        }

        const size_t bias = pick_bias(tracks, cfg, bias_opt, bias_flag);
        if (tracks[bias].intervals() < cfg.beats_per_block)
            throw DegenerateInput("song too short");
        const auto blocks = make_blocks(tracks[bias], cfg.beats_per_block, cfg.sample_rate);
        if (block_index < 0 || size_t(block_index) >= blocks.size())
            throw UsageError("--block out of range, song has " +
                             std::to_string(blocks.size()) + " blocks");
        const MfccExtractor mfcc(cfg.sample_rate, cfg.mfcc);
        const auto cloud = normalize_point_cloud(block_point_cloud(
            signal, blocks[size_t(block_index)], tracks[bias].mean_period, mfcc));

        char name[48];
        if (what == "pca") {
            const Eigen::MatrixXd projected = pca3_project(cloud);
            Eigen::MatrixXd rows(projected.rows(), 4);
            for (Eigen::Index i = 0; i < projected.rows(); ++i)
                rows(i, 0) = double(i);
            rows.rightCols(3) = projected;
            std::snprintf(name, sizeof name, "pca_block%d.csv", block_index);
            save_csv((fs::path(out_dir) / name).string(), rows);
        } else {
            std::snprintf(name, sizeof name, "ssm_block%d.pgm", block_index);
            save_pgm((fs::path(out_dir) / name).string(),
                     resized_ssm_from_cloud(cloud, cfg.ssm_dim), 0.0, 2.0);
        }
        return 0;
    }

    if (needs_two) {
        auto cache = shared.open_cache();
        FeatureCache* cache_ptr = cache ? &*cache : nullptr;
        const auto features =
            extract_many(load_songs(song_paths), cfg, cache_ptr, shared.jobs);
        const PairScore details = score_pair_details(features[0], features[1], cfg);
        const size_t n_b = features[1].biases.size();
        const size_t bi = size_t(details.best_combo) / n_b;
        const size_t bj = size_t(details.best_combo) % n_b;
        const Eigen::MatrixXd csm = compute_csm(features[0].biases[bi]->ssms,
                                                features[1].biases[bj]->ssms);

        if (what == "csm") {
            const double hi = csm.maxCoeff();
            save_pgm((fs::path(out_dir) / "csm.pgm").string(), csm, 0.0,
                     hi > 0.0 ? hi : 1.0);
            save_csv((fs::path(out_dir) / "csm.csv").string(), csm);
            return 0;
        }

        Eigen::MatrixXd table;
        const AlignmentResult sw = smith_waterman_constrained(
            binarize_mutual_knn(csm, cfg.kappa), false, &table);
        const double hi = table.maxCoeff();
        save_pgm((fs::path(out_dir) / "sw.pgm").string(), table, 0.0,
                 hi > 0.0 ? hi : 1.0);
        save_csv((fs::path(out_dir) / "sw.csv").string(), table);
        std::printf("score: %.17g\n", sw.score);
        return 0;
    }

    throw UsageError("unknown dump target '" + what + "'");
}

int run(int argc, char** argv) {
    CLI::App app{"cover song similarity scoring via beat-synchronous shape matching"};
    app.require_subcommand(1);

    auto* score = app.add_subcommand("score", "score two songs");
    std::string score_a, score_b;
    score->add_option("song_a", score_a, "WAV file")->required();
    score->add_option("song_b", score_b, "WAV file")->required();
    Shared score_shared;
    score_shared.attach(score);

    auto* bench = app.add_subcommand("benchmark", "rank covers across two song sets");
    std::string bench_a, bench_b, bench_truth, bench_out = ".";
    bool bench_sweep = false;
    bench->add_option("list_a", bench_a, "manifest JSON for queries")->required();
    bench->add_option("list_b", bench_b, "manifest JSON for candidates")->required();
    bench->add_option("truth", bench_truth, "JSON array mapping queries to candidates")
        ->required();
    bench->add_option("--out", bench_out, "output directory");
    bench->add_flag("--sweep", bench_sweep, "run the full parameter grid");
    Shared bench_shared;
    bench_shared.attach(bench);

    auto* synth = app.add_subcommand("synth-corpus", "render a synthetic cover corpus");
    std::string synth_out = ".";
    int synth_count = 10;
    unsigned synth_seed = 42;
    synth->add_option("--out", synth_out, "output directory");
    synth->add_option("--count", synth_count, "number of songs");
    synth->add_option("--seed", synth_seed, "corpus seed");
    Shared synth_shared;
    synth_shared.attach(synth);

    auto* dump = app.add_subcommand("dump", "write diagnostic files");
    std::string dump_what;
    std::vector<std::string> dump_songs;
    std::string dump_out = ".";
    int dump_block = 0;
    double dump_bias = 0.0;
    dump->add_option("what", dump_what, "beats|pca|ssm|csm|sw")->required();
    dump->add_option("songs", dump_songs, "one or two WAV files")->required();
    dump->add_option("--out", dump_out, "output directory");
    dump->add_option("--block", dump_block, "block index for pca/ssm");
    auto* dump_bias_opt = dump->add_option("--bias", dump_bias, "tempo bias to use");
    Shared dump_shared;
    dump_shared.attach(dump);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    if (app.got_subcommand(score)) return cmd_score(score_a, score_b, score_shared);
    if (app.got_subcommand(bench))
        return cmd_benchmark(bench_a, bench_b, bench_truth, bench_out, bench_sweep,
                             bench_shared);
    if (app.got_subcommand(synth))
        return cmd_synth_corpus(synth_out, synth_count, synth_seed, synth_shared);
    if (app.got_subcommand(dump)) {
        static const std::vector<std::string> known{"beats", "pca", "ssm", "csm", "sw"};
        if (std::find(known.begin(), known.end(), dump_what) == known.end())
            throw UsageError("unknown dump target '" + dump_what + "'");
        return cmd_dump(dump_what, dump_songs, dump_out, dump_block, dump_bias_opt,
                        dump_bias, dump_shared);
    }
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const UsageError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const ManifestError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 4;
    } catch (const DegenerateInput& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const IoError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
