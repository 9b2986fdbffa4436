// Acceptance suite: one PASS/FAIL line per criterion, exit code is the
// number of failures.

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <random>
#include <regex>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "covershape/align.hpp"
#include "covershape/beat.hpp"
#include "covershape/embed.hpp"
#include "covershape/feature_cache.hpp"
#include "covershape/pipeline.hpp"
#include "covershape/shape.hpp"
#include "covershape/simmatch.hpp"
#include "covershape/synth.hpp"
#include "helpers.hpp"

using namespace covershape;
namespace fs = std::filesystem;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
    std::printf("criterion %d: %s - %s\n", criterion, pass ? "PASS" : "FAIL",
                detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

double elapsed_s(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* format, ...) {
    char buf[512];
    va_list args;
    va_start(args, format);
    std::vsnprintf(buf, sizeof buf, format, args);
    va_end(args);
    return buf;
}

int run_cli(const std::string& args, const fs::path& stdout_file) {
    const std::string cmd = std::string("\"") + COVERSHAPE_CLI_PATH + "\" " + args +
                            " > \"" + stdout_file.string() + "\" 2> \"" +
                            stdout_file.string() + ".err\"";
    const int rc = std::system(cmd.c_str());
    return rc == -1 ? -1 : WEXITSTATUS(rc);
}

int count_substr(const std::string& text, const std::string& needle) {
    int n = 0;
    for (size_t pos = text.find(needle); pos != std::string::npos;
         pos = text.find(needle, pos + needle.size()))
        ++n;
    return n;
}

struct Context {
    fs::path root, corpus, cache;
    int jobs = 1;
    PipelineConfig cfg;
    bool corpus_ok = false;
    std::vector<SongFeatures> songs;  // the 10 originals, then the 10 covers
    std::string feature_error = "features not loaded";
};

// ---- criterion 1: full parameter sweep, Table-style grid, under 10 min

void criterion1(Context* ctx) {
    const auto start = Clock::now();

    int rc = run_cli("synth-corpus --out \"" + ctx->corpus.string() +
                         "\" --count 10 --seed 42",
                     ctx->root / "synth.out");
    if (rc != 0) {
        report(1, false, fmt("synth-corpus exited with %d", rc));
        return;
    }
    ctx->corpus_ok = true;

    const fs::path table_file = ctx->root / "sweep.out";
    rc = run_cli("benchmark \"" + (ctx->corpus / "songs_a.json").string() + "\" \"" +
                     (ctx->corpus / "songs_b.json").string() + "\" \"" +
                     (ctx->corpus / "truth.json").string() + "\" --sweep --out \"" +
                     (ctx->root / "sweep").string() + "\" --cache-dir \"" +
                     ctx->cache.string() + "\" --jobs " + std::to_string(ctx->jobs),
                 table_file);
    const double took = elapsed_s(start);
    if (rc != 0) {
        report(1, false, fmt("sweep benchmark exited with %d", rc));
        return;
    }

    const std::string table = testutil::slurp(table_file);
    const int kappa_sections = count_substr(table, "Kappa = ");
    const int b_columns = count_substr(table, "B = ");
    const int d_rows = count_substr(table, "d = ");
    int cells = 0;
    const std::regex cell_re("[0-9]+/[0-9]+");
    for (auto it = std::sregex_iterator(table.begin(), table.end(), cell_re);
         it != std::sregex_iterator(); ++it)
        ++cells;

    const bool layout = kappa_sections == 3 && b_columns == 12 && d_rows == 9 &&
                        cells == 36;
    report(1, layout && took < 600.0,
           fmt("%d kappa sections, %d column labels, %d rows, %d cells, %.1f s "
               "(limit 600)",
               kappa_sections, b_columns, d_rows, cells, took));
}

// ---- criterion 2: resized SSMs are isometry and scale invariant

void criterion2() {
    const auto start = Clock::now();
    std::mt19937 rng(1002);
    std::normal_distribution<double> gauss;
    std::uniform_real_distribution<double> scale_dist(0.1, 10.0);

    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const TimeOrderedPointCloud cloud = testutil::random_cloud(rng, 50, 20);
        const Eigen::MatrixXd base =
            resized_ssm_from_cloud(normalize_point_cloud(cloud), 200);

        const Eigen::MatrixXd q = testutil::random_orthogonal(rng, 20);
        Eigen::RowVectorXd shift(20);
        for (int j = 0; j < 20; ++j) shift[j] = 5.0 * gauss(rng);
        TimeOrderedPointCloud moved = cloud;
        moved.points = (cloud.points * q.transpose()).rowwise() + shift;
        worst = std::max(worst,
                         (resized_ssm_from_cloud(normalize_point_cloud(moved), 200) - base)
                             .cwiseAbs()
                             .maxCoeff());

        TimeOrderedPointCloud scaled = cloud;
        scaled.points *= scale_dist(rng);
        worst = std::max(worst,
                         (resized_ssm_from_cloud(normalize_point_cloud(scaled), 200) - base)
                             .cwiseAbs()
                             .maxCoeff());
    }

    const double took = elapsed_s(start);
    report(2, worst < 1e-6 && took < 10.0,
           fmt("worst deviation %.3g over 100 clouds, %.1f s (limits 1e-6, 10 s)", worst,
               took));
}

// ---- criterion 3: alignment table equals a memoized recurrence

class RecurrenceOracle {
 public:
    explicit RecurrenceOracle(const BitMatrix& bits) : bits_(bits) {}

    double score_at(Eigen::Index i, Eigen::Index j) {
        if (i <= 0 || j <= 0) return 0.0;
        const auto key = std::make_pair(i, j);
        const auto it = memo_.find(key);
        if (it != memo_.end()) return it->second;
        const int b = bit(i - 1, j - 1);
        const double match = b ? 1.0 : -1.0;
        const double c1 = score_at(i - 1, j - 1) + match + gap(bit(i - 2, j - 2), b);
        const double c2 = score_at(i - 2, j - 1) + match + gap(bit(i - 3, j - 2), b);
        const double c3 = score_at(i - 1, j - 2) + match + gap(bit(i - 2, j - 3), b);
        const double value = std::max({0.0, c1, c2, c3});
        memo_.emplace(key, value);
        return value;
    }

 private:
    int bit(Eigen::Index i, Eigen::Index j) const {
        return (i >= 0 && j >= 0 && i < bits_.rows() && j < bits_.cols()) ? int(bits_(i, j))
                                                                          : 0;
    }
    static double gap(int prev, int cur) { return cur ? 0.0 : (prev ? -0.5 : -0.7); }

    const BitMatrix& bits_;
    std::map<std::pair<Eigen::Index, Eigen::Index>, double> memo_;
};

void criterion3() {
    const auto start = Clock::now();
    std::mt19937 rng(1003);
    std::uniform_int_distribution<int> dim(1, 8);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    int mismatches = 0;
    for (int trial = 0; trial < 10000; ++trial) {
        const int n = dim(rng);
        const int m = dim(rng);
        const double density = unit(rng);
        BinaryCsm csm;
        csm.kappa = 0.1;
        csm.bits.resize(n, m);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < m; ++j)
                csm.bits(i, j) = std::uint8_t(unit(rng) < density ? 1 : 0);

        Eigen::MatrixXd table;
        smith_waterman_constrained(csm, false, &table);

        RecurrenceOracle oracle(csm.bits);
        bool equal = true;
        for (int i = 0; i <= n && equal; ++i)
            for (int j = 0; j <= m && equal; ++j)
                if (table(i, j) != oracle.score_at(i, j)) equal = false;
        if (!equal) ++mismatches;
    }

    const double took = elapsed_s(start);
    report(3, mismatches == 0 && took < 30.0,
           fmt("%d table mismatches in 10000 matrices, %.1f s (limit 30)", mismatches,
               took));
}

// ---- criterion 4: pair scores are exactly symmetric

void load_features(Context* ctx) {
    if (!ctx->corpus_ok) {
        ctx->feature_error = "corpus unavailable";
        return;
    }
    try {
        std::vector<AudioSignal> wavs;
        for (const char* prefix : {"a", "b"})
            for (int i = 0; i < 10; ++i) {
                char name[16];
                std::snprintf(name, sizeof name, "%s_%02d.wav", prefix, i);
                wavs.push_back(load_wav((ctx->corpus / name).string()));
            }
        FeatureCache cache(ctx->cache);
        ctx->songs = extract_many(wavs, ctx->cfg, &cache, ctx->jobs);
        ctx->feature_error.clear();
    } catch (const std::exception& e) {
        ctx->feature_error = e.what();
    }
}

void criterion4(const Context& ctx) {
    if (!ctx.feature_error.empty()) {
        report(4, false, ctx.feature_error);
        return;
    }
    std::mt19937 rng(1004);
    std::uniform_int_distribution<size_t> pick(0, ctx.songs.size() - 1);

    int symmetric = 0;
    for (int trial = 0; trial < 20; ++trial) {
        const SongFeatures& a = ctx.songs[pick(rng)];
        const SongFeatures& b = ctx.songs[pick(rng)];
        if (score_pair(a, b, ctx.cfg) == score_pair(b, a, ctx.cfg)) ++symmetric;
    }
    report(4, symmetric == 20, fmt("%d/20 pairs exactly symmetric", symmetric));
}

// ---- criterion 5: binarization is rank-based and transpose-dual

void criterion5() {
    const auto start = Clock::now();
    std::mt19937 rng(1005);
    std::uniform_int_distribution<int> dim(1, 40);
    std::uniform_int_distribution<int> level(0, 4095);

    int violations = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = dim(rng);
        const int m = dim(rng);
        Eigen::MatrixXd csm(n, m);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < m; ++j) csm(i, j) = level(rng) / 64.0;

        BitMatrix prev;
        for (const double kappa : {0.05, 0.2, 0.6}) {
            const BinaryCsm bin = binarize_mutual_knn(csm, kappa);
            if (prev.size() > 0 &&
                !((prev.cast<int>() - bin.bits.cast<int>()).array() <= 0).all())
                ++violations;
            prev = bin.bits;

            const BinaryCsm dual = binarize_mutual_knn(csm.transpose(), kappa);
            if (!(dual.bits.transpose().array() == bin.bits.array()).all()) ++violations;

            const BinaryCsm shifted =
                binarize_mutual_knn((csm.array() + 3.7).matrix(), kappa);
            if (!(shifted.bits.array() == bin.bits.array()).all()) ++violations;
        }
    }

    const double took = elapsed_s(start);
    report(5, violations == 0 && took < 10.0,
           fmt("%d violations in 1000 matrices, %.1f s (limit 10)", violations, took));
}

// ---- criterion 6: beat tracking recovers click grids within 15 ms

void criterion6() {
    const double biases[] = {60.0, 120.0, 180.0};
    double worst_fraction = 1.0;
    double worst_dev = 0.0;
    bool enough = true;

    for (const double bpm : {60.0, 90.0, 120.0, 150.0, 180.0}) {
        const AudioSignal clicks = synth_click_track(bpm, 20.0, 22050);
        const OnsetEnvelope env = onset_envelope(clicks);

        double bias = biases[0];
        for (const double b : biases)
            if (std::abs(std::log2(b / bpm)) < std::abs(std::log2(bias / bpm))) bias = b;

        const BeatTrack track = track_at_bias(env, bias);
        const double period = 60.0 / bpm;

        int interior = 0, hits = 0;
        for (const double t : track.beat_times) {
            if (t < 1.0 || t > 19.0) continue;
            ++interior;
            const double dev = std::abs(t - std::round(t / period) * period);
            if (dev <= 0.015) ++hits;
            worst_dev = std::max(worst_dev, dev);
        }
        if (interior < 10) enough = false;
        if (interior > 0)
            worst_fraction = std::min(worst_fraction, double(hits) / double(interior));
    }

    report(6, enough && worst_fraction >= 0.95,
           fmt("worst on-grid fraction %.3f, worst interior deviation %.1f ms "
               "(needs 0.95 within 15 ms)",
               worst_fraction, worst_dev * 1000.0));
}

// ---- criterion 7: true covers rank first on the synthetic corpus

void criterion7(const Context& ctx) {
    if (!ctx.corpus_ok) {
        report(7, false, "corpus unavailable");
        return;
    }
    const fs::path out = ctx.root / "bench";
    const int rc = run_cli("benchmark \"" + (ctx.corpus / "songs_a.json").string() +
                               "\" \"" + (ctx.corpus / "songs_b.json").string() + "\" \"" +
                               (ctx.corpus / "truth.json").string() + "\" --out \"" +
                               out.string() + "\" --cache-dir \"" + ctx.cache.string() +
                               "\" --jobs " + std::to_string(ctx.jobs),
                           ctx.root / "bench.out");
    if (rc != 0) {
        report(7, false, fmt("benchmark exited with %d", rc));
        return;
    }

    try {
        const json rep = json::parse(testutil::slurp(out / "report.json"));
        const int correct = rep.at("correct").get<int>();
        const int total = rep.at("total").get<int>();
        const double mean_rank = rep.at("mean_rank").get<double>();
        report(7, correct >= 7 && total == 10 && mean_rank <= 2.0,
               fmt("%d/%d correct, mean rank %.2f (needs >= 7 and <= 2.0)", correct,
                   total, mean_rank));
    } catch (const std::exception& e) {
        report(7, false, std::string("report unreadable: ") + e.what());
    }
}

// ---- criterion 8: gain-invariant cepstra, solid self-scores

void criterion8(const Context& ctx) {
    std::mt19937 rng(1008);
    std::normal_distribution<double> gauss;
    std::uniform_real_distribution<double> gain_dist(0.1, 10.0);
    const MfccExtractor mfcc(22050);

    double worst_coeff = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        Eigen::VectorXd window(2048);
        for (int i = 0; i < 2048; ++i) window[i] = 0.3 * gauss(rng);
        const Eigen::VectorXd base = mfcc.compute(window);
        const Eigen::VectorXd scaled = mfcc.compute(window * gain_dist(rng));
        worst_coeff =
            std::max(worst_coeff, (scaled.tail(19) - base.tail(19)).cwiseAbs().maxCoeff());
    }
    const bool gains_ok = worst_coeff < 1e-9;

    if (!ctx.feature_error.empty()) {
        report(8, false,
               fmt("gain deviation %.3g; self-score check skipped: %s", worst_coeff,
                   ctx.feature_error.c_str()));
        return;
    }

    int strong = 0;
    double worst_ratio = 1e300;
    for (const SongFeatures& song : ctx.songs) {
        int blocks = 0;
        for (const auto& bias : song.biases)
            if (bias && bias->usable) blocks = std::max(blocks, int(bias->ssms.size()));
        const double self = score_pair(song, song, ctx.cfg);
        const double ratio = blocks > 0 ? self / double(blocks) : 0.0;
        worst_ratio = std::min(worst_ratio, ratio);
        if (blocks > 0 && self >= 0.9 * double(blocks)) ++strong;
    }

    report(8, gains_ok && strong == int(ctx.songs.size()),
           fmt("gain deviation %.3g (limit 1e-9); %d/%d songs with self-score ratio "
               ">= 0.9 (worst %.3f)",
               worst_coeff, strong, int(ctx.songs.size()), worst_ratio));
}

}  // namespace

int main() {
    Context ctx;
    ctx.root = testutil::fresh_dir("acceptance");
    ctx.corpus = ctx.root / "corpus";
    ctx.cache = ctx.root / "cache";
    fs::create_directories(ctx.corpus);
    fs::create_directories(ctx.cache);
    ctx.jobs = std::max(1u, std::thread::hardware_concurrency());

    criterion1(&ctx);
    criterion2();
    criterion3();
    load_features(&ctx);
    criterion4(ctx);
    criterion5();
    criterion6();
    criterion7(ctx);
    criterion8(ctx);

    fs::remove_all(ctx.root);
    return g_failures;
}
