#pragma once

#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "covershape/align.hpp"
#include "covershape/beat.hpp"
#include "covershape/embed.hpp"
#include "covershape/shape.hpp"
#include "covershape/simmatch.hpp"

namespace covershape {

class FeatureCache;

struct TrackerConfig {
    OnsetConfig onset;
    TempoConfig tempo;
    TrackConfig track;
};

struct PipelineConfig {
    double kappa = 0.1;
    int beats_per_block = 14;
    int ssm_dim = 200;
    std::vector<double> tempo_biases = {60.0, 120.0, 180.0};
    MfccConfig mfcc;
    TrackerConfig tracker;
    int sample_rate = 22050;
};

/// Beat track and per-block SSM images for one tempo-bias level.
struct BiasFeatures {
    BeatTrack track;
    std::vector<Eigen::MatrixXd> ssms;
    std::vector<int> skipped_blocks;  // degenerate block indices
    bool usable = false;
    std::string reason;  // why unusable, empty otherwise
};

/// One entry per configured bias. Biases whose beat grids coincide share
/// the same BiasFeatures object.
struct SongFeatures {
    std::vector<std::shared_ptr<const BiasFeatures>> biases;
};

/// Full per-song extraction: track beats per bias, build blocks, embed,
/// normalize, SSM, resize. Throws DegenerateInput("song too short") when
/// no bias is usable.
SongFeatures extract_features(const AudioSignal& signal, const PipelineConfig& cfg,
                              FeatureCache* cache = nullptr);

/// extract_features over every (beats_per_block, ssm_dim) combination,
/// sharing beat tracks, window MFCCs and point clouds across the grid.
/// Unusable combinations are returned rather than thrown.
std::map<std::pair<int, int>, SongFeatures> extract_features_grid(
    const AudioSignal& signal, const PipelineConfig& base,
    const std::vector<int>& block_sizes, const std::vector<int>& ssm_dims,
    FeatureCache* cache = nullptr);

/// Extraction for a list of songs, optionally across jobs worker threads.
std::vector<SongFeatures> extract_many(const std::vector<AudioSignal>& songs,
                                       const PipelineConfig& cfg,
                                       FeatureCache* cache = nullptr, int jobs = 1);

struct ComboScore {
    double bias_a = 0.0;
    double bias_b = 0.0;
    double score = 0.0;
    double normalized = 0.0;
    Eigen::Index blocks_a = 0;
    Eigen::Index blocks_b = 0;
    bool usable = false;
};

struct PairScore {
    double score = 0.0;
    int best_combo = -1;
    std::vector<ComboScore> combos;  // one per bias pair
};

/// CSM -> binarize -> constrained Smith-Waterman for every usable bias
/// combination; the pair score is the maximum. Exactly symmetric in its
/// arguments. Throws DegenerateInput when no bias pair is usable.
PairScore score_pair_details(const SongFeatures& a, const SongFeatures& b,
                             const PipelineConfig& cfg);
double score_pair(const SongFeatures& a, const SongFeatures& b, const PipelineConfig& cfg);

struct BenchmarkQuery {
    int query = 0;
    int predicted = -1;
    int truth = -1;
    int rank = 0;      // 1-based rank of the true cover
    double score = 0.0;
    bool tie = false;  // the argmax was not unique
};

struct BenchmarkReport {
    Eigen::MatrixXd scores;  // |A| x |B|
    std::vector<BenchmarkQuery> queries;
    int correct = 0;
    double mean_rank = 0.0;
};

/// Scores every (a, b) pair and ranks the true cover of each query.
/// Ties resolve to the smaller index and are flagged.
BenchmarkReport benchmark(const std::vector<SongFeatures>& set_a,
                          const std::vector<SongFeatures>& set_b,
                          const std::vector<int>& truth, const PipelineConfig& cfg,
                          int jobs = 1);

struct SweepGrid {
    std::vector<double> kappas = {0.05, 0.1, 0.15};
    std::vector<int> block_sizes = {8, 10, 12, 14};
    std::vector<int> ssm_dims = {100, 200, 300};
};

struct SweepCell {
    double kappa = 0.0;
    int block_size = 0;
    int ssm_dim = 0;
    int correct = 0;
    int total = 0;
};

struct SweepResult {
    std::vector<SweepCell> cells;  // kappa-major, then ssm_dim, then block_size
};

/// Runs the benchmark over the full parameter grid, extracting features
/// once per (song, block_size, ssm_dim) and reusing each CSM across
/// kappa values.
SweepResult sweep_benchmark(const std::vector<AudioSignal>& set_a,
                            const std::vector<AudioSignal>& set_b,
                            const std::vector<int>& truth, const PipelineConfig& base,
                            const SweepGrid& grid, FeatureCache* cache = nullptr,
                            int jobs = 1);

/// Text table of sweep results: one section per kappa, ssm_dim rows,
/// block_size columns.
std::string format_sweep_table(const SweepResult& result, const SweepGrid& grid);

}  // namespace covershape
