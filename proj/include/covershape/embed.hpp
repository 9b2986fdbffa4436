#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <unordered_map>
#include <utility>
#include <vector>

#include "covershape/audio_io.hpp"
#include "covershape/beat.hpp"
#include "covershape/dsp.hpp"

namespace covershape {

struct MfccConfig {
    int n_coeffs = 20;
    int n_mels = 40;
    double fmin = 0.0;
    double fmax = 0.0;        // 0 = Nyquist
    double log_floor = 1e-10; // power floor before log
};

/// B contiguous beat intervals of one beat track, in sample indices.
struct Block {
    int beat_start_index = 0;  // beat time opening the block
    int beat_end_index = 0;    // beat time closing it (start + B)
    std::int64_t t1 = 0;       // first sample
    std::int64_t t2 = 0;       // one past the last sample
};

/// K window points in R^n_coeffs, in temporal order.
struct TimeOrderedPointCloud {
    Eigen::MatrixXd points;  // K x n_coeffs, one window per row
    std::vector<std::pair<std::int64_t, std::int64_t>> intervals;  // [a_i, b_i)

    Eigen::Index size() const { return points.rows(); }
};

/// Single-frame MFCC of a whole window: Hann weighting, power spectrum,
/// triangular mel filterbank, floored log, orthonormal DCT-II.
class MfccExtractor {
 public:
    MfccExtractor(int sample_rate, const MfccConfig& cfg = {});

    Eigen::VectorXd compute(const Eigen::Ref<const Eigen::VectorXd>& window) const;

    const MfccConfig& config() const { return cfg_; }
    int sample_rate() const { return fs_; }

 private:
    int fs_;
    MfccConfig cfg_;
    Eigen::MatrixXd dct_;
    mutable RealFft fft_;
    mutable std::unordered_map<int, Eigen::VectorXd> hann_by_len_;
    mutable std::unordered_map<int, MelFilterbank> bank_by_nfft_;
};

/// One-shot convenience wrapper around MfccExtractor.
Eigen::VectorXd mfcc_window(const AudioSignal& window, const MfccConfig& cfg = {});

/// Cache of window MFCCs keyed by start sample. Only valid for one
/// (signal, window length) pairing, which is checked on use.
struct MfccWindowMemo {
    std::int64_t window_samples = 0;
    std::unordered_map<std::int64_t, Eigen::VectorXd> by_start;
};

/// All contiguous groups of B beat intervals: N - B + 1 blocks.
std::vector<Block> make_blocks(const BeatTrack& beats, int B, int sample_rate);

/// Sliding-window point cloud of a block: windows of length W advance by
/// H = W/200 from t1; a final window [t2-W, t2] is appended when the hop
/// grid does not land on t2, so the windows always cover [t1, t2].
TimeOrderedPointCloud block_point_cloud(const AudioSignal& signal, const Block& block,
                                        double window_seconds, const MfccExtractor& mfcc,
                                        MfccWindowMemo* memo = nullptr);

/// Projection onto the top-3 principal axes of the centered cloud,
/// descending variance order. Debug visualization only.
Eigen::MatrixXd pca3_project(const TimeOrderedPointCloud& cloud);

}  // namespace covershape
