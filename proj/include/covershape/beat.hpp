#pragma once

#include <Eigen/Dense>
#include <vector>

#include "covershape/audio_io.hpp"

namespace covershape {

/// Spectral-flux onset strength, one value per analysis frame.
/// Frame m summarizes samples [m*hop, m*hop + win); its timestamp is the
/// window end, t0 + m*frame_hop, which is where a transient entering the
/// window first registers in the flux.
struct OnsetEnvelope {
    Eigen::VectorXd values;
    double frame_hop = 0.0;  // seconds between frames
    double t0 = 0.0;         // timestamp of values[0], seconds

    double frame_rate() const { return 1.0 / frame_hop; }
    double time_of(Eigen::Index frame) const { return t0 + frame * frame_hop; }
};

struct OnsetConfig {
    int n_mels = 40;
    double frame_len = 0.046;           // seconds
    double frame_hop = 0.010;           // seconds
    double log_floor = 1e-10;           // power floor before log
    double local_mean_halfwidth = 0.2;  // seconds, for envelope detrending
};

struct TempoConfig {
    double min_period = 0.2;    // seconds (300 BPM)
    double max_period = 2.0;    // seconds (30 BPM)
    double sigma_octaves = 1.0; // width of the log-Gaussian tempo prior
};

struct TrackConfig {
    double tightness = 100.0;  // weight of the squared-log spacing penalty
};

struct TempoEstimate {
    double period = 0.0;     // seconds
    bool no_rhythm = false;  // envelope carried no usable periodicity
};

/// Beat grid tracked at one tempo-bias level.
struct BeatTrack {
    std::vector<double> beat_times;  // strictly increasing, seconds
    double bias_bpm = 0.0;
    double mean_period = 0.0;  // mean of consecutive beat-time differences
    bool no_rhythm = false;

    /// Number of beat intervals (one less than the number of beat times).
    int intervals() const {
        return beat_times.size() > 1 ? int(beat_times.size()) - 1 : 0;
    }
};

/// Sum over mel bands of the half-wave-rectified first difference of the
/// log mel spectrogram, locally mean-subtracted and rectified again.
OnsetEnvelope onset_envelope(const AudioSignal& signal, const OnsetConfig& cfg = {});

/// Period maximizing the envelope autocorrelation under a log-Gaussian
/// prior centered at 60/bias_bpm. Flags no_rhythm (and returns the bias
/// period) when the envelope has no periodic content.
TempoEstimate estimate_tempo(const OnsetEnvelope& env, double bias_bpm,
                             const TempoConfig& cfg = {});

/// Dynamic-programming beat tracking at a fixed target period. A silent
/// envelope yields an evenly spaced grid at exactly the target period.
BeatTrack track_beats(const OnsetEnvelope& env, double period,
                      const TrackConfig& cfg = {});

/// estimate_tempo + track_beats, stamping the bias level on the result.
BeatTrack track_at_bias(const OnsetEnvelope& env, double bias_bpm,
                        const TempoConfig& tempo_cfg = {},
                        const TrackConfig& track_cfg = {});

}  // namespace covershape
