#include "covershape/beat.hpp"

#include <algorithm>
#include <cmath>

#include "covershape/dsp.hpp"

namespace covershape {

OnsetEnvelope onset_envelope(const AudioSignal& signal, const OnsetConfig& cfg) {
    if (signal.sample_rate <= 0 || signal.samples.size() == 0)
        throw std::invalid_argument("empty signal");
    const int fs = signal.sample_rate;
    const int win = int(std::lround(cfg.frame_len * fs));
    const int hop = int(std::lround(cfg.frame_hop * fs));
    if (hop <= 0 || win < hop) throw std::invalid_argument("invalid frame geometry");
    if (signal.samples.size() < win)
        throw DegenerateInput("signal shorter than one frame");

    const auto n_frames = Eigen::Index((signal.samples.size() - win) / hop + 1);
    const int nfft = next_pow2(win);
    const Eigen::VectorXd window = hann_window(win);
    const MelFilterbank bank(cfg.n_mels, nfft, fs, 0.0, fs / 2.0);
    RealFft fft;

    // Log mel spectrum per frame, then summed positive flux across bands.
    Eigen::VectorXd flux = Eigen::VectorXd::Zero(n_frames);
    Eigen::VectorXd prev(cfg.n_mels), cur(cfg.n_mels);
    for (Eigen::Index m = 0; m < n_frames; ++m) {
        const Eigen::VectorXd frame =
            signal.samples.segment(m * hop, win).cwiseProduct(window);
        cur = bank.apply(fft.power_spectrum(frame, nfft))
                  .cwiseMax(cfg.log_floor)
                  .array()
                  .log()
                  .matrix();
        if (m > 0) flux[m] = (cur - prev).cwiseMax(0.0).sum();
        prev.swap(cur);
    }

    // Remove the slow trend so the tracker sees transients, not loudness.
    const auto half = Eigen::Index(std::lround(cfg.local_mean_halfwidth / cfg.frame_hop));
    Eigen::VectorXd detrended(n_frames);
    for (Eigen::Index m = 0; m < n_frames; ++m) {
        const Eigen::Index lo = std::max<Eigen::Index>(0, m - half);
        const Eigen::Index hi = std::min(n_frames - 1, m + half);
        detrended[m] = flux[m] - flux.segment(lo, hi - lo + 1).mean();
    }

    OnsetEnvelope env;
    env.values = detrended.cwiseMax(0.0);
    env.frame_hop = double(hop) / fs;
    env.t0 = double(win) / fs;
    return env;
}

TempoEstimate estimate_tempo(const OnsetEnvelope& env, double bias_bpm,
                             const TempoConfig& cfg) {
    if (env.values.size() == 0) throw std::invalid_argument("empty envelope");
    if (bias_bpm < 30.0 || bias_bpm > 300.0)
        throw std::invalid_argument("bias_bpm outside [30, 300]");

    const double bias_period = 60.0 / bias_bpm;
    const Eigen::Index n = env.values.size();
    const auto lag_min = Eigen::Index(std::ceil(cfg.min_period / env.frame_hop));
    const auto lag_max = std::min<Eigen::Index>(
        n - 1, Eigen::Index(std::floor(cfg.max_period / env.frame_hop)));

    double best = 0.0;
    Eigen::Index best_lag = 0;
    for (Eigen::Index lag = lag_min; lag <= lag_max; ++lag) {
        const double r = env.values.head(n - lag).dot(env.values.tail(n - lag));
        const double oct = std::log2(lag * env.frame_hop / bias_period);
        const double w = std::exp(-0.5 * (oct / cfg.sigma_octaves) * (oct / cfg.sigma_octaves));
        if (w * r > best) {
            best = w * r;
            best_lag = lag;
        }
    }
    if (best_lag == 0)
        return {std::clamp(bias_period, cfg.min_period, cfg.max_period), true};
    return {best_lag * env.frame_hop, false};
}

BeatTrack track_beats(const OnsetEnvelope& env, double period, const TrackConfig& cfg) {
    if (env.values.size() == 0) throw std::invalid_argument("empty envelope");
    if (period <= 0) throw std::invalid_argument("period must be positive");

    BeatTrack track;
    track.mean_period = period;
    const Eigen::Index n = env.values.size();
    const double span_end = env.time_of(n - 1);

    if (env.values.maxCoeff() <= 0.0) {
        // No onsets at all: an even grid at exactly the requested period.
        track.no_rhythm = true;
        for (double t = env.t0; t <= span_end + 1e-9; t += period)
            track.beat_times.push_back(t);
        if (track.beat_times.empty()) track.beat_times.push_back(env.t0);
        return track;
    }

    // Scale the envelope so the tightness weight is comparable across
    // inputs; a flat envelope falls back to its mean.
    const double mean = env.values.mean();
    const double sd = std::sqrt((env.values.array() - mean).square().sum() / n);
    Eigen::VectorXd e = env.values / (sd > 1e-12 * mean ? sd : mean);

    const double p = period / env.frame_hop;  // target spacing in frames
    const auto d_min = std::max<Eigen::Index>(1, Eigen::Index(std::ceil(p / 2.0)));
    const auto d_max = std::max(d_min, Eigen::Index(std::floor(2.0 * p)));

    Eigen::VectorXd score(n);
    std::vector<Eigen::Index> pred(size_t(n), -1);
    for (Eigen::Index m = 0; m < n; ++m) {
        double best = 0.0;
        Eigen::Index best_pred = -1;
        for (Eigen::Index d = d_min; d <= std::min(d_max, m); ++d) {
            const double logr = std::log(double(d) / p);
            const double v = score[m - d] - cfg.tightness * logr * logr;
            if (v > best) {
                best = v;
                best_pred = m - d;
            }
        }
        score[m] = e[m] + best;
        pred[size_t(m)] = best_pred;
    }

    Eigen::Index m;
    score.maxCoeff(&m);
    std::vector<Eigen::Index> frames;
    for (; m >= 0; m = pred[size_t(m)]) frames.push_back(m);
    std::reverse(frames.begin(), frames.end());

    for (Eigen::Index f : frames) track.beat_times.push_back(env.time_of(f));
    if (track.beat_times.size() >= 2) {
        track.mean_period = (track.beat_times.back() - track.beat_times.front()) /
                            double(track.beat_times.size() - 1);
    }
    return track;
}

BeatTrack track_at_bias(const OnsetEnvelope& env, double bias_bpm,
                        const TempoConfig& tempo_cfg, const TrackConfig& track_cfg) {
    const TempoEstimate est = estimate_tempo(env, bias_bpm, tempo_cfg);
    BeatTrack track = track_beats(env, est.period, track_cfg);
    track.bias_bpm = bias_bpm;
    track.no_rhythm = track.no_rhythm || est.no_rhythm;
    return track;
}

}  // namespace covershape
