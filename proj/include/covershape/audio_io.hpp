#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

#include "covershape/errors.hpp"

namespace covershape {

/// Mono audio buffer. Samples are amplitudes in [-1, 1].
struct AudioSignal {
    Eigen::VectorXd samples;
    int sample_rate = 0;

    double duration() const {
        return sample_rate > 0 ? double(samples.size()) / sample_rate : 0.0;
    }
};

/// Loads a RIFF/WAVE file (PCM 16-bit or IEEE float 32-bit, 1 or 2 channels).
/// Stereo is downmixed by per-sample channel average.
AudioSignal load_wav(const std::string& path);

/// Writes a mono 16-bit PCM WAV file. Samples are clamped to [-1, 1].
void save_wav(const std::string& path, const AudioSignal& signal);

/// Band-limited resampling with a Hann-windowed sinc kernel.
/// Output length is round(len * target_rate / source_rate).
AudioSignal resample(const AudioSignal& signal, int target_rate);

}  // namespace covershape
