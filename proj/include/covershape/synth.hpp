#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "covershape/audio_io.hpp"

namespace covershape {

enum class Timbre { Sine, Sawtooth, Square, Noise };

const char* timbre_name(Timbre t);
Timbre timbre_from_name(const std::string& name);

struct Section {
    int beats = 4;
    std::vector<double> chord;  // fundamental frequencies, Hz
    std::vector<int> rhythm;    // per-beat click mask, cycled across the section
};

struct SongSpec {
    std::string name;
    std::vector<Section> sections;  // at least 2
    double tempo_bpm = 120.0;       // within [40, 240]
    Timbre timbre = Timbre::Sine;
    double gain = 1.0;

    int total_beats() const {
        int n = 0;
        for (const auto& s : sections) n += s.beats;
        return n;
    }
};

struct CoverTransform {
    double tempo_factor = 1.0;
    double transpose_semitones = 0.0;
    std::optional<Timbre> new_timbre;
    std::optional<double> new_gain;
    int prepend_intro_beats = 0;
};

/// 5 ms exponentially decaying noise bursts at exact beat times on silence.
AudioSignal synth_click_track(double bpm, double duration_seconds, int fs);

/// Renders beat-gated chord tones plus rhythm clicks over a faint noise
/// bed, peak-normalized to 0.9 * gain. Bit-identical for equal (spec,
/// fs, seed).
AudioSignal render_song(const SongSpec& spec, int fs, std::uint32_t seed);

/// Tempo scaling, transposition, timbre/gain replacement and an optional
/// clicks-only intro; the section structure is otherwise preserved.
SongSpec make_cover(const SongSpec& spec, const CoverTransform& transform);

/// tempo x1.25, +3 semitones, sine -> sawtooth, gain x0.5.
CoverTransform default_cover_transform();

/// Deterministic set of n structurally distinct song specs.
std::vector<SongSpec> example_corpus(int n, std::uint32_t seed);

std::string spec_to_json_string(const SongSpec& spec);
SongSpec spec_from_json_string(const std::string& text);

}  // namespace covershape
