#include "covershape/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include <json.hpp>

namespace covershape {

namespace {

constexpr double kTau = 2.0 * std::numbers::pi;

void add_click(Eigen::VectorXd* mix, std::int64_t at, double amp, int fs,
               std::mt19937* rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const auto len = std::int64_t(std::llround(0.005 * fs));
    const double decay = 0.001 * fs;  // 1 ms e-folding
    for (std::int64_t j = 0; j < len && at + j < mix->size(); ++j) {
        const double a = j == 0 ? 1.0 : u(*rng);
        (*mix)[at + j] += amp * a * std::exp(-double(j) / decay);
    }
}

double tone(Timbre timbre, double f, double t, double nyquist) {
    switch (timbre) {
        case Timbre::Sine:
            return std::sin(kTau * f * t);
        case Timbre::Sawtooth: {
            const int hmax = std::max(1, std::min(24, int(0.9 * nyquist / f)));
            double v = 0.0;
            for (int h = 1; h <= hmax; ++h) v += std::sin(kTau * h * f * t) / h;
            return v;
        }
        case Timbre::Square: {
            const int hmax = std::max(1, std::min(23, int(0.9 * nyquist / f)));
            double v = 0.0;
            for (int h = 1; h <= hmax; h += 2) v += std::sin(kTau * h * f * t) / h;
            return v;
        }
        case Timbre::Noise:
            return 0.0;  // rendered separately, needs the stream of draws
    }
    return 0.0;
}

void validate_spec(const SongSpec& spec) {
    if (!(spec.tempo_bpm >= 40.0 && spec.tempo_bpm <= 240.0))
        throw std::invalid_argument("tempo out of range");
    if (spec.sections.size() < 2)
        throw std::invalid_argument("need at least 2 sections");
    for (const auto& s : spec.sections) {
        if (s.beats < 1) throw std::invalid_argument("section must span at least 1 beat");
        for (double f : s.chord)
            if (!(f > 0.0)) throw std::invalid_argument("fundamentals must be positive");
    }
}

}  // namespace

const char* timbre_name(Timbre t) {
    switch (t) {
        case Timbre::Sine: return "sine";
        case Timbre::Sawtooth: return "sawtooth";
        case Timbre::Square: return "square";
        case Timbre::Noise: return "noise";
    }
    return "sine";
}

Timbre timbre_from_name(const std::string& name) {
    if (name == "sine") return Timbre::Sine;
    if (name == "sawtooth") return Timbre::Sawtooth;
    if (name == "square") return Timbre::Square;
    if (name == "noise") return Timbre::Noise;
    throw std::invalid_argument("unknown timbre: " + name);
}

AudioSignal synth_click_track(double bpm, double duration_seconds, int fs) {
    if (!(bpm >= 30.0 && bpm <= 300.0)) throw std::invalid_argument("bpm outside [30, 300]");
    if (fs <= 0 || duration_seconds <= 0.0) throw std::invalid_argument("invalid geometry");

    AudioSignal out;
    out.sample_rate = fs;
    out.samples = Eigen::VectorXd::Zero(std::int64_t(std::llround(duration_seconds * fs)));

    std::mt19937 rng(0x9e3779b9u);
    const double period = 60.0 / bpm;
    for (std::int64_t k = 0;; ++k) {
        const auto at = std::int64_t(std::llround(double(k) * period * fs));
        if (at >= out.samples.size()) break;
        add_click(&out.samples, at, 0.9, fs, &rng);
    }
    return out;
}

AudioSignal render_song(const SongSpec& spec, int fs, std::uint32_t seed) {
    validate_spec(spec);
    if (fs <= 0) throw std::invalid_argument("sample rate must be positive");

    const double period = 60.0 / spec.tempo_bpm;
    const int total = spec.total_beats();
    const auto n = std::int64_t(std::llround(total * period * fs));

    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);

    Eigen::VectorXd mix(n);
    for (std::int64_t k = 0; k < n; ++k) mix[k] = 1e-3 * u(rng);

    const auto attack = std::int64_t(std::llround(0.005 * fs));
    const auto release = std::int64_t(std::llround(0.02 * fs));
    const double nyquist = fs / 2.0;

    std::int64_t section_first_beat = 0;
    size_t section = 0;
    for (int g = 0; g < total; ++g) {
        while (g - section_first_beat >= spec.sections[section].beats) {
            section_first_beat += spec.sections[section].beats;
            ++section;
        }
        const Section& sec = spec.sections[section];
        const int local_beat = int(g - section_first_beat);

        const auto s0 = std::int64_t(std::llround(double(g) * period * fs));
        const auto s1 = std::min<std::int64_t>(n, std::llround(double(g + 1) * period * fs));
        const std::int64_t len = s1 - s0;
        if (len <= 0) continue;

        const auto gate = [&](std::int64_t k) {
            const double a = attack > 0 ? std::min(1.0, double(k) / double(attack)) : 1.0;
            const double r = release > 0 ? std::min(1.0, double(len - 1 - k) / double(release)) : 1.0;
            return a * std::max(0.0, r);
        };

        if (!sec.chord.empty()) {
            if (spec.timbre == Timbre::Noise) {
                double fc = 0.0;
                for (double f : sec.chord) fc += f;
                fc = std::clamp(fc / double(sec.chord.size()), 100.0, nyquist / 2.0);
                const double alpha = std::exp(-kTau * fc / fs);
                double y = 0.0;
                for (std::int64_t k = 0; k < len; ++k) {
                    y = alpha * y + (1.0 - alpha) * u(rng);
                    mix[s0 + k] += 0.6 * 8.0 * y * gate(k);
                }
            } else {
                const double amp = 0.6 / double(sec.chord.size());
                for (std::int64_t k = 0; k < len; ++k) {
                    const double t = double(s0 + k) / fs;
                    double v = 0.0;
                    for (double f : sec.chord) v += tone(spec.timbre, f, t, nyquist);
                    mix[s0 + k] += amp * v * gate(k);
                }
            }
        }

        if (!sec.rhythm.empty() && sec.rhythm[size_t(local_beat) % sec.rhythm.size()])
            add_click(&mix, s0, 0.8, fs, &rng);
    }

    const double peak = mix.cwiseAbs().maxCoeff();
    if (peak > 0.0) mix *= 0.9 * spec.gain / peak;

    AudioSignal out;
    out.samples = std::move(mix);
    out.sample_rate = fs;
    return out;
}

SongSpec make_cover(const SongSpec& spec, const CoverTransform& transform) {
    SongSpec cover = spec;
    cover.tempo_bpm = spec.tempo_bpm * transform.tempo_factor;
    if (!(cover.tempo_bpm >= 40.0 && cover.tempo_bpm <= 240.0))
        throw std::invalid_argument("tempo out of range");

    const double ratio = std::pow(2.0, transform.transpose_semitones / 12.0);
    for (auto& sec : cover.sections)
        for (auto& f : sec.chord) f *= ratio;

    if (transform.new_timbre) cover.timbre = *transform.new_timbre;
    if (transform.new_gain) cover.gain = *transform.new_gain;
    if (transform.prepend_intro_beats > 0) {
        Section intro;
        intro.beats = transform.prepend_intro_beats;
        intro.rhythm = {1};
        cover.sections.insert(cover.sections.begin(), intro);
    }
    return cover;
}

CoverTransform default_cover_transform() {
    CoverTransform t;
    t.tempo_factor = 1.25;
    t.transpose_semitones = 3.0;
    t.new_timbre = Timbre::Sawtooth;
    t.new_gain = 0.5;
    return t;
}

std::vector<SongSpec> example_corpus(int n, std::uint32_t seed) {
    if (n < 1) throw std::invalid_argument("need at least one song");
    std::mt19937 rng(seed);

    const std::vector<std::vector<double>> ratio_pool = {
        {1.0, 1.5},        {1.25, 1.875},     {4.0 / 3.0, 2.0},
        {1.0, 1.25, 1.5},  {1.5, 2.25},       {1.125, 1.6875},
        {1.0, 2.0},        {1.2, 1.5, 1.8},
    };
    const std::vector<std::vector<int>> rhythm_pool = {
        {1, 1, 1, 1}, {1, 0, 1, 0}, {1, 1, 0, 1},
        {1, 0, 0, 1}, {1, 0, 1, 1}, {1, 1, 0, 0},
    };
    const std::vector<std::string> patterns = {
        "AABBCC", "ABABCC", "ABCABC", "AABCBC", "ABBACC",
        "ABCCBA", "AABCCB", "ABACBC", "ABBCAC", "ABCBCA",
    };

    std::vector<SongSpec> corpus;
    corpus.reserve(size_t(n));
    for (int i = 0; i < n; ++i) {
        SongSpec spec;
        char name[16];
        std::snprintf(name, sizeof name, "song%02d", i);
        spec.name = name;
        spec.tempo_bpm = n > 1 ? 92.0 + 72.0 * i / (n - 1) : 120.0;
        spec.timbre = Timbre::Sine;

        const int root_midi = 45 + (i * 5) % 12 + int(rng() % 3);
        const double root = 440.0 * std::pow(2.0, (root_midi - 69) / 12.0);

        // Three section flavors per song, laid out by a fixed pattern.
        std::vector<size_t> ratio_pick(3), rhythm_pick(3);
        for (int s = 0; s < 3; ++s) {
            ratio_pick[size_t(s)] = (size_t(i) + size_t(s) * 3 + rng() % 2) % ratio_pool.size();
            rhythm_pick[size_t(s)] = (size_t(i) * 2 + size_t(s) + rng() % 2) % rhythm_pool.size();
        }
        std::vector<Section> flavors(3);
        for (int s = 0; s < 3; ++s) {
            Section sec;
            sec.beats = 4;
            for (double r : ratio_pool[ratio_pick[size_t(s)]])
                sec.chord.push_back(root * r * (s == 2 ? 2.0 : s == 1 ? 1.5 : 1.0));
            sec.rhythm = rhythm_pool[rhythm_pick[size_t(s)]];
            flavors[size_t(s)] = sec;
        }
        for (char c : patterns[size_t(i) % patterns.size()])
            spec.sections.push_back(flavors[size_t(c - 'A')]);

        corpus.push_back(std::move(spec));
    }
    return corpus;
}

std::string spec_to_json_string(const SongSpec& spec) {
    nlohmann::json j;
    j["name"] = spec.name;
    j["tempo_bpm"] = spec.tempo_bpm;
    j["timbre"] = timbre_name(spec.timbre);
    j["gain"] = spec.gain;
    j["sections"] = nlohmann::json::array();
    for (const auto& s : spec.sections)
        j["sections"].push_back({{"beats", s.beats}, {"chord", s.chord}, {"rhythm", s.rhythm}});
    return j.dump();
}

SongSpec spec_from_json_string(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    SongSpec spec;
    spec.name = j.value("name", "");
    spec.tempo_bpm = j.at("tempo_bpm").get<double>();
    spec.timbre = timbre_from_name(j.value("timbre", "sine"));
    spec.gain = j.value("gain", 1.0);
    for (const auto& s : j.at("sections")) {
        Section sec;
        sec.beats = s.at("beats").get<int>();
        sec.chord = s.at("chord").get<std::vector<double>>();
        sec.rhythm = s.at("rhythm").get<std::vector<int>>();
        spec.sections.push_back(std::move(sec));
    }
    return spec;
}

}  // namespace covershape
