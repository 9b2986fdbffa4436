#include "covershape/feature_cache.hpp"

#include <atomic>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <vector>

#include "covershape/errors.hpp"

namespace covershape {

std::uint64_t fnv1a(const void* data, std::size_t len, std::uint64_t seed) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

std::uint64_t hash_audio(const AudioSignal& signal) {
    std::uint64_t h = fnv1a(&signal.sample_rate, sizeof signal.sample_rate);
    const auto n = std::int64_t(signal.samples.size());
    h = fnv1a(&n, sizeof n, h);
    return fnv1a(signal.samples.data(), size_t(n) * sizeof(double), h);
}

std::uint64_t hash_config(const PipelineConfig& cfg) {
    std::vector<double> v = {
        double(cfg.sample_rate),
        double(cfg.beats_per_block),
        double(cfg.ssm_dim),
        double(cfg.mfcc.n_coeffs),
        double(cfg.mfcc.n_mels),
        cfg.mfcc.fmin,
        cfg.mfcc.fmax,
        cfg.mfcc.log_floor,
        double(cfg.tracker.onset.n_mels),
        cfg.tracker.onset.frame_len,
        cfg.tracker.onset.frame_hop,
        cfg.tracker.onset.log_floor,
        cfg.tracker.onset.local_mean_halfwidth,
        cfg.tracker.tempo.min_period,
        cfg.tracker.tempo.max_period,
        cfg.tracker.tempo.sigma_octaves,
        cfg.tracker.track.tightness,
        double(cfg.tempo_biases.size()),
    };
    v.insert(v.end(), cfg.tempo_biases.begin(), cfg.tempo_biases.end());
    return fnv1a(v.data(), v.size() * sizeof(double));
}

namespace {

constexpr char kMagic[4] = {'C', 'S', 'F', 'C'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint8_t kOwnData = 0xFF;

template <typename T>
void put(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
bool get(std::istream& in, T* v) {
    in.read(reinterpret_cast<char*>(v), sizeof *v);
    return bool(in);
}

void put_string(std::ostream& out, const std::string& s) {
    put(out, std::uint32_t(s.size()));
    out.write(s.data(), std::streamsize(s.size()));
}

bool get_string(std::istream& in, std::string* s) {
    std::uint32_t len = 0;
    if (!get(in, &len) || len > (1u << 20)) return false;
    s->resize(len);
    in.read(s->data(), std::streamsize(len));
    return bool(in);
}

}  // namespace

FeatureCache::FeatureCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
}

std::filesystem::path FeatureCache::entry_path(std::uint64_t audio_hash,
                                               std::uint64_t config_hash) const {
    char name[48];
    std::snprintf(name, sizeof name, "csfc-%016llx-%016llx.bin",
                  (unsigned long long)audio_hash, (unsigned long long)config_hash);
    return dir_ / name;
}

bool FeatureCache::contains(std::uint64_t audio_hash, std::uint64_t config_hash) const {
    return std::filesystem::exists(entry_path(audio_hash, config_hash));
}

void FeatureCache::store(std::uint64_t audio_hash, std::uint64_t config_hash,
                         const SongFeatures& features) const {
    static std::atomic<unsigned> tmp_counter{0};
    const auto path = entry_path(audio_hash, config_hash);
    const auto tmp =
        path.string() + ".tmp" + std::to_string(tmp_counter.fetch_add(1));
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw IoError("cannot open cache file for writing: " + tmp);
        out.write(kMagic, 4);
        put(out, kVersion);
        put(out, audio_hash);
        put(out, config_hash);
        put(out, std::uint32_t(features.biases.size()));

        for (size_t i = 0; i < features.biases.size(); ++i) {
            std::uint8_t share = kOwnData;
            for (size_t j = 0; j < i; ++j)
                if (features.biases[j] == features.biases[i]) {
                    share = std::uint8_t(j);
                    break;
                }
            put(out, share);
            if (share != kOwnData) continue;

            const BiasFeatures& bias = *features.biases[i];
            put(out, std::uint8_t(bias.usable));
            put(out, std::uint8_t(bias.track.no_rhythm));
            put(out, bias.track.bias_bpm);
            put(out, bias.track.mean_period);
            put(out, std::uint32_t(bias.track.beat_times.size()));
            out.write(reinterpret_cast<const char*>(bias.track.beat_times.data()),
                      std::streamsize(bias.track.beat_times.size() * sizeof(double)));
            put_string(out, bias.reason);
            put(out, std::uint32_t(bias.skipped_blocks.size()));
            out.write(reinterpret_cast<const char*>(bias.skipped_blocks.data()),
                      std::streamsize(bias.skipped_blocks.size() * sizeof(int)));
            put(out, std::uint32_t(bias.ssms.size()));
            put(out, std::uint32_t(bias.ssms.empty() ? 0 : bias.ssms.front().rows()));
            for (const auto& ssm : bias.ssms)
                out.write(reinterpret_cast<const char*>(ssm.data()),
                          std::streamsize(size_t(ssm.size()) * sizeof(double)));
        }
        if (!out) throw IoError("cache write failed: " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

bool FeatureCache::load(std::uint64_t audio_hash, std::uint64_t config_hash,
                        SongFeatures* out) const {
    std::ifstream in(entry_path(audio_hash, config_hash), std::ios::binary);
    if (!in) return false;

    char magic[4];
    in.read(magic, 4);
    std::uint32_t version = 0;
    std::uint64_t stored_audio = 0, stored_config = 0;
    std::uint32_t n_biases = 0;
    if (!in || std::memcmp(magic, kMagic, 4) != 0) return false;
    if (!get(in, &version) || version != kVersion) return false;
    if (!get(in, &stored_audio) || stored_audio != audio_hash) return false;
    if (!get(in, &stored_config) || stored_config != config_hash) return false;
    if (!get(in, &n_biases) || n_biases > 64) return false;

    SongFeatures features;
    features.biases.resize(n_biases);
    for (std::uint32_t i = 0; i < n_biases; ++i) {
        std::uint8_t share = 0;
        if (!get(in, &share)) return false;
        if (share != kOwnData) {
            if (share >= i || !features.biases[share]) return false;
            features.biases[i] = features.biases[share];
            continue;
        }
        auto bias = std::make_shared<BiasFeatures>();
        std::uint8_t usable = 0, no_rhythm = 0;
        std::uint32_t n_beats = 0, n_skipped = 0, n_ssms = 0, dim = 0;
        if (!get(in, &usable) || !get(in, &no_rhythm)) return false;
        if (!get(in, &bias->track.bias_bpm) || !get(in, &bias->track.mean_period))
            return false;
        if (!get(in, &n_beats) || n_beats > (1u << 24)) return false;
        bias->track.beat_times.resize(n_beats);
        in.read(reinterpret_cast<char*>(bias->track.beat_times.data()),
                std::streamsize(n_beats * sizeof(double)));
        if (!in || !get_string(in, &bias->reason)) return false;
        if (!get(in, &n_skipped) || n_skipped > (1u << 24)) return false;
        bias->skipped_blocks.resize(n_skipped);
        in.read(reinterpret_cast<char*>(bias->skipped_blocks.data()),
                std::streamsize(n_skipped * sizeof(int)));
        if (!in || !get(in, &n_ssms) || n_ssms > (1u << 24)) return false;
        if (!get(in, &dim) || dim > (1u << 16)) return false;
        bias->usable = usable != 0;
        bias->track.no_rhythm = no_rhythm != 0;
        bias->ssms.resize(n_ssms);
        for (auto& ssm : bias->ssms) {
            ssm.resize(dim, dim);
            in.read(reinterpret_cast<char*>(ssm.data()),
                    std::streamsize(size_t(ssm.size()) * sizeof(double)));
            if (!in) return false;
        }
        features.biases[i] = std::move(bias);
    }
    *out = std::move(features);
    return true;
}

}  // namespace covershape
