#pragma once

#include <cstdint>
#include <filesystem>

#include "covershape/pipeline.hpp"

namespace covershape {

std::uint64_t fnv1a(const void* data, std::size_t len,
                    std::uint64_t seed = 14695981039346656037ull);

std::uint64_t hash_audio(const AudioSignal& signal);

/// Hash of every config field that affects extracted features. kappa is
/// deliberately excluded: it only affects scoring.
std::uint64_t hash_config(const PipelineConfig& cfg);

/// Disk store of SongFeatures keyed by (audio hash, config hash).
/// Files use a versioned binary container in native byte order; anything
/// unreadable or mismatched is treated as a miss.
class FeatureCache {
 public:
    explicit FeatureCache(std::filesystem::path dir);

    const std::filesystem::path& dir() const { return dir_; }

    bool contains(std::uint64_t audio_hash, std::uint64_t config_hash) const;
    bool load(std::uint64_t audio_hash, std::uint64_t config_hash, SongFeatures* out) const;
    void store(std::uint64_t audio_hash, std::uint64_t config_hash,
               const SongFeatures& features) const;

 private:
    std::filesystem::path entry_path(std::uint64_t audio_hash,
                                     std::uint64_t config_hash) const;
    std::filesystem::path dir_;
};

}  // namespace covershape
