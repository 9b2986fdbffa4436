#include "covershape/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstring>
#include <functional>
#include <mutex>
#include <sstream>
#include <thread>

#include "covershape/errors.hpp"
#include "covershape/feature_cache.hpp"

namespace covershape {

namespace {

void parallel_for(int n, int jobs, const std::function<void(int)>& fn) {
    jobs = std::min(jobs, n);
    if (jobs <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(size_t(jobs));
    for (int t = 0; t < jobs; ++t)
        pool.emplace_back([&] {
            for (;;) {
                const int i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                    next.store(n);
                    return;
                }
            }
        });
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

double bias_label(const PipelineConfig& cfg, size_t index, const SongFeatures& features) {
    if (index < cfg.tempo_biases.size()) return cfg.tempo_biases[index];
    return features.biases[index] ? features.biases[index]->track.bias_bpm : 0.0;
}

// All requested (block_size, ssm_dim) features of one signal, sharing the
// envelope, beat tracks, window MFCCs and point clouds.
std::map<std::pair<int, int>, SongFeatures> extract_grid_impl(
    const AudioSignal& signal, const PipelineConfig& base,
    const std::vector<std::pair<int, int>>& requests) {
    OnsetEnvelope env;
    try {
        env = onset_envelope(signal, base.tracker.onset);
    } catch (const DegenerateInput&) {
        throw DegenerateInput("song too short");
    }

    const size_t n_biases = base.tempo_biases.size();
    if (n_biases == 0) throw std::invalid_argument("no tempo biases configured");

    // Track once per bias; biases that lock onto the same grid share
    // features downstream.
    std::vector<BeatTrack> tracks(n_biases);
    std::vector<size_t> owner(n_biases);
    for (size_t b = 0; b < n_biases; ++b) {
        tracks[b] = track_at_bias(env, base.tempo_biases[b], base.tracker.tempo,
                                  base.tracker.track);
        owner[b] = b;
        for (size_t e = 0; e < b; ++e)
            if (owner[e] == e && tracks[e].beat_times == tracks[b].beat_times) {
                owner[b] = e;
                break;
            }
    }

    std::vector<int> block_sizes;
    for (const auto& rq : requests) block_sizes.push_back(rq.first);
    std::sort(block_sizes.begin(), block_sizes.end());
    block_sizes.erase(std::unique(block_sizes.begin(), block_sizes.end()),
                      block_sizes.end());

    const MfccExtractor mfcc(signal.sample_rate, base.mfcc);
    std::vector<std::map<std::pair<int, int>, std::shared_ptr<const BiasFeatures>>>
        per_bias(n_biases);

    for (size_t b = 0; b < n_biases; ++b) {
        if (owner[b] != b) continue;
        const BeatTrack& track = tracks[b];
        MfccWindowMemo memo;

        for (int block_size : block_sizes) {
            std::vector<std::pair<int, int>> wanted;
            for (const auto& rq : requests)
                if (rq.first == block_size) wanted.push_back(rq);
            if (wanted.empty()) continue;

            if (track.intervals() < block_size) {
                auto unusable = std::make_shared<BiasFeatures>();
                unusable->track = track;
                unusable->reason = "fewer beat intervals than the block size";
                for (const auto& rq : wanted) per_bias[b][rq] = unusable;
                continue;
            }

            const auto blocks = make_blocks(track, block_size, signal.sample_rate);
            std::vector<TimeOrderedPointCloud> normalized;
            std::vector<int> skipped;
            normalized.reserve(blocks.size());
            for (size_t i = 0; i < blocks.size(); ++i) {
                try {
                    normalized.push_back(normalize_point_cloud(block_point_cloud(
                        signal, blocks[i], track.mean_period, mfcc, &memo)));
                } catch (const DegenerateInput&) {
                    skipped.push_back(int(i));
                }
            }

            for (const auto& rq : wanted) {
                auto bias = std::make_shared<BiasFeatures>();
                bias->track = track;
                bias->skipped_blocks = skipped;
                bias->ssms.reserve(normalized.size());
                for (const auto& cloud : normalized)
                    bias->ssms.push_back(resized_ssm_from_cloud(cloud, rq.second));
                bias->usable = !bias->ssms.empty();
                if (!bias->usable) bias->reason = "all blocks degenerate";
                per_bias[b][rq] = std::move(bias);
            }
        }
    }

    std::map<std::pair<int, int>, SongFeatures> out;
    for (const auto& rq : requests) {
        SongFeatures features;
        features.biases.reserve(n_biases);
        for (size_t b = 0; b < n_biases; ++b)
            features.biases.push_back(per_bias[owner[b]].at(rq));
        out[rq] = std::move(features);
    }
    return out;
}

bool any_usable(const SongFeatures& features) {
    for (const auto& bias : features.biases)
        if (bias && bias->usable) return true;
    return false;
}

int correct_count(const Eigen::MatrixXd& scores, const std::vector<int>& truth) {
    int correct = 0;
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
        Eigen::Index best = 0;
        for (Eigen::Index j = 1; j < scores.cols(); ++j)
            if (scores(i, j) > scores(i, best)) best = j;
        if (int(best) == truth[size_t(i)]) ++correct;
    }
    return correct;
}

void validate_benchmark_inputs(size_t n_a, size_t n_b, const std::vector<int>& truth) {
    if (n_a < 2 || n_a != n_b)
        throw ManifestError("song sets must have the same size, at least 2");
    if (truth.size() != n_a) throw ManifestError("truth size does not match the song sets");
    std::vector<char> seen(n_b, 0);
    for (int t : truth) {
        if (t < 0 || size_t(t) >= n_b || seen[size_t(t)])
            throw ManifestError("truth is not a bijection");
        seen[size_t(t)] = 1;
    }
}

}  // namespace

std::map<std::pair<int, int>, SongFeatures> extract_features_grid(
    const AudioSignal& signal, const PipelineConfig& base,
    const std::vector<int>& block_sizes, const std::vector<int>& ssm_dims,
    FeatureCache* cache) {
    if (block_sizes.empty() || ssm_dims.empty())
        throw std::invalid_argument("empty parameter grid");

    const AudioSignal* input = &signal;
    AudioSignal resampled;
    if (signal.sample_rate != base.sample_rate) {
        resampled = resample(signal, base.sample_rate);
        input = &resampled;
    }

    std::map<std::pair<int, int>, SongFeatures> out;
    std::vector<std::pair<int, int>> missing;
    const std::uint64_t audio_hash = cache ? hash_audio(signal) : 0;
    for (int b : block_sizes)
        for (int d : ssm_dims) {
            const std::pair<int, int> rq{b, d};
            if (out.count(rq)) continue;
            PipelineConfig cfg = base;
            cfg.beats_per_block = b;
            cfg.ssm_dim = d;
            SongFeatures features;
            if (cache && cache->load(audio_hash, hash_config(cfg), &features))
                out[rq] = std::move(features);
            else
                missing.push_back(rq);
        }
    if (missing.empty()) return out;

    auto computed = extract_grid_impl(*input, base, missing);
    for (auto& [rq, features] : computed) {
        if (cache) {
            PipelineConfig cfg = base;
            cfg.beats_per_block = rq.first;
            cfg.ssm_dim = rq.second;
            cache->store(audio_hash, hash_config(cfg), features);
        }
        out[rq] = std::move(features);
    }
    return out;
}

SongFeatures extract_features(const AudioSignal& signal, const PipelineConfig& cfg,
                              FeatureCache* cache) {
    auto grid = extract_features_grid(signal, cfg, {cfg.beats_per_block}, {cfg.ssm_dim},
                                      cache);
    SongFeatures features = std::move(grid.begin()->second);
    if (!any_usable(features)) throw DegenerateInput("song too short");
    return features;
}

std::vector<SongFeatures> extract_many(const std::vector<AudioSignal>& songs,
                                       const PipelineConfig& cfg, FeatureCache* cache,
                                       int jobs) {
    std::vector<SongFeatures> out(songs.size());
    parallel_for(int(songs.size()), jobs,
                 [&](int i) { out[size_t(i)] = extract_features(songs[size_t(i)], cfg, cache); });
    return out;
}

PairScore score_pair_details(const SongFeatures& a, const SongFeatures& b,
                             const PipelineConfig& cfg) {
    PairScore result;
    std::map<std::pair<const void*, const void*>, std::pair<double, double>> seen;

    for (size_t i = 0; i < a.biases.size(); ++i) {
        for (size_t j = 0; j < b.biases.size(); ++j) {
            ComboScore combo;
            combo.bias_a = bias_label(cfg, i, a);
            combo.bias_b = bias_label(cfg, j, b);
            const auto& fa = a.biases[i];
            const auto& fb = b.biases[j];
            if (fa && fb && fa->usable && fb->usable) {
                combo.usable = true;
                combo.blocks_a = Eigen::Index(fa->ssms.size());
                combo.blocks_b = Eigen::Index(fb->ssms.size());
                const std::pair<const void*, const void*> key{fa.get(), fb.get()};
                auto it = seen.find(key);
                if (it == seen.end()) {
                    const Eigen::MatrixXd csm = compute_csm(fa->ssms, fb->ssms);
                    const auto sw =
                        smith_waterman_constrained(binarize_mutual_knn(csm, cfg.kappa));
                    it = seen.emplace(key,
                                      std::make_pair(sw.score,
                                                     length_normalized_score(
                                                         sw.score, csm.rows(), csm.cols())))
                             .first;
                }
                combo.score = it->second.first;
                combo.normalized = it->second.second;
                if (result.best_combo < 0 || combo.score > result.score) {
                    result.score = combo.score;
                    result.best_combo = int(result.combos.size());
                }
            }
            result.combos.push_back(combo);
        }
    }
    if (result.best_combo < 0) throw DegenerateInput("no usable bias pair");
    return result;
}

double score_pair(const SongFeatures& a, const SongFeatures& b, const PipelineConfig& cfg) {
    return score_pair_details(a, b, cfg).score;
}

BenchmarkReport benchmark(const std::vector<SongFeatures>& set_a,
                          const std::vector<SongFeatures>& set_b,
                          const std::vector<int>& truth, const PipelineConfig& cfg,
                          int jobs) {
    validate_benchmark_inputs(set_a.size(), set_b.size(), truth);

    BenchmarkReport report;
    report.scores.resize(Eigen::Index(set_a.size()), Eigen::Index(set_b.size()));
    const Eigen::Index cols = report.scores.cols();
    parallel_for(int(report.scores.size()), jobs, [&](int cell) {
        const Eigen::Index i = cell / cols;
        const Eigen::Index j = cell % cols;
        report.scores(i, j) = score_pair(set_a[size_t(i)], set_b[size_t(j)], cfg);
    });

    double rank_sum = 0.0;
    for (Eigen::Index i = 0; i < report.scores.rows(); ++i) {
        BenchmarkQuery q;
        q.query = int(i);
        q.truth = truth[size_t(i)];

        Eigen::Index best = 0;
        for (Eigen::Index j = 1; j < report.scores.cols(); ++j)
            if (report.scores(i, j) > report.scores(i, best)) best = j;
        q.predicted = int(best);
        q.score = report.scores(i, best);
        for (Eigen::Index j = 0; j < report.scores.cols(); ++j)
            if (j != best && report.scores(i, j) == report.scores(i, best)) q.tie = true;

        const double truth_score = report.scores(i, q.truth);
        int rank = 1;
        for (Eigen::Index j = 0; j < report.scores.cols(); ++j) {
            if (j == q.truth) continue;
            if (report.scores(i, j) > truth_score ||
                (report.scores(i, j) == truth_score && j < q.truth))
                ++rank;
        }
        q.rank = rank;
        rank_sum += rank;
        if (q.predicted == q.truth) ++report.correct;
        report.queries.push_back(q);
    }
    report.mean_rank = rank_sum / double(report.scores.rows());
    return report;
}

SweepResult sweep_benchmark(const std::vector<AudioSignal>& set_a,
                            const std::vector<AudioSignal>& set_b,
                            const std::vector<int>& truth, const PipelineConfig& base,
                            const SweepGrid& grid, FeatureCache* cache, int jobs) {
    validate_benchmark_inputs(set_a.size(), set_b.size(), truth);
    if (grid.kappas.empty() || grid.block_sizes.empty() || grid.ssm_dims.empty())
        throw std::invalid_argument("empty parameter grid");

    const int n_a = int(set_a.size());
    const int n_b = int(set_b.size());
    const int n_songs = n_a + n_b;
    const auto song = [&](int s) -> const AudioSignal& {
        return s < n_a ? set_a[size_t(s)] : set_b[size_t(s - n_a)];
    };

    // Extract (and optionally cache) everything first; without a cache
    // all grid features stay resident.
    std::vector<std::map<std::pair<int, int>, SongFeatures>> ram;
    if (!cache) ram.resize(size_t(n_songs));
    parallel_for(n_songs, jobs, [&](int s) {
        auto features =
            extract_features_grid(song(s), base, grid.block_sizes, grid.ssm_dims, cache);
        if (!cache) ram[size_t(s)] = std::move(features);
    });

    std::map<std::tuple<size_t, int, int>, int> correct;
    for (int block_size : grid.block_sizes) {
        for (int ssm_dim : grid.ssm_dims) {
            const std::pair<int, int> rq{block_size, ssm_dim};
            std::vector<SongFeatures> features(static_cast<size_t>(n_songs));
            for (int s = 0; s < n_songs; ++s) {
                if (cache) {
                    PipelineConfig cfg = base;
                    cfg.beats_per_block = block_size;
                    cfg.ssm_dim = ssm_dim;
                    if (!cache->load(hash_audio(song(s)), hash_config(cfg), &features[size_t(s)]))
                        throw std::runtime_error("feature cache entry vanished");
                } else {
                    features[size_t(s)] = ram[size_t(s)].at(rq);
                }
            }

            // One CSM per distinct bias-feature pair, shared by all kappas.
            std::vector<Eigen::MatrixXd> scores(grid.kappas.size(),
                                                Eigen::MatrixXd::Zero(n_a, n_b));
            for (int i = 0; i < n_a; ++i) {
                for (int j = 0; j < n_b; ++j) {
                    const SongFeatures& fa = features[size_t(i)];
                    const SongFeatures& fb = features[size_t(n_a + j)];
                    std::map<std::pair<const void*, const void*>, std::vector<double>> seen;
                    std::vector<double> best(grid.kappas.size(), -1.0);
                    bool usable = false;
                    for (const auto& ba : fa.biases) {
                        for (const auto& bb : fb.biases) {
                            if (!ba || !bb || !ba->usable || !bb->usable) continue;
                            usable = true;
                            const std::pair<const void*, const void*> key{ba.get(), bb.get()};
                            auto it = seen.find(key);
                            if (it == seen.end()) {
                                const Eigen::MatrixXd csm = compute_csm(ba->ssms, bb->ssms);
                                std::vector<double> per_kappa;
                                per_kappa.reserve(grid.kappas.size());
                                for (double kappa : grid.kappas)
                                    per_kappa.push_back(
                                        smith_waterman_constrained(
                                            binarize_mutual_knn(csm, kappa))
                                            .score);
                                it = seen.emplace(key, std::move(per_kappa)).first;
                            }
                            for (size_t k = 0; k < grid.kappas.size(); ++k)
                                best[k] = std::max(best[k], it->second[k]);
                        }
                    }
                    if (!usable) throw DegenerateInput("no usable bias pair");
                    for (size_t k = 0; k < grid.kappas.size(); ++k)
                        scores[k](i, j) = best[k];
                }
            }
            for (size_t k = 0; k < grid.kappas.size(); ++k)
                correct[{k, block_size, ssm_dim}] = correct_count(scores[k], truth);
        }
    }

    SweepResult result;
    for (size_t k = 0; k < grid.kappas.size(); ++k)
        for (int ssm_dim : grid.ssm_dims)
            for (int block_size : grid.block_sizes) {
                SweepCell cell;
                cell.kappa = grid.kappas[k];
                cell.block_size = block_size;
                cell.ssm_dim = ssm_dim;
                cell.correct = correct.at({k, block_size, ssm_dim});
                cell.total = n_a;
                result.cells.push_back(cell);
            }
    return result;
}

std::string format_sweep_table(const SweepResult& result, const SweepGrid& grid) {
    const size_t n_b = grid.block_sizes.size();
    const size_t n_d = grid.ssm_dims.size();
    if (result.cells.size() != grid.kappas.size() * n_b * n_d)
        throw std::invalid_argument("result does not match the grid");

    std::vector<std::string> row_labels;
    size_t label_width = 0;
    for (double kappa : grid.kappas) {
        char buf[48];
        std::snprintf(buf, sizeof buf, "Kappa = %g", kappa);
        row_labels.emplace_back(buf);
        label_width = std::max(label_width, row_labels.back().size());
    }
    for (int d : grid.ssm_dims) {
        char buf[48];
        std::snprintf(buf, sizeof buf, "d = %d", d);
        row_labels.emplace_back(buf);
        label_width = std::max(label_width, row_labels.back().size());
    }

    std::ostringstream out;
    size_t cell = 0;
    for (size_t k = 0; k < grid.kappas.size(); ++k) {
        std::string line = row_labels[k];
        line.resize(label_width, ' ');
        for (int b : grid.block_sizes) {
            char buf[48];
            std::snprintf(buf, sizeof buf, "B = %d", b);
            line += "  ";
            line.append(8 - std::min<size_t>(8, std::strlen(buf)), ' ');
            line += buf;
        }
        out << line << '\n';
        for (size_t d = 0; d < n_d; ++d) {
            line = row_labels[grid.kappas.size() + d];
            line.resize(label_width, ' ');
            for (size_t b = 0; b < n_b; ++b) {
                char buf[48];
                std::snprintf(buf, sizeof buf, "%d/%d", result.cells[cell].correct,
                              result.cells[cell].total);
                ++cell;
                line += "  ";
                line.append(8 - std::min<size_t>(8, std::strlen(buf)), ' ');
                line += buf;
            }
            out << line << '\n';
        }
    }
    return out.str();
}

}  // namespace covershape
