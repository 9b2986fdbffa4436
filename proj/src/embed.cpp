#include "covershape/embed.hpp"

#include <algorithm>
#include <cmath>

namespace covershape {

MfccExtractor::MfccExtractor(int sample_rate, const MfccConfig& cfg)
    : fs_(sample_rate), cfg_(cfg) {
    if (sample_rate <= 0) throw std::invalid_argument("sample rate must be positive");
    if (cfg_.fmax <= 0.0) cfg_.fmax = sample_rate / 2.0;
    if (cfg_.n_coeffs < 1 || cfg_.n_coeffs > cfg_.n_mels)
        throw std::invalid_argument("need 1 <= n_coeffs <= n_mels");
    if (!(cfg_.fmin >= 0.0 && cfg_.fmin < cfg_.fmax && cfg_.fmax <= sample_rate / 2.0))
        throw std::invalid_argument("need 0 <= fmin < fmax <= fs/2");
    dct_ = dct2_matrix(cfg_.n_coeffs, cfg_.n_mels);
}

Eigen::VectorXd MfccExtractor::compute(const Eigen::Ref<const Eigen::VectorXd>& window) const {
    const int len = int(window.size());
    if (len < 64) throw DegenerateInput("window too short");

    auto hann = hann_by_len_.find(len);
    if (hann == hann_by_len_.end())
        hann = hann_by_len_.emplace(len, hann_window(len)).first;

    const int nfft = next_pow2(len);
    auto bank = bank_by_nfft_.find(nfft);
    if (bank == bank_by_nfft_.end())
        bank = bank_by_nfft_
                   .emplace(nfft, MelFilterbank(cfg_.n_mels, nfft, fs_, cfg_.fmin, cfg_.fmax))
                   .first;

    const Eigen::VectorXd power =
        fft_.power_spectrum(window.cwiseProduct(hann->second), nfft);
    const Eigen::VectorXd logmel =
        bank->second.apply(power).cwiseMax(cfg_.log_floor).array().log().matrix();
    return dct_ * logmel;
}

Eigen::VectorXd mfcc_window(const AudioSignal& window, const MfccConfig& cfg) {
    return MfccExtractor(window.sample_rate, cfg).compute(window.samples);
}

std::vector<Block> make_blocks(const BeatTrack& beats, int B, int sample_rate) {
    if (B < 1) throw std::invalid_argument("block size must be >= 1");
    if (sample_rate <= 0) throw std::invalid_argument("sample rate must be positive");
    const int n = beats.intervals();
    if (B > n) throw DegenerateInput("block size exceeds beat interval count");

    std::vector<Block> blocks;
    blocks.reserve(size_t(n - B + 1));
    for (int i = 0; i + B <= n; ++i) {
        Block blk;
        blk.beat_start_index = i;
        blk.beat_end_index = i + B;
        blk.t1 = std::llround(beats.beat_times[size_t(i)] * sample_rate);
        blk.t2 = std::llround(beats.beat_times[size_t(i + B)] * sample_rate);
        blocks.push_back(blk);
    }
    return blocks;
}

TimeOrderedPointCloud block_point_cloud(const AudioSignal& signal, const Block& block,
                                        double window_seconds, const MfccExtractor& mfcc,
                                        MfccWindowMemo* memo) {
    const auto w = std::int64_t(std::llround(window_seconds * signal.sample_rate));
    if (w < 1) throw std::invalid_argument("window length must be positive");
    if (block.t1 < 0 || block.t2 > signal.samples.size() || block.t1 >= block.t2)
        throw std::invalid_argument("block outside signal");
    if (block.t2 - block.t1 < w) throw DegenerateInput("block shorter than one window");
    if (memo) {
        if (memo->window_samples == 0) memo->window_samples = w;
        else if (memo->window_samples != w)
            throw std::logic_error("window memo reused with a different window length");
    }

    const double h = std::max(1.0, double(w) / 200.0);
    std::vector<std::int64_t> starts;
    for (std::int64_t m = 0;; ++m) {
        const std::int64_t a = block.t1 + std::llround(double(m) * h);
        if (a + w > block.t2) break;
        starts.push_back(a);
    }
    if (starts.empty() || starts.back() + w < block.t2) starts.push_back(block.t2 - w);

    TimeOrderedPointCloud cloud;
    cloud.points.resize(Eigen::Index(starts.size()), mfcc.config().n_coeffs);
    cloud.intervals.reserve(starts.size());
    for (size_t i = 0; i < starts.size(); ++i) {
        const std::int64_t a = starts[i];
        cloud.intervals.emplace_back(a, a + w);
        if (memo) {
            auto it = memo->by_start.find(a);
            if (it == memo->by_start.end())
                it = memo->by_start.emplace(a, mfcc.compute(signal.samples.segment(a, w))).first;
            cloud.points.row(Eigen::Index(i)) = it->second;
        } else {
            cloud.points.row(Eigen::Index(i)) = mfcc.compute(signal.samples.segment(a, w));
        }
    }
    return cloud;
}

Eigen::MatrixXd pca3_project(const TimeOrderedPointCloud& cloud) {
    const Eigen::Index k = cloud.points.rows();
    if (k < 3) throw std::invalid_argument("need at least 3 points");

    const Eigen::RowVectorXd mean = cloud.points.colwise().mean();
    const Eigen::MatrixXd centered = cloud.points.rowwise() - mean;
    const Eigen::MatrixXd cov = centered.transpose() * centered / double(k - 1);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    if (es.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");

    // Eigen orders eigenvalues ascending; take the top three, descending.
    const Eigen::Index n = cov.rows();
    Eigen::MatrixXd axes(n, 3);
    for (Eigen::Index c = 0; c < 3; ++c) axes.col(c) = es.eigenvectors().col(n - 1 - c);
    return centered * axes;
}

}  // namespace covershape
