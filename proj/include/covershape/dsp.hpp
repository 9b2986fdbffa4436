#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>
#include <cmath>
#include <vector>

namespace covershape {

inline int next_pow2(int n) {
    int p = 1;
    while (p < n) p <<= 1;
    return p;
}

/// Periodic Hann window of length n.
inline Eigen::VectorXd hann_window(int n) {
    Eigen::VectorXd w(n);
    for (int i = 0; i < n; ++i)
        w[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / n);
    return w;
}

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

/// Triangular mel filterbank over a one-sided power spectrum.
/// Adjacent triangles form a partition of unity, so each FFT bin feeds at
/// most two bands; weights are stored per bin.
class MelFilterbank {
public:
    MelFilterbank() = default;
    MelFilterbank(int n_mels, int nfft, double sample_rate, double fmin, double fmax)
        : n_mels_(n_mels), n_bins_(nfft / 2 + 1) {
        const double mel_lo = hz_to_mel(fmin);
        const double mel_hi = hz_to_mel(fmax);
        std::vector<double> edges(size_t(n_mels) + 2);
        for (int i = 0; i < n_mels + 2; ++i)
            edges[size_t(i)] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (n_mels + 1));

        band_.assign(size_t(n_bins_), -1);
        weight_.assign(size_t(n_bins_), 0.0);
        int seg = 0;
        for (int k = 0; k < n_bins_; ++k) {
            const double f = double(k) * sample_rate / nfft;
            if (f < edges.front() || f >= edges.back()) continue;
            while (seg + 1 < int(edges.size()) - 1 && f >= edges[size_t(seg) + 1]) ++seg;
            // f in [edges[seg], edges[seg+1]): rising part of band `seg`,
            // falling part of band `seg - 1`.
            band_[size_t(k)] = seg;
            weight_[size_t(k)] =
                (f - edges[size_t(seg)]) / (edges[size_t(seg) + 1] - edges[size_t(seg)]);
        }
    }

    int bands() const { return n_mels_; }
    int bins() const { return n_bins_; }

    /// Band energies from a one-sided power spectrum of size nfft/2 + 1.
    Eigen::VectorXd apply(const Eigen::Ref<const Eigen::VectorXd>& power) const {
        Eigen::VectorXd out = Eigen::VectorXd::Zero(n_mels_);
        for (int k = 0; k < n_bins_; ++k) {
            const int seg = band_[size_t(k)];
            if (seg < 0) continue;
            const double w = weight_[size_t(k)];
            if (seg < n_mels_) out[seg] += w * power[k];
            if (seg >= 1) out[seg - 1] += (1.0 - w) * power[k];
        }
        return out;
    }

private:
    int n_mels_ = 0;
    int n_bins_ = 0;
    std::vector<int> band_;     // rising band per bin, -1 outside range
    std::vector<double> weight_;
};

/// Orthonormal DCT-II matrix with n_out rows and n_in columns.
inline Eigen::MatrixXd dct2_matrix(int n_out, int n_in) {
    Eigen::MatrixXd m(n_out, n_in);
    for (int k = 0; k < n_out; ++k) {
        const double scale = std::sqrt((k == 0 ? 1.0 : 2.0) / n_in);
        for (int j = 0; j < n_in; ++j)
            m(k, j) = scale * std::cos(M_PI * k * (2 * j + 1) / (2.0 * n_in));
    }
    return m;
}

/// Real-input FFT with cached plans and a scratch buffer.
class RealFft {
public:
    /// One-sided power spectrum |X_k|^2, k = 0..nfft/2, of `frame`
    /// zero-padded to nfft. nfft must be >= frame length.
    Eigen::VectorXd power_spectrum(const Eigen::Ref<const Eigen::VectorXd>& frame,
                                   int nfft) {
        buf_.assign(size_t(nfft), 0.0);
        Eigen::VectorXd::Map(buf_.data(), frame.size()) = frame;
        fft_.fwd(spec_, buf_);
        Eigen::VectorXd p(nfft / 2 + 1);
        for (int k = 0; k <= nfft / 2; ++k) p[k] = std::norm(spec_[size_t(k)]);
        return p;
    }

private:
    Eigen::FFT<double> fft_;
    std::vector<double> buf_;
    std::vector<std::complex<double>> spec_;
};

}  // namespace covershape
