#include "covershape/audio_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <vector>

namespace covershape {

namespace {

uint32_t read_u32(const uint8_t* p) {
    return uint32_t(p[0]) | uint32_t(p[1]) << 8 | uint32_t(p[2]) << 16 | uint32_t(p[3]) << 24;
}

uint16_t read_u16(const uint8_t* p) {
    return uint16_t(p[0]) | uint16_t(p[1]) << 8;
}

struct FmtChunk {
    uint16_t format = 0;
    uint16_t channels = 0;
    uint32_t sample_rate = 0;
    uint16_t bits_per_sample = 0;
};

}  // namespace

AudioSignal load_wav(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file: " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                               std::istreambuf_iterator<char>());
    if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
        throw IoError("not a RIFF/WAVE file: " + path);
    }

    FmtChunk fmt;
    bool have_fmt = false;
    const uint8_t* data = nullptr;
    size_t data_len = 0;

    size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const char* id = reinterpret_cast<const char*>(&bytes[pos]);
        uint32_t len = read_u32(&bytes[pos + 4]);
        pos += 8;
        if (pos + len > bytes.size()) throw IoError("truncated chunk in " + path);
        if (std::memcmp(id, "fmt ", 4) == 0) {
            if (len < 16) throw IoError("malformed fmt chunk in " + path);
            fmt.format = read_u16(&bytes[pos]);
            fmt.channels = read_u16(&bytes[pos + 2]);
            fmt.sample_rate = read_u32(&bytes[pos + 4]);
            fmt.bits_per_sample = read_u16(&bytes[pos + 14]);
            have_fmt = true;
        } else if (std::memcmp(id, "data", 4) == 0) {
            data = &bytes[pos];
            data_len = len;
        }
        pos += len + (len & 1);  // chunks are word-aligned
    }

    if (!have_fmt) throw IoError("missing fmt chunk in " + path);
    if (fmt.channels < 1 || fmt.channels > 2)
        throw IoError("unsupported channel count in " + path);
    if (fmt.sample_rate == 0) throw IoError("invalid sample rate in " + path);

    const bool pcm16 = fmt.format == 1 && fmt.bits_per_sample == 16;
    const bool float32 = fmt.format == 3 && fmt.bits_per_sample == 32;
    if (!pcm16 && !float32)
        throw IoError("unsupported codec/bit-depth in " + path);

    const size_t bytes_per_sample = fmt.bits_per_sample / 8;
    const size_t frame_size = bytes_per_sample * fmt.channels;
    const size_t n_frames = data ? data_len / frame_size : 0;
    if (n_frames == 0) throw IoError("zero-length audio: " + path);

    AudioSignal out;
    out.sample_rate = int(fmt.sample_rate);
    out.samples.resize(Eigen::Index(n_frames));
    for (size_t i = 0; i < n_frames; ++i) {
        double acc = 0;
        for (int ch = 0; ch < fmt.channels; ++ch) {
            const uint8_t* p = data + i * frame_size + ch * bytes_per_sample;
            if (pcm16) {
                int16_t v;
                std::memcpy(&v, p, 2);
                acc += double(v) / 32768.0;
            } else {
                float v;
                std::memcpy(&v, p, 4);
                if (!std::isfinite(v)) throw IoError("non-finite sample in " + path);
                acc += std::clamp(double(v), -1.0, 1.0);
            }
        }
        out.samples[Eigen::Index(i)] = acc / fmt.channels;
    }
    return out;
}

void save_wav(const std::string& path, const AudioSignal& signal) {
    if (signal.sample_rate <= 0) throw IoError("invalid sample rate");
    const Eigen::Index n = signal.samples.size();
    std::vector<uint8_t> buf;
    buf.reserve(44 + size_t(n) * 2);
    auto put_u32 = [&](uint32_t v) {
        buf.push_back(v & 0xff);
        buf.push_back((v >> 8) & 0xff);
        buf.push_back((v >> 16) & 0xff);
        buf.push_back((v >> 24) & 0xff);
    };
    auto put_u16 = [&](uint16_t v) {
        buf.push_back(v & 0xff);
        buf.push_back((v >> 8) & 0xff);
    };
    auto put_tag = [&](const char* s) { buf.insert(buf.end(), s, s + 4); };

    const uint32_t data_bytes = uint32_t(n) * 2;
    put_tag("RIFF");
    put_u32(36 + data_bytes);
    put_tag("WAVE");
    put_tag("fmt ");
    put_u32(16);
    put_u16(1);  // PCM
    put_u16(1);  // mono
    put_u32(uint32_t(signal.sample_rate));
    put_u32(uint32_t(signal.sample_rate) * 2);
    put_u16(2);
    put_u16(16);
    put_tag("data");
    put_u32(data_bytes);
    for (Eigen::Index i = 0; i < n; ++i) {
        double x = std::clamp(signal.samples[i], -1.0, 1.0);
        auto v = int16_t(std::lround(x * 32767.0));
        put_u16(uint16_t(v));
    }

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write file: " + path);
    out.write(reinterpret_cast<const char*>(buf.data()), std::streamsize(buf.size()));
    if (!out) throw IoError("write failed: " + path);
}

AudioSignal resample(const AudioSignal& signal, int target_rate) {
    if (target_rate <= 0) throw std::invalid_argument("target_rate must be positive");
    if (signal.sample_rate <= 0) throw std::invalid_argument("source rate must be positive");
    if (target_rate == signal.sample_rate) return signal;

    const Eigen::Index src_len = signal.samples.size();
    const double ratio = double(signal.sample_rate) / target_rate;
    const Eigen::Index out_len =
        Eigen::Index(std::llround(double(src_len) * target_rate / signal.sample_rate));

    // Lowpass at the narrower Nyquist when decimating.
    const double cutoff = std::min(1.0, 1.0 / ratio);
    const int half_width = int(std::ceil(32.0 * std::max(1.0, ratio)));

    AudioSignal out;
    out.sample_rate = target_rate;
    out.samples.resize(out_len);
    const double pi = std::numbers::pi;
    for (Eigen::Index n = 0; n < out_len; ++n) {
        const double pos = double(n) * ratio;
        const auto k0 = Eigen::Index(std::ceil(pos)) - half_width;
        const auto k1 = Eigen::Index(std::floor(pos)) + half_width;
        double acc = 0, wsum = 0;
        for (Eigen::Index k = std::max<Eigen::Index>(0, k0);
             k <= std::min(src_len - 1, k1); ++k) {
            const double t = pos - double(k);
            const double x = pi * cutoff * t;
            const double sinc = x == 0.0 ? 1.0 : std::sin(x) / x;
            const double w = 0.5 + 0.5 * std::cos(pi * t / half_width);
            const double kern = cutoff * sinc * w;
            acc += signal.samples[k] * kern;
            wsum += kern;
        }
        out.samples[n] = wsum != 0.0 ? acc / wsum : 0.0;
    }
    return out;
}

}  // namespace covershape
