// Image value types shared by every stage of the deblurring engine.
//
// Planes store row-major double intensities with a canonical range of
// [0,1]; 8-bit sample conversion happens only at the codec boundary so
// that spectral arithmetic sees uniformly scaled data.

#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace kmdeblur {

/// Raised by numerically degenerate states (vanished kernels, non-finite
/// iterates, ill-posed spectral divisions).
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Raised by file and codec failures.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A 2D grid of real-valued pixel intensities, row-major, row 0 at the top.
struct ImagePlane {
    int width = 0;
    int height = 0;
    std::vector<double> data;

    ImagePlane() = default;
    ImagePlane(int w, int h, double fill = 0.0)
        : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {
        if (w <= 0 || h <= 0) {
            throw std::invalid_argument("ImagePlane dimensions must be positive");
        }
    }

    double& at(int row, int col) { return data[static_cast<std::size_t>(row) * width + col]; }
    double at(int row, int col) const { return data[static_cast<std::size_t>(row) * width + col]; }

    std::size_t size() const { return data.size(); }

    bool same_dims(const ImagePlane& other) const {
        return width == other.width && height == other.height;
    }
};

inline bool all_finite(const ImagePlane& p) {
    for (double v : p.data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

inline double plane_mean(const ImagePlane& p) {
    double s = 0.0;
    for (double v : p.data) s += v;
    return s / static_cast<double>(p.size());
}

inline double plane_norm2(const ImagePlane& p) {
    double s = 0.0;
    for (double v : p.data) s += v * v;
    return std::sqrt(s);
}

enum class Colorspace { Gray, Rgb };

/// 1 (gray) or 3 (rgb) planes of identical dimensions.
struct MultiChannelImage {
    Colorspace colorspace = Colorspace::Gray;
    std::vector<ImagePlane> channels;

    int width() const { return channels.empty() ? 0 : channels.front().width; }
    int height() const { return channels.empty() ? 0 : channels.front().height; }
};

inline void validate_image(const MultiChannelImage& img) {
    if (img.channels.size() != 1 && img.channels.size() != 3) {
        throw std::invalid_argument("image must have 1 or 3 channels, got " +
                                    std::to_string(img.channels.size()));
    }
    if ((img.colorspace == Colorspace::Gray) != (img.channels.size() == 1)) {
        throw std::invalid_argument("colorspace tag does not match channel count");
    }
    for (const ImagePlane& ch : img.channels) {
        if (!ch.same_dims(img.channels.front())) {
            throw std::invalid_argument("all channels must share dimensions");
        }
    }
}

inline MultiChannelImage make_gray(ImagePlane plane) {
    MultiChannelImage img;
    img.colorspace = Colorspace::Gray;
    img.channels.push_back(std::move(plane));
    return img;
}

/// Decoded 8-bit image, interleaved samples, 1 or 3 channels.
struct RawImage {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<std::uint8_t> samples;
};

/// Converts integer samples in [0,255] to planes in [0,1].
inline MultiChannelImage normalize_intensities(const RawImage& raw) {
    if (raw.width <= 0 || raw.height <= 0) {
        throw std::invalid_argument("zero-dimension image");
    }
    if (raw.channels != 1 && raw.channels != 3) {
        throw std::invalid_argument("only 1- or 3-channel images are supported");
    }
    if (raw.samples.size() != static_cast<std::size_t>(raw.width) * raw.height * raw.channels) {
        throw std::invalid_argument("sample buffer does not match dimensions");
    }
    MultiChannelImage img;
    img.colorspace = raw.channels == 1 ? Colorspace::Gray : Colorspace::Rgb;
    img.channels.assign(raw.channels, ImagePlane(raw.width, raw.height));
    const std::uint8_t* s = raw.samples.data();
    for (int r = 0; r < raw.height; ++r) {
        for (int c = 0; c < raw.width; ++c) {
            for (int ch = 0; ch < raw.channels; ++ch) {
                img.channels[ch].at(r, c) = static_cast<double>(*s++) / 255.0;
            }
        }
    }
    return img;
}

/// Inverse of normalize_intensities; exact on data that came from 8-bit
/// samples, nearest-sample rounding (with clamping) otherwise.
inline RawImage denormalize_intensities(const MultiChannelImage& img) {
    validate_image(img);
    RawImage raw;
    raw.width = img.width();
    raw.height = img.height();
    raw.channels = static_cast<int>(img.channels.size());
    raw.samples.resize(static_cast<std::size_t>(raw.width) * raw.height * raw.channels);
    std::uint8_t* s = raw.samples.data();
    for (int r = 0; r < raw.height; ++r) {
        for (int c = 0; c < raw.width; ++c) {
            for (int ch = 0; ch < raw.channels; ++ch) {
                double v = img.channels[ch].at(r, c) * 255.0;
                long q = std::lround(v);
                if (q < 0) q = 0;
                if (q > 255) q = 255;
                *s++ = static_cast<std::uint8_t>(q);
            }
        }
    }
    return raw;
}

/// ITU-R 601 luminance projection; identity for gray images.
inline ImagePlane luminance(const MultiChannelImage& img) {
    validate_image(img);
    if (img.channels.size() == 1) return img.channels.front();
    const ImagePlane& r = img.channels[0];
    const ImagePlane& g = img.channels[1];
    const ImagePlane& b = img.channels[2];
    ImagePlane out(r.width, r.height);
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        out.data[i] = 0.299 * r.data[i] + 0.587 * g.data[i] + 0.114 * b.data[i];
    }
    return out;
}

/// Clamps intensities into [0,1]; applied only at final export.
inline ImagePlane clamp_unit(ImagePlane p) {
    for (double& v : p.data) {
        if (v < 0.0) v = 0.0;
        if (v > 1.0) v = 1.0;
    }
    return p;
}

inline MultiChannelImage clamp_unit(MultiChannelImage img) {
    for (ImagePlane& ch : img.channels) ch = clamp_unit(std::move(ch));
    return img;
}

}  // namespace kmdeblur
