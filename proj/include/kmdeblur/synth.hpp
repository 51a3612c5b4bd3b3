// Ground-truth test-pair factory: degrade clean images with known
// mixture kernels and additive Gaussian noise, B = I*K + n, using the
// same periodic convolution as the solver. Stands in for the private
// satellite dataset; noise tiers are labeled low/high only.
//
// Clean test images are generated procedurally (checkerboards, disks,
// line gratings) and quantized to 8-bit levels so codec round trips are
// exact.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "kmdeblur/fft.hpp"
#include "kmdeblur/image.hpp"
#include "kmdeblur/kernel.hpp"

namespace kmdeblur {

struct DegradationSpec {
    std::string name;
    std::variant<MixtureParams, KernelGrid> kernel;
    int kernel_size = 15;  // used when kernel holds MixtureParams
    double noise_sigma = 0.0;
    std::uint64_t seed = 0;
};

struct DegradedPair {
    MultiChannelImage blurred;
    KernelGrid kernel;
};

inline KernelGrid render_spec_kernel(const DegradationSpec& spec) {
    if (std::holds_alternative<KernelGrid>(spec.kernel)) {
        return std::get<KernelGrid>(spec.kernel);
    }
    KernelRenderContext ctx(spec.kernel_size);
    return render_mixture(std::get<MixtureParams>(spec.kernel), ctx);
}

/// B = I*K + n with seeded per-pixel, per-channel Gaussian noise on the
/// [0,1] scale. Returns the exact kernel grid used.
inline DegradedPair degrade(const MultiChannelImage& clean, const DegradationSpec& spec) {
    validate_image(clean);
    if (spec.noise_sigma < 0.0) throw std::invalid_argument("noise_sigma must be >= 0");
    KernelGrid kernel = render_spec_kernel(spec);
    if (clean.width() < kernel.size || clean.height() < kernel.size) {
        throw std::invalid_argument("image dimensions must be at least the kernel size");
    }
    DegradedPair out;
    out.blurred = clean;
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> noise(0.0, spec.noise_sigma);
    for (std::size_t ch = 0; ch < clean.channels.size(); ++ch) {
        out.blurred.channels[ch] = convolve(clean.channels[ch], kernel);
        if (spec.noise_sigma > 0.0) {
            for (double& v : out.blurred.channels[ch].data) v += noise(rng);
        }
    }
    out.kernel = std::move(kernel);
    return out;
}

namespace detail {

inline MixtureParams one_base(KernelVariant v, BaseKernelParams b) {
    MixtureParams p;
    p.variant = v;
    p.bases = {b};
    return p;
}

inline MixtureParams two_base(KernelVariant v, BaseKernelParams a, BaseKernelParams b) {
    MixtureParams p;
    p.variant = v;
    p.bases = {a, b};
    return p;
}

}  // namespace detail

/// Named degradation presets: six kernel shapes drawn from the base
/// kernel taxonomy, each at a low-noise (sigma 0.01) and high-noise
/// (sigma 0.04) tier.
inline std::vector<DegradationSpec> preset_scenarios() {
    std::vector<DegradationSpec> shapes;

    DegradationSpec circular;
    circular.name = "circular";
    circular.kernel = detail::one_base(KernelVariant::Simple, {4.0, 4.0, 0, 0, 0});
    shapes.push_back(circular);

    DegradationSpec concentric;
    concentric.name = "concentric";
    concentric.kernel = detail::two_base(KernelVariant::Simple, {1.0, 1.0, 0, 0, 0},
                                         {9.0, 9.0, 0, 0, 0});
    shapes.push_back(concentric);

    DegradationSpec elliptic;
    elliptic.name = "elliptic";
    elliptic.kernel = detail::one_base(KernelVariant::Scale, {9.0, 2.0, 0, 0, 0});
    shapes.push_back(elliptic);

    DegradationSpec cross;
    cross.name = "cross-lines";
    cross.kernel = detail::two_base(KernelVariant::Scale, {9.0, 0.5, 0, 0, 0},
                                    {0.5, 9.0, 0, 0, 0});
    shapes.push_back(cross);

    // Two offset sources; the rendered center of mass sits 2 px off the
    // grid center. Larger offsets only add displacement, which is a
    // gauge blind deconvolution cannot observe.
    DegradationSpec two_source;
    two_source.name = "two-source";
    two_source.kernel = detail::two_base(KernelVariant::Center, {2.0, 1.0, 3.7, 1.0, 0},
                                         {1.0, 2.0, 0.7, -1.0, 0});
    shapes.push_back(two_source);

    DegradationSpec rotated;
    rotated.name = "rotated";
    rotated.kernel =
        detail::one_base(KernelVariant::Rotation, {8.0, 1.0, 0.0, 0.0, 0.5235987755982988});
    shapes.push_back(rotated);

    std::vector<DegradationSpec> out;
    std::uint64_t seed = 1;
    for (const DegradationSpec& shape : shapes) {
        DegradationSpec low = shape;
        low.name += "-low";
        low.noise_sigma = 0.01;
        low.seed = seed++;
        out.push_back(low);
        DegradationSpec high = shape;
        high.name += "-high";
        high.noise_sigma = 0.04;
        high.seed = seed++;
        out.push_back(high);
    }
    return out;
}

inline DegradationSpec find_scenario(const std::string& name) {
    for (DegradationSpec& s : preset_scenarios()) {
        if (s.name == name) return s;
    }
    std::string known;
    for (const DegradationSpec& s : preset_scenarios()) {
        known += known.empty() ? s.name : ", " + s.name;
    }
    throw std::invalid_argument("unknown scenario '" + name + "'; available: " + known);
}

// ---------------------------------------------------------------------------
// Procedural clean images. All values are exact 8-bit levels k/255.
// ---------------------------------------------------------------------------

namespace detail {

inline double level(int k) { return static_cast<double>(k) / 255.0; }

}  // namespace detail

inline ImagePlane checkerboard(int width, int height, int cell, int lo = 64, int hi = 192) {
    ImagePlane p(width, height);
    for (int r = 0; r < height; ++r) {
        for (int c = 0; c < width; ++c) {
            const bool on = ((r / cell) + (c / cell)) % 2 == 0;
            p.at(r, c) = detail::level(on ? hi : lo);
        }
    }
    return p;
}

/// Hard-edged disks of varied radius and intensity on a dark background;
/// a rough stand-in for a bright object against space.
inline ImagePlane disks(int width, int height) {
    ImagePlane p(width, height, detail::level(30));
    struct Disk {
        double cx, cy, radius;
        int value;
    };
    const Disk shapes[] = {
        {0.28, 0.30, 0.16, 230}, {0.68, 0.26, 0.10, 150}, {0.52, 0.62, 0.21, 190},
        {0.22, 0.74, 0.08, 100}, {0.80, 0.72, 0.12, 250},
    };
    const double scale = std::min(width, height);
    for (int r = 0; r < height; ++r) {
        for (int c = 0; c < width; ++c) {
            for (const Disk& d : shapes) {
                const double dx = c - d.cx * width;
                const double dy = r - d.cy * height;
                if (dx * dx + dy * dy <= (d.radius * scale) * (d.radius * scale)) {
                    p.at(r, c) = detail::level(d.value);
                }
            }
        }
    }
    return p;
}

/// Diagonal square-wave grating.
inline ImagePlane gratings(int width, int height, int period = 9, int lo = 40, int hi = 215) {
    ImagePlane p(width, height);
    for (int r = 0; r < height; ++r) {
        for (int c = 0; c < width; ++c) {
            const bool on = ((r + c) / period) % 2 == 0;
            p.at(r, c) = detail::level(on ? hi : lo);
        }
    }
    return p;
}

/// Procedural image registry used by the CLI and tests.
inline ImagePlane procedural_image(const std::string& name, int width, int height) {
    if (name == "checkerboard") return checkerboard(width, height, 8);
    if (name == "disks") return disks(width, height);
    if (name == "gratings") return gratings(width, height);
    throw std::invalid_argument("unknown procedural image '" + name +
                                "'; available: checkerboard, disks, gratings");
}

}  // namespace kmdeblur
