// 2D spectral machinery: FFT wrappers, periodic convolution, derivative
// operators and the closed-form latent-image update.
//
// Everything here assumes periodic boundaries; the spectral division in
// solve_latent is the exact minimizer of the quadratic image energy only
// under that convention. Forward transforms are unnormalized, the inverse
// divides by width*height.

#pragma once

#include <fftw3.h>

#include <algorithm>
#include <complex>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <tuple>
#include <utility>
#include <vector>

#include "kmdeblur/image.hpp"
#include "kmdeblur/kernel.hpp"

namespace kmdeblur {

/// Full complex DFT coefficients, row-major, same dimensions as the
/// originating plane.
struct Spectrum {
    int width = 0;
    int height = 0;
    std::vector<std::complex<double>> coeffs;

    std::complex<double>& at(int row, int col) {
        return coeffs[static_cast<std::size_t>(row) * width + col];
    }
    std::complex<double> at(int row, int col) const {
        return coeffs[static_cast<std::size_t>(row) * width + col];
    }
};

namespace detail {

// Process-wide FFTW plan cache. Plans are created once per (h, w,
// direction) under a lock and reused via the new-array interface;
// FFTW_UNALIGNED keeps them valid for any caller buffer.
inline fftw_plan fft_plan(int height, int width, int sign) {
    static std::mutex mutex;
    static std::map<std::tuple<int, int, int>, fftw_plan> cache;
    std::lock_guard<std::mutex> lock(mutex);
    auto key = std::make_tuple(height, width, sign);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    std::vector<std::complex<double>> in(static_cast<std::size_t>(height) * width);
    std::vector<std::complex<double>> out(in.size());
    fftw_plan plan = fftw_plan_dft_2d(height, width, reinterpret_cast<fftw_complex*>(in.data()),
                                      reinterpret_cast<fftw_complex*>(out.data()), sign,
                                      FFTW_ESTIMATE | FFTW_UNALIGNED);
    cache.emplace(key, plan);
    return plan;
}

inline void execute(fftw_plan plan, const std::complex<double>* in, std::complex<double>* out) {
    fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(const_cast<std::complex<double>*>(in)),
                     reinterpret_cast<fftw_complex*>(out));
}

inline void check_dims(const ImagePlane& p) {
    if (p.width <= 0 || p.height <= 0 || p.data.empty()) {
        throw std::invalid_argument("zero-sized plane");
    }
}

}  // namespace detail

inline Spectrum fft2(const ImagePlane& p) {
    detail::check_dims(p);
    std::vector<std::complex<double>> in(p.data.begin(), p.data.end());
    Spectrum s;
    s.width = p.width;
    s.height = p.height;
    s.coeffs.resize(in.size());
    detail::execute(detail::fft_plan(p.height, p.width, FFTW_FORWARD), in.data(),
                    s.coeffs.data());
    return s;
}

/// Real part of the inverse transform, normalized by width*height.
inline ImagePlane ifft2(const Spectrum& s) {
    if (s.width <= 0 || s.height <= 0) throw std::invalid_argument("zero-sized spectrum");
    std::vector<std::complex<double>> out(s.coeffs.size());
    detail::execute(detail::fft_plan(s.height, s.width, FFTW_BACKWARD), s.coeffs.data(),
                    out.data());
    ImagePlane p(s.width, s.height);
    const double scale = 1.0 / (static_cast<double>(s.width) * s.height);
    for (std::size_t i = 0; i < out.size(); ++i) p.data[i] = out[i].real() * scale;
    return p;
}

/// Embeds a kernel into a width-by-height plane with its center cell at
/// index (0,0) and the quadrants wrapped circularly, so that spectral
/// multiplication implements centered circular convolution.
inline ImagePlane pad_kernel(const KernelGrid& k, int width, int height) {
    if (k.size > width || k.size > height) {
        throw std::invalid_argument("kernel larger than target dimensions");
    }
    ImagePlane p(width, height, 0.0);
    const int c = (k.size - 1) / 2;
    for (int row = 0; row < k.size; ++row) {
        for (int col = 0; col < k.size; ++col) {
            const int pr = ((row - c) % height + height) % height;
            const int pc = ((col - c) % width + width) % width;
            p.at(pr, pc) += k.at(row, col);
        }
    }
    return p;
}

/// Reads the h-by-h kernel support back out of a padded-layout plane
/// (inverse index map of pad_kernel).
inline KernelGrid extract_kernel_support(const ImagePlane& p, int kernel_size) {
    KernelGrid k;
    k.size = kernel_size;
    k.weights.assign(static_cast<std::size_t>(kernel_size) * kernel_size, 0.0);
    const int c = (kernel_size - 1) / 2;
    for (int row = 0; row < kernel_size; ++row) {
        for (int col = 0; col < kernel_size; ++col) {
            const int pr = ((row - c) % p.height + p.height) % p.height;
            const int pc = ((col - c) % p.width + p.width) % p.width;
            k.at(row, col) = p.at(pr, pc);
        }
    }
    return k;
}

/// Circular convolution computed spectrally.
inline ImagePlane convolve(const ImagePlane& img, const KernelGrid& k) {
    Spectrum si = fft2(img);
    Spectrum sk = fft2(pad_kernel(k, img.width, img.height));
    for (std::size_t i = 0; i < si.coeffs.size(); ++i) si.coeffs[i] *= sk.coeffs[i];
    return ifft2(si);
}

/// Spectra of the forward-difference stencils [-1, 1] along x (columns)
/// and its transpose along y (rows), laid out as in pad_kernel.
inline std::pair<Spectrum, Spectrum> grad_operators(int width, int height) {
    if (width < 2 || height < 2) {
        throw std::invalid_argument("gradient operators need dims >= 2x2");
    }
    ImagePlane dx(width, height, 0.0);
    dx.at(0, 0) = -1.0;
    dx.at(0, width - 1) = 1.0;
    ImagePlane dy(width, height, 0.0);
    dy.at(0, 0) = -1.0;
    dy.at(height - 1, 0) = 1.0;
    return {fft2(dx), fft2(dy)};
}

/// Closed-form minimizer of the quadratic image energy
///   |I*K - B|^2 + lambda3 (|dx I|^2 + |dy I|^2 + |I|^2)
/// under periodic boundaries, computed coefficient-wise in the spectrum.
inline ImagePlane solve_latent(const ImagePlane& B, const KernelGrid& K, double lambda3) {
    if (lambda3 < 0.0) throw std::invalid_argument("lambda3 must be >= 0");
    Spectrum sb = fft2(B);
    Spectrum sk = fft2(pad_kernel(K, B.width, B.height));
    auto [sdx, sdy] = grad_operators(B.width, B.height);
    Spectrum out;
    out.width = B.width;
    out.height = B.height;
    out.coeffs.resize(sb.coeffs.size());
    for (std::size_t i = 0; i < sb.coeffs.size(); ++i) {
        const std::complex<double> kc = sk.coeffs[i];
        const double denom = std::norm(kc) +
                             lambda3 * (std::norm(sdx.coeffs[i]) + std::norm(sdy.coeffs[i])) +
                             lambda3;
        if (std::abs(denom) < 1e-15) {
            throw NumericError("ill-posed latent solve: near-zero spectral denominator");
        }
        out.coeffs[i] = std::conj(kc) * sb.coeffs[i] / denom;
    }
    return ifft2(out);
}

/// The quadratic image energy minimized by solve_latent.
inline double image_energy(const ImagePlane& I, const KernelGrid& K, const ImagePlane& B,
                           double lambda3) {
    if (!I.same_dims(B)) throw std::invalid_argument("image energy: dimension mismatch");
    ImagePlane conv = convolve(I, K);
    double data = 0.0;
    for (std::size_t i = 0; i < conv.data.size(); ++i) {
        const double d = conv.data[i] - B.data[i];
        data += d * d;
    }
    double prior = 0.0;
    for (int r = 0; r < I.height; ++r) {
        for (int c = 0; c < I.width; ++c) {
            const double gx = I.at(r, (c + 1) % I.width) - I.at(r, c);
            const double gy = I.at((r + 1) % I.height, c) - I.at(r, c);
            const double v = I.at(r, c);
            prior += gx * gx + gy * gy + v * v;
        }
    }
    return data + lambda3 * prior;
}

/// Cosine ramp over ceil(h/2) border pixels toward the plane mean;
/// suppresses wrap-around ringing of the periodic model on natural
/// images. Off by default in the pipeline.
inline ImagePlane edge_taper(const ImagePlane& p, int kernel_size) {
    const int m = (kernel_size + 1) / 2;
    if (m <= 0 || 2 * m >= std::min(p.width, p.height)) return p;
    const double mean = plane_mean(p);
    auto ramp = [m](int dist) {
        if (dist >= m) return 1.0;
        return 0.5 * (1.0 - std::cos(std::numbers::pi * (dist + 0.5) / m));
    };
    ImagePlane out(p.width, p.height);
    for (int r = 0; r < p.height; ++r) {
        const double wr = ramp(std::min(r, p.height - 1 - r));
        for (int c = 0; c < p.width; ++c) {
            const double w = wr * ramp(std::min(c, p.width - 1 - c));
            out.at(r, c) = w * p.at(r, c) + (1.0 - w) * mean;
        }
    }
    return out;
}

}  // namespace kmdeblur
