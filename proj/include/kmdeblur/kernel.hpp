// Mixture of structure-enhanced Gaussian base kernels.
//
// A blur kernel is the unit-sum discretization of a sum of N Gaussian
// bumps, each optionally enhanced with per-axis scales, a center offset
// and a rotation. Proportionality constants are dropped: the grid is
// normalized as a whole, so per-base constants are unidentifiable.
//
// Grid cell (row, col) maps to the relative coordinate
//   (x, y) = (col - c, c - row),  c = (h-1)/2,
// so x grows rightward, y grows upward and the center cell is (0,0).

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "kmdeblur/config.hpp"
#include "kmdeblur/image.hpp"

namespace kmdeblur {

/// Parameter block of one base kernel: diag(sigma_x_sq, sigma_y_sq)
/// covariance, center offset (mu_x, mu_y) in pixels, rotation theta in
/// radians. Variants freeze a suffix of these.
struct BaseKernelParams {
    double sigma_x_sq = 1.0;
    double sigma_y_sq = 1.0;
    double mu_x = 0.0;
    double mu_y = 0.0;
    double theta = 0.0;
};

/// The optimization variable: N base kernels plus the structural variant.
struct MixtureParams {
    KernelVariant variant = KernelVariant::Center;
    std::vector<BaseKernelParams> bases;
};

/// Rendered, normalized h-by-h blur kernel. Row-major like ImagePlane.
struct KernelGrid {
    int size = 0;
    std::vector<double> weights;

    double& at(int row, int col) { return weights[static_cast<std::size_t>(row) * size + col]; }
    double at(int row, int col) const {
        return weights[static_cast<std::size_t>(row) * size + col];
    }
    double sum() const {
        double s = 0.0;
        for (double w : weights) s += w;
        return s;
    }
};

/// Precomputed relative coordinates for every cell of an h-by-h grid.
struct KernelRenderContext {
    int size = 0;
    std::vector<double> xs;  // per cell, row-major
    std::vector<double> ys;

    explicit KernelRenderContext(int h) : size(h) {
        if (h < 1 || h % 2 == 0) {
            throw std::invalid_argument("kernel size must be odd and positive, got " +
                                        std::to_string(h));
        }
        const int c = (h - 1) / 2;
        xs.resize(static_cast<std::size_t>(h) * h);
        ys.resize(xs.size());
        for (int row = 0; row < h; ++row) {
            for (int col = 0; col < h; ++col) {
                std::size_t i = static_cast<std::size_t>(row) * h + col;
                xs[i] = static_cast<double>(col - c);
                ys[i] = static_cast<double>(c - row);
            }
        }
    }
};

inline void check_finite(const BaseKernelParams& p) {
    if (!std::isfinite(p.sigma_x_sq) || !std::isfinite(p.sigma_y_sq) || !std::isfinite(p.mu_x) ||
        !std::isfinite(p.mu_y) || !std::isfinite(p.theta)) {
        throw std::invalid_argument("non-finite base kernel parameters");
    }
    if (!(p.sigma_x_sq > 0.0) || !(p.sigma_y_sq > 0.0)) {
        throw std::invalid_argument("base kernel variances must be positive");
    }
}

namespace detail {

// exp(-1/2 (Rp - mu)^T Sigma^-1 (Rp - mu)) without parameter checks.
inline double eval_base_unchecked(const BaseKernelParams& p, KernelVariant variant, double x,
                                  double y) {
    double ux = x;
    double uy = y;
    if (variant == KernelVariant::Rotation && p.theta != 0.0) {
        const double ct = std::cos(p.theta);
        const double st = std::sin(p.theta);
        ux = ct * x - st * y;
        uy = st * x + ct * y;
    }
    ux -= p.mu_x;
    uy -= p.mu_y;
    const double q = ux * ux / p.sigma_x_sq + uy * uy / p.sigma_y_sq;
    return std::exp(-0.5 * q);
}

}  // namespace detail

/// One base kernel evaluated at relative coordinate (x, y).
inline double eval_base(const BaseKernelParams& p, KernelVariant variant, double x, double y) {
    check_finite(p);
    return detail::eval_base_unchecked(p, variant, x, y);
}

/// Unnormalized mixture: per cell, the sum of the N base kernels.
inline std::vector<double> render_raw(const MixtureParams& params,
                                      const KernelRenderContext& ctx) {
    if (params.bases.empty()) throw std::invalid_argument("mixture needs at least one base");
    for (const BaseKernelParams& b : params.bases) check_finite(b);
    std::vector<double> raw(ctx.xs.size(), 0.0);
    for (const BaseKernelParams& b : params.bases) {
        for (std::size_t i = 0; i < raw.size(); ++i) {
            raw[i] += detail::eval_base_unchecked(b, params.variant, ctx.xs[i], ctx.ys[i]);
        }
    }
    return raw;
}

/// Divides a nonnegative grid by its total so the weights sum to 1.
inline KernelGrid normalize_kernel(int h, std::vector<double> raw) {
    double total = 0.0;
    for (double v : raw) {
        if (!std::isfinite(v) || v < 0.0) {
            throw NumericError("kernel grid has negative or non-finite entries");
        }
        total += v;
    }
    if (!(total > 0.0)) {
        throw NumericError("kernel grid numerically vanished (zero total weight)");
    }
    for (double& v : raw) v /= total;
    KernelGrid grid;
    grid.size = h;
    grid.weights = std::move(raw);
    return grid;
}

/// Renders the mixture and normalizes it to unit sum.
inline KernelGrid render_mixture(const MixtureParams& params, const KernelRenderContext& ctx) {
    return normalize_kernel(ctx.size, render_raw(params, ctx));
}

// ---------------------------------------------------------------------------
// Reparameterized optimization space.
//
// Variances are optimized as s = log sigma^2 so any CG step keeps them
// positive; centers stay raw and are box-projected after accepted steps;
// theta stays raw and is wrapped to [0, pi).
// ---------------------------------------------------------------------------

enum class ParamKind { LogSigmaX, LogSigmaY, MuX, MuY, Theta };

/// Free scalars per base for a variant, in packing order. For Simple the
/// single LogSigmaX entry drives both axes.
inline std::span<const ParamKind> free_params(KernelVariant v) {
    static constexpr std::array<ParamKind, 1> kSimple = {ParamKind::LogSigmaX};
    static constexpr std::array<ParamKind, 2> kScale = {ParamKind::LogSigmaX,
                                                        ParamKind::LogSigmaY};
    static constexpr std::array<ParamKind, 4> kCenter = {ParamKind::LogSigmaX,
                                                         ParamKind::LogSigmaY, ParamKind::MuX,
                                                         ParamKind::MuY};
    static constexpr std::array<ParamKind, 5> kRotation = {ParamKind::LogSigmaX,
                                                           ParamKind::LogSigmaY, ParamKind::MuX,
                                                           ParamKind::MuY, ParamKind::Theta};
    switch (v) {
        case KernelVariant::Simple: return kSimple;
        case KernelVariant::Scale: return kScale;
        case KernelVariant::Center: return kCenter;
        case KernelVariant::Rotation: return kRotation;
    }
    return kSimple;
}

inline int params_per_base(KernelVariant v) { return static_cast<int>(free_params(v).size()); }

inline std::vector<double> pack_params(const MixtureParams& params) {
    std::span<const ParamKind> kinds = free_params(params.variant);
    std::vector<double> packed;
    packed.reserve(params.bases.size() * kinds.size());
    for (const BaseKernelParams& b : params.bases) {
        for (ParamKind k : kinds) {
            switch (k) {
                case ParamKind::LogSigmaX: packed.push_back(std::log(b.sigma_x_sq)); break;
                case ParamKind::LogSigmaY: packed.push_back(std::log(b.sigma_y_sq)); break;
                case ParamKind::MuX: packed.push_back(b.mu_x); break;
                case ParamKind::MuY: packed.push_back(b.mu_y); break;
                case ParamKind::Theta: packed.push_back(b.theta); break;
            }
        }
    }
    return packed;
}

inline MixtureParams unpack_params(std::span<const double> packed, KernelVariant variant,
                                   int n_bases) {
    std::span<const ParamKind> kinds = free_params(variant);
    if (packed.size() != static_cast<std::size_t>(n_bases) * kinds.size()) {
        throw std::invalid_argument("packed parameter vector has wrong length");
    }
    MixtureParams params;
    params.variant = variant;
    params.bases.resize(n_bases);
    std::size_t i = 0;
    for (BaseKernelParams& b : params.bases) {
        b = BaseKernelParams{};
        for (ParamKind k : kinds) {
            const double v = packed[i++];
            switch (k) {
                case ParamKind::LogSigmaX:
                    b.sigma_x_sq = std::exp(v);
                    if (variant == KernelVariant::Simple) b.sigma_y_sq = b.sigma_x_sq;
                    break;
                case ParamKind::LogSigmaY: b.sigma_y_sq = std::exp(v); break;
                case ParamKind::MuX: b.mu_x = v; break;
                case ParamKind::MuY: b.mu_y = v; break;
                case ParamKind::Theta: b.theta = v; break;
            }
        }
    }
    return params;
}

/// Projects centers into the grid box and wraps theta to [0, pi).
/// Wrapping theta by pi maps the base to itself with a negated center,
/// so mu is flipped alongside to keep the rendered kernel identical.
inline MixtureParams project_params(MixtureParams params, int kernel_size) {
    const double bound = (kernel_size - 1) / 2.0;
    for (BaseKernelParams& b : params.bases) {
        if (params.variant == KernelVariant::Rotation) {
            const double pi = std::numbers::pi;
            double wraps = std::floor(b.theta / pi);
            b.theta -= wraps * pi;
            if (b.theta >= pi) {  // guard against floor rounding at the boundary
                b.theta -= pi;
                wraps += 1.0;
            }
            if (std::fmod(std::fabs(wraps), 2.0) == 1.0) {
                b.mu_x = -b.mu_x;
                b.mu_y = -b.mu_y;
            }
        }
        if (params.variant == KernelVariant::Center ||
            params.variant == KernelVariant::Rotation) {
            b.mu_x = std::clamp(b.mu_x, -bound, bound);
            b.mu_y = std::clamp(b.mu_y, -bound, bound);
        }
    }
    return params;
}

/// Partial derivative grid of the *unnormalized* mixture with respect to
/// one reparameterized scalar of one base. Frozen parameters (not free
/// under the variant) yield an all-zero grid.
inline std::vector<double> jacobian_grid(const MixtureParams& params,
                                         const KernelRenderContext& ctx, int base_index,
                                         ParamKind kind) {
    const BaseKernelParams& p = params.bases.at(base_index);
    check_finite(p);
    std::vector<double> grid(ctx.xs.size(), 0.0);

    std::span<const ParamKind> kinds = free_params(params.variant);
    bool is_free = false;
    for (ParamKind k : kinds) is_free = is_free || k == kind;
    if (!is_free) return grid;

    const bool rotated = params.variant == KernelVariant::Rotation;
    const double ct = std::cos(p.theta);
    const double st = std::sin(p.theta);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double x = ctx.xs[i];
        const double y = ctx.ys[i];
        double rx = x, ry = y;
        if (rotated) {
            rx = ct * x - st * y;
            ry = st * x + ct * y;
        }
        const double ux = rx - p.mu_x;
        const double uy = ry - p.mu_y;
        const double g = std::exp(-0.5 * (ux * ux / p.sigma_x_sq + uy * uy / p.sigma_y_sq));
        switch (kind) {
            case ParamKind::LogSigmaX:
                if (params.variant == KernelVariant::Simple) {
                    // shared log-variance drives both axes
                    grid[i] = g * (ux * ux + uy * uy) / (2.0 * p.sigma_x_sq);
                } else {
                    grid[i] = g * ux * ux / (2.0 * p.sigma_x_sq);
                }
                break;
            case ParamKind::LogSigmaY: grid[i] = g * uy * uy / (2.0 * p.sigma_y_sq); break;
            case ParamKind::MuX: grid[i] = g * ux / p.sigma_x_sq; break;
            case ParamKind::MuY: grid[i] = g * uy / p.sigma_y_sq; break;
            case ParamKind::Theta: {
                // dR/dtheta applied to p
                const double dx = -st * x - ct * y;
                const double dy = ct * x - st * y;
                grid[i] = -g * (ux * dx / p.sigma_x_sq + uy * dy / p.sigma_y_sq);
                break;
            }
        }
    }
    return grid;
}

/// One derivative grid per packed scalar, base-major, matching the
/// pack_params layout.
inline std::vector<std::vector<double>> mixture_jacobian(const MixtureParams& params,
                                                         const KernelRenderContext& ctx) {
    std::span<const ParamKind> kinds = free_params(params.variant);
    std::vector<std::vector<double>> jac;
    jac.reserve(params.bases.size() * kinds.size());
    for (std::size_t b = 0; b < params.bases.size(); ++b) {
        for (ParamKind k : kinds) {
            jac.push_back(jacobian_grid(params, ctx, static_cast<int>(b), k));
        }
    }
    return jac;
}

// ---------------------------------------------------------------------------
// Export formats
// ---------------------------------------------------------------------------

/// h lines of h space-separated decimals, row 0 first. Full precision so
/// equal kernels serialize to identical bytes.
inline void write_kernel_text(std::ostream& os, const KernelGrid& k) {
    char buf[32];
    for (int row = 0; row < k.size; ++row) {
        for (int col = 0; col < k.size; ++col) {
            std::snprintf(buf, sizeof(buf), "%.17g", k.at(row, col));
            os << buf << (col + 1 == k.size ? "" : " ");
        }
        os << '\n';
    }
}

/// 8-bit grayscale heatmap, scaled so the max weight maps to 255.
inline RawImage kernel_heatmap(const KernelGrid& k) {
    double maxw = 0.0;
    for (double w : k.weights) maxw = std::max(maxw, w);
    RawImage raw;
    raw.width = k.size;
    raw.height = k.size;
    raw.channels = 1;
    raw.samples.resize(k.weights.size());
    for (std::size_t i = 0; i < k.weights.size(); ++i) {
        raw.samples[i] =
            maxw > 0.0 ? static_cast<std::uint8_t>(std::lround(k.weights[i] / maxw * 255.0)) : 0;
    }
    return raw;
}

}  // namespace kmdeblur
