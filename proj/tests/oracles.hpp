// Test-only reference implementations, independent of the spectral code
// paths they validate: a direct O(n^4) DFT, brute-force circular spatial
// convolution, a dense normal-equation solve of the image energy, and
// finite-difference helpers.

#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "kmdeblur/image.hpp"
#include "kmdeblur/kernel.hpp"

namespace kmdeblur::oracles {

/// Direct double-loop 2D DFT (unnormalized forward convention).
inline std::vector<std::complex<double>> dft2_direct(const ImagePlane& p) {
    const int H = p.height, W = p.width;
    std::vector<std::complex<double>> out(static_cast<std::size_t>(H) * W);
    for (int u = 0; u < H; ++u) {
        for (int v = 0; v < W; ++v) {
            std::complex<double> acc(0.0, 0.0);
            for (int r = 0; r < H; ++r) {
                for (int c = 0; c < W; ++c) {
                    const double phase = -2.0 * std::numbers::pi *
                                         (static_cast<double>(u) * r / H +
                                          static_cast<double>(v) * c / W);
                    acc += p.at(r, c) * std::complex<double>(std::cos(phase), std::sin(phase));
                }
            }
            out[static_cast<std::size_t>(u) * W + v] = acc;
        }
    }
    return out;
}

/// Brute-force circular convolution with a centered kernel:
/// out(r,c) = sum_{a,b} K(a,b) * img((r-a+cK) mod H, (c-b+cK) mod W).
inline ImagePlane conv_circular_brute(const ImagePlane& img, const KernelGrid& k) {
    const int H = img.height, W = img.width, h = k.size;
    const int ck = (h - 1) / 2;
    ImagePlane out(W, H, 0.0);
    for (int r = 0; r < H; ++r) {
        for (int c = 0; c < W; ++c) {
            double acc = 0.0;
            for (int a = 0; a < h; ++a) {
                for (int b = 0; b < h; ++b) {
                    const int rr = ((r - a + ck) % H + H) % H;
                    const int cc = ((c - b + ck) % W + W) % W;
                    acc += k.at(a, b) * img.at(rr, cc);
                }
            }
            out.at(r, c) = acc;
        }
    }
    return out;
}

/// Dense solve of the normal equations of the image energy
///   (A^T A + lambda3 (Dx^T Dx + Dy^T Dy) + lambda3 I) x = A^T b
/// built from explicit circulant matrices and factored with
/// partial-pivot Gaussian elimination. For small instances only.
inline std::vector<double> solve_dense_normal_eq(const ImagePlane& B, const KernelGrid& K,
                                                 double lambda3) {
    const int H = B.height, W = B.width;
    const int n = H * W;
    auto idx = [W](int r, int c) { return r * W + c; };

    // Circulant convolution matrix rows via the brute-force operator on
    // unit vectors.
    std::vector<std::vector<double>> A(n, std::vector<double>(n, 0.0));
    for (int col = 0; col < n; ++col) {
        ImagePlane e(W, H, 0.0);
        e.data[col] = 1.0;
        ImagePlane col_img = conv_circular_brute(e, K);
        for (int row = 0; row < n; ++row) A[row][col] = col_img.data[row];
    }
    std::vector<std::vector<double>> Dx(n, std::vector<double>(n, 0.0));
    std::vector<std::vector<double>> Dy(n, std::vector<double>(n, 0.0));
    for (int r = 0; r < H; ++r) {
        for (int c = 0; c < W; ++c) {
            Dx[idx(r, c)][idx(r, (c + 1) % W)] += 1.0;
            Dx[idx(r, c)][idx(r, c)] -= 1.0;
            Dy[idx(r, c)][idx((r + 1) % H, c)] += 1.0;
            Dy[idx(r, c)][idx(r, c)] -= 1.0;
        }
    }

    std::vector<std::vector<double>> M(n, std::vector<double>(n, 0.0));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            double aa = 0.0, dxx = 0.0, dyy = 0.0;
            for (int k2 = 0; k2 < n; ++k2) {
                aa += A[k2][i] * A[k2][j];
                dxx += Dx[k2][i] * Dx[k2][j];
                dyy += Dy[k2][i] * Dy[k2][j];
            }
            M[i][j] = aa + lambda3 * (dxx + dyy) + (i == j ? lambda3 : 0.0);
        }
    }
    std::vector<double> rhs(n, 0.0);
    for (int i = 0; i < n; ++i) {
        for (int k2 = 0; k2 < n; ++k2) rhs[i] += A[k2][i] * B.data[k2];
    }

    // Gaussian elimination with partial pivoting.
    for (int p = 0; p < n; ++p) {
        int pivot = p;
        for (int r = p + 1; r < n; ++r) {
            if (std::fabs(M[r][p]) > std::fabs(M[pivot][p])) pivot = r;
        }
        std::swap(M[p], M[pivot]);
        std::swap(rhs[p], rhs[pivot]);
        if (std::fabs(M[p][p]) < 1e-14) throw std::runtime_error("dense oracle: singular system");
        for (int r = p + 1; r < n; ++r) {
            const double f = M[r][p] / M[p][p];
            if (f == 0.0) continue;
            for (int c = p; c < n; ++c) M[r][c] -= f * M[p][c];
            rhs[r] -= f * rhs[p];
        }
    }
    std::vector<double> x(n, 0.0);
    for (int p = n - 1; p >= 0; --p) {
        double s = rhs[p];
        for (int c = p + 1; c < n; ++c) s -= M[p][c] * x[c];
        x[p] = s / M[p][p];
    }
    return x;
}

/// max_i |a_i - b_i| / max(max_i |b_i|, floor)
inline double relative_max_deviation(std::span<const double> a, std::span<const double> b,
                                     double floor = 1e-12) {
    double num = 0.0, den = floor;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num = std::max(num, std::fabs(a[i] - b[i]));
        den = std::max(den, std::fabs(b[i]));
    }
    return num / den;
}

inline ImagePlane random_plane(int width, int height, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    ImagePlane p(width, height);
    for (double& v : p.data) v = dist(rng);
    return p;
}

inline KernelGrid random_kernel(int size, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    std::vector<double> raw(static_cast<std::size_t>(size) * size);
    for (double& v : raw) v = dist(rng) + 1e-3;
    return normalize_kernel(size, std::move(raw));
}

}  // namespace kmdeblur::oracles
