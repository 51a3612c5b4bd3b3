#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <random>

#include "kmdeblur/fft.hpp"
#include "kmdeblur/synth.hpp"
#include "oracles.hpp"

namespace kmdeblur {
namespace {

TEST(Fft2, ConstantPlaneHasDcOnlySpectrum) {
    ImagePlane p(6, 4, 0.37);
    Spectrum s = fft2(p);
    EXPECT_NEAR(s.at(0, 0).real(), 0.37 * 24, 1e-12);
    EXPECT_NEAR(s.at(0, 0).imag(), 0.0, 1e-12);
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 6; ++c) {
            if (r == 0 && c == 0) continue;
            EXPECT_NEAR(std::abs(s.at(r, c)), 0.0, 1e-12);
        }
    }
}

TEST(Fft2, UnitImpulseHasFlatSpectrum) {
    ImagePlane p(5, 3, 0.0);
    p.at(0, 0) = 1.0;
    Spectrum s = fft2(p);
    for (const std::complex<double>& c : s.coeffs) {
        EXPECT_NEAR(c.real(), 1.0, 1e-12);
        EXPECT_NEAR(c.imag(), 0.0, 1e-12);
    }
}

TEST(Fft2, MatchesDirectDftOnRandomPlanes) {
    std::mt19937_64 rng(5);
    for (int size : {3, 4, 6, 7, 8}) {
        ImagePlane p = oracles::random_plane(size, size, rng);
        Spectrum s = fft2(p);
        std::vector<std::complex<double>> direct = oracles::dft2_direct(p);
        for (std::size_t i = 0; i < direct.size(); ++i) {
            EXPECT_NEAR(std::abs(s.coeffs[i] - direct[i]), 0.0, 1e-9);
        }
    }
}

TEST(Fft2, RoundTripIdentity) {
    std::mt19937_64 rng(6);
    ImagePlane p = oracles::random_plane(8, 8, rng);
    ImagePlane back = ifft2(fft2(p));
    for (std::size_t i = 0; i < p.data.size(); ++i) {
        EXPECT_NEAR(back.data[i], p.data[i], 1e-10);
    }
}

TEST(Fft2, ParsevalIdentity) {
    std::mt19937_64 rng(7);
    ImagePlane p = oracles::random_plane(9, 7, rng);
    Spectrum s = fft2(p);
    double spatial = 0.0;
    for (double v : p.data) spatial += v * v;
    double spectral = 0.0;
    for (const std::complex<double>& c : s.coeffs) spectral += std::norm(c);
    spectral /= static_cast<double>(p.size());
    EXPECT_NEAR(spectral / spatial, 1.0, 1e-8);
}

TEST(Fft2, RejectsZeroSizedPlane) {
    ImagePlane p;
    EXPECT_THROW(fft2(p), std::invalid_argument);
}

TEST(PadKernel, DeltaKernelToOrigin) {
    KernelGrid delta;
    delta.size = 3;
    delta.weights = {0, 0, 0, 0, 1, 0, 0, 0, 0};
    ImagePlane p = pad_kernel(delta, 8, 8);
    EXPECT_DOUBLE_EQ(p.at(0, 0), 1.0);
    double sum = 0.0;
    for (double v : p.data) sum += v;
    EXPECT_DOUBLE_EQ(sum, 1.0);
}

TEST(PadKernel, QuadrantWrapLayout) {
    // 3x3 kernel with distinct entries 1..9 into 6x6, checked cell by cell
    KernelGrid k;
    k.size = 3;
    k.weights = {1, 2, 3, 4, 5, 6, 7, 8, 9};
    ImagePlane p = pad_kernel(k, 6, 6);
    // center (5) lands at (0,0); right neighbor (6) at (0,1); left (4) wraps
    EXPECT_DOUBLE_EQ(p.at(0, 0), 5.0);
    EXPECT_DOUBLE_EQ(p.at(0, 1), 6.0);
    EXPECT_DOUBLE_EQ(p.at(0, 5), 4.0);
    EXPECT_DOUBLE_EQ(p.at(1, 0), 8.0);
    EXPECT_DOUBLE_EQ(p.at(5, 0), 2.0);
    EXPECT_DOUBLE_EQ(p.at(5, 5), 1.0);
    EXPECT_DOUBLE_EQ(p.at(5, 1), 3.0);
    EXPECT_DOUBLE_EQ(p.at(1, 5), 7.0);
    EXPECT_DOUBLE_EQ(p.at(1, 1), 9.0);
    // all other cells zero
    double sum = 0.0;
    for (double v : p.data) sum += v;
    EXPECT_DOUBLE_EQ(sum, 45.0);
}

TEST(PadKernel, SymmetricKernelHasRealSpectrum) {
    KernelRenderContext ctx(5);
    MixtureParams params;
    params.variant = KernelVariant::Scale;
    params.bases = {{2.0, 1.0, 0, 0, 0}};
    KernelGrid k = render_mixture(params, ctx);
    Spectrum s = fft2(pad_kernel(k, 12, 12));
    for (const std::complex<double>& c : s.coeffs) {
        EXPECT_NEAR(c.imag(), 0.0, 1e-10);
    }
}

TEST(PadKernel, RejectsKernelLargerThanImage) {
    KernelGrid k;
    k.size = 9;
    k.weights.assign(81, 1.0 / 81);
    EXPECT_THROW(pad_kernel(k, 8, 8), std::invalid_argument);
}

TEST(Convolve, DeltaKernelIsIdentity) {
    std::mt19937_64 rng(8);
    ImagePlane p = oracles::random_plane(10, 6, rng);
    KernelGrid delta;
    delta.size = 3;
    delta.weights = {0, 0, 0, 0, 1, 0, 0, 0, 0};
    ImagePlane out = convolve(p, delta);
    for (std::size_t i = 0; i < p.data.size(); ++i) {
        EXPECT_NEAR(out.data[i], p.data[i], 1e-10);
    }
}

TEST(Convolve, UnitSumKernelFixesConstantPlane) {
    std::mt19937_64 rng(9);
    KernelGrid k = oracles::random_kernel(5, rng);
    ImagePlane p(8, 8, 0.42);
    ImagePlane out = convolve(p, k);
    for (double v : out.data) EXPECT_NEAR(v, 0.42, 1e-12);
}

TEST(Convolve, MatchesBruteForceCircularConvolution) {
    std::mt19937_64 rng(10);
    for (int trial = 0; trial < 10; ++trial) {
        ImagePlane img = oracles::random_plane(8, 8, rng);
        KernelGrid k = oracles::random_kernel(3, rng);
        ImagePlane fast = convolve(img, k);
        ImagePlane slow = oracles::conv_circular_brute(img, k);
        for (std::size_t i = 0; i < fast.data.size(); ++i) {
            EXPECT_NEAR(fast.data[i], slow.data[i], 1e-9);
        }
    }
}

TEST(Convolve, LinearInImageArgument) {
    std::mt19937_64 rng(11);
    ImagePlane p = oracles::random_plane(8, 8, rng);
    ImagePlane q = oracles::random_plane(8, 8, rng);
    KernelGrid k = oracles::random_kernel(5, rng);
    const double a = 1.7, b = -0.4;
    ImagePlane combo(8, 8);
    for (std::size_t i = 0; i < combo.data.size(); ++i) {
        combo.data[i] = a * p.data[i] + b * q.data[i];
    }
    ImagePlane lhs = convolve(combo, k);
    ImagePlane cp = convolve(p, k), cq = convolve(q, k);
    for (std::size_t i = 0; i < lhs.data.size(); ++i) {
        EXPECT_NEAR(lhs.data[i], a * cp.data[i] + b * cq.data[i], 1e-10);
    }
}

TEST(Convolve, PreservesMeanIntensity) {
    std::mt19937_64 rng(12);
    ImagePlane p = oracles::random_plane(12, 10, rng);
    KernelGrid k = oracles::random_kernel(5, rng);
    EXPECT_NEAR(plane_mean(convolve(p, k)), plane_mean(p), 1e-12);
}

TEST(GradOperators, ConstantPlaneHasZeroDerivative) {
    auto [sdx, sdy] = grad_operators(6, 6);
    ImagePlane c(6, 6, 0.8);
    Spectrum sc = fft2(c);
    for (std::size_t i = 0; i < sc.coeffs.size(); ++i) sc.coeffs[i] *= sdx.coeffs[i];
    ImagePlane out = ifft2(sc);
    for (double v : out.data) EXPECT_NEAR(v, 0.0, 1e-12);
}

TEST(GradOperators, RampHasUnitForwardDifference) {
    const int W = 8, H = 5;
    ImagePlane ramp(W, H);
    for (int r = 0; r < H; ++r) {
        for (int c = 0; c < W; ++c) ramp.at(r, c) = static_cast<double>(c);
    }
    auto [sdx, sdy] = grad_operators(W, H);
    Spectrum s = fft2(ramp);
    for (std::size_t i = 0; i < s.coeffs.size(); ++i) s.coeffs[i] *= sdx.coeffs[i];
    ImagePlane out = ifft2(s);
    for (int r = 0; r < H; ++r) {
        for (int c = 0; c + 1 < W; ++c) {
            EXPECT_NEAR(out.at(r, c), 1.0, 1e-10);  // interior forward difference
        }
        EXPECT_NEAR(out.at(r, W - 1), 1.0 - W, 1e-10);  // wrap column differs
    }
}

TEST(GradOperators, StencilSpectrumMatchesDirectDft) {
    const int W = 6, H = 4;
    ImagePlane dx(W, H, 0.0);
    dx.at(0, 0) = -1.0;
    dx.at(0, W - 1) = 1.0;
    std::vector<std::complex<double>> direct = oracles::dft2_direct(dx);
    auto [sdx, sdy] = grad_operators(W, H);
    for (std::size_t i = 0; i < direct.size(); ++i) {
        EXPECT_NEAR(std::abs(sdx.coeffs[i] - direct[i]), 0.0, 1e-12);
    }
    // conjugate symmetry of a real stencil's spectrum
    for (int r = 0; r < H; ++r) {
        for (int c = 0; c < W; ++c) {
            std::complex<double> a = sdx.at(r, c);
            std::complex<double> b = std::conj(sdx.at((H - r) % H, (W - c) % W));
            EXPECT_NEAR(std::abs(a - b), 0.0, 1e-12);
        }
    }
}

TEST(SolveLatent, DeltaKernelZeroLambdaReturnsInput) {
    std::mt19937_64 rng(13);
    ImagePlane B = oracles::random_plane(8, 8, rng);
    KernelGrid delta;
    delta.size = 1;
    delta.weights = {1.0};
    ImagePlane out = solve_latent(B, delta, 0.0);
    for (std::size_t i = 0; i < B.data.size(); ++i) {
        EXPECT_NEAR(out.data[i], B.data[i], 1e-10);
    }
}

TEST(SolveLatent, RecoversLatentFromNoiseFreeBlur) {
    std::mt19937_64 rng(14);
    ImagePlane I0 = oracles::random_plane(8, 8, rng);
    KernelRenderContext ctx(3);
    MixtureParams params;
    params.variant = KernelVariant::Simple;
    params.bases = {{0.3, 0.3, 0, 0, 0}};  // concentrated: spectrum bounded away from zero
    KernelGrid K = render_mixture(params, ctx);
    ImagePlane B = convolve(I0, K);
    ImagePlane rec = solve_latent(B, K, 1e-8);
    for (std::size_t i = 0; i < I0.data.size(); ++i) {
        EXPECT_NEAR(rec.data[i], I0.data[i], 1e-3);
    }
}

TEST(SolveLatent, MatchesDenseNormalEquationSolve) {
    std::mt19937_64 rng(15);
    for (int trial = 0; trial < 5; ++trial) {
        ImagePlane B = oracles::random_plane(6, 6, rng);
        KernelGrid K = oracles::random_kernel(3, rng);
        const double lambda3 = 0.05;
        ImagePlane fast = solve_latent(B, K, lambda3);
        std::vector<double> dense = oracles::solve_dense_normal_eq(B, K, lambda3);
        for (std::size_t i = 0; i < fast.data.size(); ++i) {
            EXPECT_NEAR(fast.data[i], dense[i], 1e-8);
        }
    }
}

TEST(SolveLatent, OutputBeatsRandomPerturbations) {
    std::mt19937_64 rng(16);
    ImagePlane B = oracles::random_plane(8, 8, rng);
    KernelGrid K = oracles::random_kernel(3, rng);
    const double lambda3 = 0.02;
    ImagePlane star = solve_latent(B, K, lambda3);
    const double e_star = image_energy(star, K, B, lambda3);
    std::normal_distribution<double> noise(0.0, 0.01);
    for (int trial = 0; trial < 50; ++trial) {
        ImagePlane perturbed = star;
        for (double& v : perturbed.data) v += noise(rng);
        EXPECT_LE(e_star, image_energy(perturbed, K, B, lambda3));
    }
}

TEST(SolveLatent, EnergyMonotoneAsLambdaDecays) {
    std::mt19937_64 rng(17);
    ImagePlane I0 = oracles::random_plane(8, 8, rng);
    KernelGrid K = oracles::random_kernel(3, rng);
    ImagePlane B = convolve(I0, K);  // noise-free consistent pair
    double prev = std::numeric_limits<double>::infinity();
    for (double lambda3 : {1.0, 0.3, 0.1, 0.03, 0.01, 1e-3, 1e-4}) {
        ImagePlane sol = solve_latent(B, K, lambda3);
        const double e = image_energy(sol, K, B, lambda3);
        EXPECT_LE(e, prev + 1e-12);
        prev = e;
    }
}

TEST(EdgeTaper, PreservesInteriorRampsBorderTowardMean) {
    ImagePlane p(32, 32, 0.0);
    for (int r = 0; r < 32; ++r) {
        for (int c = 0; c < 32; ++c) p.at(r, c) = (r + c) % 2 == 0 ? 0.2 : 0.8;
    }
    ImagePlane t = edge_taper(p, 9);
    EXPECT_DOUBLE_EQ(t.at(16, 16), p.at(16, 16));
    const double mean = plane_mean(p);
    EXPECT_LT(std::fabs(t.at(0, 0) - mean), std::fabs(p.at(0, 0) - mean) + 1e-15);
}

}  // namespace
}  // namespace kmdeblur
