// Kernel estimation: minimize the kernel energy
//
//   E(K) = |I*K - B|^2 + lambda1 |K|^2 + lambda2 |sigma^2|^2
//
// over the mixture parameters with nonlinear conjugate gradient
// (Polak-Ribiere+ with restarts, Armijo backtracking), the latent image
// held fixed. The unit-sum normalization inside the kernel render is part
// of the objective: gradients are chained through it, so analytic and
// finite-difference derivatives agree.
//
// Optimization space per base: s = log sigma^2 (both axes, or one shared
// value for the Simple variant), raw mu, raw theta. Centers are projected
// into the grid box after accepted steps, outside the line search.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "kmdeblur/config.hpp"
#include "kmdeblur/fft.hpp"
#include "kmdeblur/image.hpp"
#include "kmdeblur/kernel.hpp"

namespace kmdeblur {

struct KernelEnergyBreakdown {
    double data_term = 0.0;         // |I*K - B|^2
    double kernel_prior = 0.0;      // lambda1 |K|^2
    double covariance_prior = 0.0;  // lambda2 |sigma^2|^2
    double total = 0.0;             // data_term + kernel_prior + covariance_prior
};

/// Per-iteration snapshot of the CG minimization.
struct CgState {
    int iteration = 0;
    std::vector<double> position;  // packed reparameterized parameters
    std::vector<double> gradient;
    std::vector<double> direction;
    double energy = 0.0;
};

using CgTraceSink = std::function<void(const CgState&, const KernelEnergyBreakdown&)>;

struct KernelFitResult {
    MixtureParams params;
    KernelGrid kernel;
    KernelEnergyBreakdown energy;
    int iterations = 0;
};

/// Intensity scale on which the energy's data term is evaluated. Planes
/// are canonical [0,1]; the fidelity term uses the customary 8-bit scale
/// (as the metrics do), which is the scale the default regularization
/// weights are balanced against.
inline constexpr double kEnergyIntensityScale = 255.0;

namespace detail {

// Shared spectral state for one (I, B) pair; I and B are fixed during the
// kernel step, so their transforms are computed once.
class KernelObjective {
public:
    KernelObjective(const ImagePlane& I, const ImagePlane& B, const SolverConfig& cfg)
        : cfg_(cfg),
          ctx_(cfg.kernel_size),
          width_(I.width),
          height_(I.height),
          spec_image_(fft2(I)),
          spec_blur_(fft2(B)) {
        if (!I.same_dims(B)) {
            throw std::invalid_argument("latent and blurred image dimensions must match");
        }
        for (auto& c : spec_image_.coeffs) c *= kEnergyIntensityScale;
        for (auto& c : spec_blur_.coeffs) c *= kEnergyIntensityScale;
    }

    const KernelRenderContext& ctx() const { return ctx_; }

    double covariance_prior(const MixtureParams& params) const {
        double s = 0.0;
        for (const BaseKernelParams& b : params.bases) {
            s += b.sigma_x_sq * b.sigma_x_sq + b.sigma_y_sq * b.sigma_y_sq;
        }
        return cfg_.lambda2 * s;
    }

    KernelEnergyBreakdown breakdown(const MixtureParams& params) const {
        KernelGrid kernel = render_mixture(params, ctx_);
        Spectrum sk = fft2(pad_kernel(kernel, width_, height_));
        // Parseval: the spatial residual norm equals the spectral one / (W*H).
        double data = 0.0;
        for (std::size_t i = 0; i < sk.coeffs.size(); ++i) {
            data += std::norm(spec_image_.coeffs[i] * sk.coeffs[i] - spec_blur_.coeffs[i]);
        }
        data /= static_cast<double>(width_) * height_;
        double ksq = 0.0;
        for (double w : kernel.weights) ksq += w * w;
        KernelEnergyBreakdown e;
        e.data_term = data;
        e.kernel_prior = cfg_.lambda1 * ksq;
        e.covariance_prior = covariance_prior(params);
        e.total = e.data_term + e.kernel_prior + e.covariance_prior;
        return e;
    }

    // Line-search view: degenerate or non-finite renders count as +inf.
    double energy_or_inf(std::span<const double> packed, int n_bases) const {
        try {
            MixtureParams p = unpack_params(packed, cfg_.variant, n_bases);
            double e = breakdown(p).total;
            return std::isfinite(e) ? e : std::numeric_limits<double>::infinity();
        } catch (const std::exception&) {
            return std::numeric_limits<double>::infinity();
        }
    }

    std::vector<double> gradient(const MixtureParams& params) const {
        const std::vector<double> raw = render_raw(params, ctx_);
        double total = 0.0;
        for (double v : raw) total += v;
        if (!(total > 0.0) || !std::isfinite(total)) {
            throw NumericError("degenerate kernel render in gradient evaluation");
        }
        std::vector<double> kernel(raw.size());
        for (std::size_t i = 0; i < raw.size(); ++i) kernel[i] = raw[i] / total;

        KernelGrid grid;
        grid.size = ctx_.size;
        grid.weights = kernel;

        // Residual spectrum and data-term gradient on the kernel support:
        // d|I*K - B|^2 / dK = 2 corr(I, I*K - B).
        Spectrum res = fft2(pad_kernel(grid, width_, height_));
        for (std::size_t i = 0; i < res.coeffs.size(); ++i) {
            res.coeffs[i] = std::conj(spec_image_.coeffs[i]) *
                            (spec_image_.coeffs[i] * res.coeffs[i] - spec_blur_.coeffs[i]);
        }
        ImagePlane corr = ifft2(res);
        KernelGrid support = extract_kernel_support(corr, ctx_.size);

        // Grid-level gradient of data term + kernel prior wrt K.
        std::vector<double> grid_grad(kernel.size());
        for (std::size_t i = 0; i < kernel.size(); ++i) {
            grid_grad[i] = 2.0 * support.weights[i] + 2.0 * cfg_.lambda1 * kernel[i];
        }

        // Chain through the unit-sum normalization K = r / sum(r):
        // dE/dr_j = (G_j - <G, K>) / sum(r).
        double gk = 0.0;
        for (std::size_t i = 0; i < kernel.size(); ++i) gk += grid_grad[i] * kernel[i];
        std::vector<double> raw_grad(kernel.size());
        for (std::size_t i = 0; i < kernel.size(); ++i) {
            raw_grad[i] = (grid_grad[i] - gk) / total;
        }

        // Contract with the mixture Jacobian, then add the covariance
        // prior terms (which act directly on sigma^2, with the exp
        // reparameterization factor).
        std::span<const ParamKind> kinds = free_params(params.variant);
        std::vector<double> g(params.bases.size() * kinds.size(), 0.0);
        std::size_t slot = 0;
        for (std::size_t b = 0; b < params.bases.size(); ++b) {
            for (ParamKind k : kinds) {
                std::vector<double> jac = jacobian_grid(params, ctx_, static_cast<int>(b), k);
                double dot = 0.0;
                for (std::size_t i = 0; i < jac.size(); ++i) dot += raw_grad[i] * jac[i];

                const BaseKernelParams& base = params.bases[b];
                if (k == ParamKind::LogSigmaX) {
                    if (params.variant == KernelVariant::Simple) {
                        // shared s: sigma^2 vector holds the value twice
                        dot += 4.0 * cfg_.lambda2 * base.sigma_x_sq * base.sigma_x_sq;
                    } else {
                        dot += 2.0 * cfg_.lambda2 * base.sigma_x_sq * base.sigma_x_sq;
                    }
                } else if (k == ParamKind::LogSigmaY) {
                    dot += 2.0 * cfg_.lambda2 * base.sigma_y_sq * base.sigma_y_sq;
                }
                g[slot++] = dot;
            }
        }
        return g;
    }

private:
    SolverConfig cfg_;
    KernelRenderContext ctx_;
    int width_;
    int height_;
    Spectrum spec_image_;
    Spectrum spec_blur_;
};

inline double max_norm(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::fabs(x));
    return m;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline std::string format_params(std::span<const double> v) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
    os << "]";
    return os.str();
}

}  // namespace detail

/// The three energy terms of the kernel objective at the given parameters.
inline KernelEnergyBreakdown kernel_energy(const MixtureParams& params, const ImagePlane& I,
                                           const ImagePlane& B, const SolverConfig& cfg) {
    return detail::KernelObjective(I, B, cfg).breakdown(params);
}

/// Analytic gradient of the total kernel energy over the packed
/// reparameterized parameter vector (pack_params layout).
inline std::vector<double> kernel_energy_gradient(const MixtureParams& params,
                                                  const ImagePlane& I, const ImagePlane& B,
                                                  const SolverConfig& cfg) {
    return detail::KernelObjective(I, B, cfg).gradient(params);
}

/// Polak-Ribiere+ conjugate gradient with Armijo backtracking.
/// Stops when the gradient max-norm falls to 1e-6, the relative energy
/// decrease falls to 1e-8, or max_cg_iters is reached. Accepted iterates
/// have non-increasing energy; centers end projected into the grid box.
inline KernelFitResult minimize_kernel(const MixtureParams& initial, const ImagePlane& I,
                                       const ImagePlane& B, const SolverConfig& cfg,
                                       const CgTraceSink& sink = {}) {
    constexpr double kGradTol = 1e-6;
    constexpr double kEnergyRelTol = 1e-8;
    constexpr double kArmijoC = 1e-4;
    constexpr double kShrink = 0.5;
    constexpr int kMaxBacktracks = 60;

    SolverConfig cfg_local = cfg;
    cfg_local.variant = initial.variant;
    const detail::KernelObjective objective(I, B, cfg_local);
    const int n_bases = static_cast<int>(initial.bases.size());
    const KernelVariant variant = initial.variant;

    CgState state;
    MixtureParams params = project_params(initial, cfg.kernel_size);
    state.position = pack_params(params);
    KernelEnergyBreakdown breakdown = objective.breakdown(params);
    if (!std::isfinite(breakdown.total)) {
        throw NumericError("non-finite kernel energy at start, params " +
                           detail::format_params(state.position));
    }
    state.energy = breakdown.total;
    state.gradient = objective.gradient(params);
    state.direction.assign(state.gradient.size(), 0.0);
    for (std::size_t i = 0; i < state.direction.size(); ++i) {
        state.direction[i] = -state.gradient[i];
    }
    if (sink) sink(state, breakdown);

    const int dim = static_cast<int>(state.position.size());
    // First trial moves at most ~0.1 in the packed max-norm; subsequent
    // trials start from the previous accepted step doubled. This bounds
    // the total travel of a budgeted run, so max_cg_iters acts as a
    // trust region for the alternating pipeline.
    double prev_step = 0.05 / std::max(1e-12, detail::max_norm(state.gradient));

    while (state.iteration < cfg.max_cg_iters) {
        if (detail::max_norm(state.gradient) <= kGradTol) break;

        double dir_deriv = detail::dot(state.gradient, state.direction);
        if (dir_deriv >= 0.0) {
            // not a descent direction; fall back to steepest descent
            for (std::size_t i = 0; i < state.direction.size(); ++i) {
                state.direction[i] = -state.gradient[i];
            }
            dir_deriv = -detail::dot(state.gradient, state.gradient);
            if (dir_deriv >= 0.0) break;
        }

        // Backtracking line search; projection happens after acceptance
        // and must also preserve monotone energy.
        double step = 2.0 * prev_step;
        double accepted_energy = std::numeric_limits<double>::infinity();
        std::vector<double> trial(state.position.size());
        MixtureParams trial_params;
        bool accepted = false;
        bool step_still_ramping = false;
        for (int bt = 0; bt < kMaxBacktracks; ++bt) {
            for (std::size_t i = 0; i < trial.size(); ++i) {
                trial[i] = state.position[i] + step * state.direction[i];
            }
            double e = objective.energy_or_inf(trial, n_bases);
            if (e <= state.energy + kArmijoC * step * dir_deriv) {
                MixtureParams cand =
                    project_params(unpack_params(trial, variant, n_bases), cfg.kernel_size);
                std::vector<double> projected = pack_params(cand);
                if (projected != trial) {
                    e = objective.energy_or_inf(projected, n_bases);
                    if (!(e <= state.energy)) {
                        step *= kShrink;
                        continue;
                    }
                    trial = std::move(projected);
                }
                trial_params = std::move(cand);
                accepted_energy = e;
                accepted = true;
                step_still_ramping = bt == 0;
                break;
            }
            step *= kShrink;
        }
        if (!accepted) break;  // no admissible decrease along this direction

        const double prev_energy = state.energy;
        std::vector<double> new_gradient = objective.gradient(trial_params);

        // Polak-Ribiere+ with restart on negative beta or every 5*dim steps.
        double beta = 0.0;
        const double gg = detail::dot(state.gradient, state.gradient);
        if (gg > 0.0 && (state.iteration + 1) % (5 * dim) != 0) {
            double num = 0.0;
            for (std::size_t i = 0; i < new_gradient.size(); ++i) {
                num += new_gradient[i] * (new_gradient[i] - state.gradient[i]);
            }
            beta = std::max(0.0, num / gg);
        }
        for (std::size_t i = 0; i < state.direction.size(); ++i) {
            state.direction[i] = -new_gradient[i] + beta * state.direction[i];
        }
        state.position = std::move(trial);
        state.gradient = std::move(new_gradient);
        state.energy = accepted_energy;
        state.iteration += 1;
        prev_step = step;

        breakdown = objective.breakdown(trial_params);
        if (sink) sink(state, breakdown);

        // Ignore small decreases while the line search still accepts at
        // its doubling first trial: the step is ramping up, not stalled.
        if (!step_still_ramping &&
            prev_energy - state.energy <= kEnergyRelTol * std::fabs(prev_energy)) {
            break;
        }
    }

    KernelFitResult result;
    result.params = unpack_params(state.position, variant, n_bases);
    result.params = project_params(std::move(result.params), cfg.kernel_size);
    result.kernel = render_mixture(result.params, objective.ctx());
    result.energy = objective.breakdown(result.params);
    result.iterations = state.iteration;
    return result;
}

}  // namespace kmdeblur
