#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace kmdeblur {

/// Structural family of the Gaussian base kernels.
/// Simple: isotropic, zero-centered. Scale: per-axis variances.
/// Center: adds a center offset. Rotation: adds a rotation angle.
enum class KernelVariant { Simple, Scale, Center, Rotation };

inline const char* variant_name(KernelVariant v) {
    switch (v) {
        case KernelVariant::Simple: return "simple";
        case KernelVariant::Scale: return "scale";
        case KernelVariant::Center: return "center";
        case KernelVariant::Rotation: return "rotation";
    }
    return "?";
}

inline KernelVariant parse_variant(const std::string& name) {
    if (name == "simple") return KernelVariant::Simple;
    if (name == "scale") return KernelVariant::Scale;
    if (name == "center") return KernelVariant::Center;
    if (name == "rotation") return KernelVariant::Rotation;
    throw std::invalid_argument("unknown kernel variant '" + name +
                                "' (expected simple|scale|center|rotation)");
}

/// All hyperparameters and schedules of the alternating solver.
struct SolverConfig {
    int n_bases = 9;
    int kernel_size = 31;
    double lambda1 = 1e-4;       // kernel prior weight
    double lambda2 = 1e-2;       // covariance prior weight
    double lambda3_init = 1e-2;  // image prior weight, decays per outer iteration
    double lambda3_decay = 1.1;  // divisor applied after each image step
    double epsilon = 0.05;       // relative-change convergence threshold
    int max_outer_iters = 50;
    int max_cg_iters = 6;        // per kernel step; the alternation, not
                                 // deep inner convergence, does the work
    std::uint64_t rng_seed = 0;
    KernelVariant variant = KernelVariant::Center;
    bool edge_taper = false;  // border cosine ramp before spectral solves
};

/// Returns cfg unchanged if every invariant holds, otherwise throws
/// naming the first violated invariant.
inline SolverConfig validate_config(const SolverConfig& cfg) {
    if (cfg.n_bases < 1) {
        throw std::invalid_argument("n_bases must be >= 1, got " + std::to_string(cfg.n_bases));
    }
    if (cfg.kernel_size < 1) {
        throw std::invalid_argument("kernel_size must be positive, got " +
                                    std::to_string(cfg.kernel_size));
    }
    if (cfg.kernel_size % 2 == 0) {
        throw std::invalid_argument("kernel_size must be odd, got " +
                                    std::to_string(cfg.kernel_size));
    }
    if (!(cfg.lambda1 >= 0.0)) throw std::invalid_argument("lambda1 must be >= 0");
    if (!(cfg.lambda2 >= 0.0)) throw std::invalid_argument("lambda2 must be >= 0");
    if (!(cfg.lambda3_init >= 0.0)) throw std::invalid_argument("lambda3 must be >= 0");
    if (!(cfg.lambda3_decay > 1.0)) throw std::invalid_argument("lambda3_decay must be > 1");
    if (!(cfg.epsilon > 0.0)) throw std::invalid_argument("epsilon must be > 0");
    if (cfg.max_outer_iters < 1) throw std::invalid_argument("max_outer_iters must be >= 1");
    if (cfg.max_cg_iters < 1) throw std::invalid_argument("max_cg_iters must be >= 1");
    return cfg;
}

}  // namespace kmdeblur
