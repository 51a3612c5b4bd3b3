// Image quality measures. Planes carry [0,1] intensities; every metric
// reports on the customary [0,255] scale. Two PSNR conventions are
// exposed: the plain range/MSE ratio and the decibel form
// 10*log10(peak^2/MSE). Both are undefined at zero MSE and throw there;
// quality_report maps that to absent fields.

#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>

#include "kmdeblur/image.hpp"

namespace kmdeblur {

struct QualityReport {
    double rmse = 0.0;
    std::optional<double> psnr_paper;  // range of recovered / MSE
    std::optional<double> psnr_db;     // 10*log10(peak^2/MSE)
    int width = 0;
    int height = 0;
};

namespace detail {

// MSE on the [0,255] scale.
inline double mse255(const ImagePlane& a, const ImagePlane& b) {
    if (!a.same_dims(b)) throw std::invalid_argument("metric dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double d = 255.0 * (a.data[i] - b.data[i]);
        s += d * d;
    }
    return s / static_cast<double>(a.size());
}

}  // namespace detail

inline double rmse(const ImagePlane& reference, const ImagePlane& recovered) {
    return std::sqrt(detail::mse255(reference, recovered));
}

/// Dynamic range of the recovered image divided by the MSE (no logarithm,
/// numerator not squared). Asymmetric: the second argument is the
/// recovered image whose range forms the numerator.
inline double psnr_paper(const ImagePlane& reference, const ImagePlane& recovered) {
    const double mse = detail::mse255(reference, recovered);
    if (!(mse > 0.0)) throw NumericError("psnr undefined at zero MSE");
    const auto [lo, hi] = std::minmax_element(recovered.data.begin(), recovered.data.end());
    const double range = 255.0 * (*hi - *lo);
    return range / mse;
}

/// Conventional decibel PSNR against a fixed peak (default 255).
inline double psnr_db(const ImagePlane& reference, const ImagePlane& recovered,
                      double peak = 255.0) {
    const double mse = detail::mse255(reference, recovered);
    if (!(mse > 0.0)) throw NumericError("psnr undefined at zero MSE");
    return 10.0 * std::log10(peak * peak / mse);
}

inline QualityReport quality_report(const ImagePlane& reference, const ImagePlane& recovered) {
    QualityReport q;
    q.width = recovered.width;
    q.height = recovered.height;
    q.rmse = rmse(reference, recovered);
    if (q.rmse > 0.0) {
        q.psnr_paper = psnr_paper(reference, recovered);
        q.psnr_db = psnr_db(reference, recovered);
    }
    return q;
}

/// Per-channel metrics averaged over channels; PSNR means are present
/// only when defined on every channel.
inline QualityReport quality_report(const MultiChannelImage& reference,
                                    const MultiChannelImage& recovered) {
    validate_image(reference);
    validate_image(recovered);
    if (reference.channels.size() != recovered.channels.size()) {
        throw std::invalid_argument("metric channel-count mismatch");
    }
    QualityReport mean;
    mean.width = recovered.width();
    mean.height = recovered.height();
    double psnr_p = 0.0, psnr_d = 0.0;
    bool defined = true;
    for (std::size_t ch = 0; ch < reference.channels.size(); ++ch) {
        QualityReport q = quality_report(reference.channels[ch], recovered.channels[ch]);
        mean.rmse += q.rmse;
        defined = defined && q.psnr_db.has_value();
        if (defined) {
            psnr_p += *q.psnr_paper;
            psnr_d += *q.psnr_db;
        }
    }
    const double n = static_cast<double>(reference.channels.size());
    mean.rmse /= n;
    if (defined) {
        mean.psnr_paper = psnr_p / n;
        mean.psnr_db = psnr_d / n;
    }
    return mean;
}

}  // namespace kmdeblur
