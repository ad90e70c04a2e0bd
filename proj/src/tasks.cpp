#include "sea/tasks.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>

#include "sea/geometry.hpp"

namespace sea {

void warn_empty_bank_once() {
    static std::atomic<bool> warned{false};
    bool expected = false;
    if (warned.compare_exchange_strong(expected, true)) {
        std::fprintf(stderr, "warning: instance loss computed with an empty memory bank; loss is 0 until keys arrive\n");
    }
}

AugmentParams sample_augment_params(const AugmentConfig& cfg, Rng& rng) {
    AugmentParams p;
    p.crop_scale = rng.uniform(cfg.crop_scale_min, cfg.crop_scale_max);
    p.crop_aspect = rng.uniform(1.0 - cfg.aspect_jitter, 1.0 + cfg.aspect_jitter);
    p.crop_fx = rng.next_double();
    p.crop_fy = rng.next_double();
    p.rot_deg = rng.uniform(-cfg.affine_max_deg, cfg.affine_max_deg);
    p.shear_deg = rng.uniform(-cfg.affine_max_deg, cfg.affine_max_deg);
    p.brightness = rng.uniform(1.0 - cfg.color_jitter_strength, 1.0 + cfg.color_jitter_strength);
    p.contrast = rng.uniform(1.0 - cfg.color_jitter_strength, 1.0 + cfg.color_jitter_strength);
    p.saturation = rng.uniform(1.0 - cfg.color_jitter_strength, 1.0 + cfg.color_jitter_strength);
    p.grayscale = rng.bernoulli(cfg.grayscale_prob);
    p.blur = rng.bernoulli(cfg.blur_prob);
    return p;
}

namespace {

float clamp01f(double v) { return static_cast<float>(v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v)); }

// Bilinear sample with edge replication; coordinates in pixel units.
std::array<double, 3> sample_clamped(const ViewImage& img, double y, double x) {
    const std::int32_t P = img.size_px;
    const auto clampc = [P](double v) { return v < 0.0 ? 0.0 : (v > P - 1 ? static_cast<double>(P - 1) : v); };
    x = clampc(x);
    y = clampc(y);
    const std::int32_t x0 = static_cast<std::int32_t>(x);
    const std::int32_t y0 = static_cast<std::int32_t>(y);
    const std::int32_t x1 = std::min(x0 + 1, P - 1);
    const std::int32_t y1 = std::min(y0 + 1, P - 1);
    const double fx = x - x0;
    const double fy = y - y0;
    std::array<double, 3> out{};
    const float* p00 = img.pixel(y0, x0);
    const float* p01 = img.pixel(y0, x1);
    const float* p10 = img.pixel(y1, x0);
    const float* p11 = img.pixel(y1, x1);
    for (int ch = 0; ch < 3; ++ch) {
        const double top = p00[ch] * (1.0 - fx) + p01[ch] * fx;
        const double bot = p10[ch] * (1.0 - fx) + p11[ch] * fx;
        out[ch] = top * (1.0 - fy) + bot * fy;
    }
    return out;
}

double luma(const std::array<double, 3>& c) { return 0.299 * c[0] + 0.587 * c[1] + 0.114 * c[2]; }

}  // namespace

ViewImage apply_augment(const ViewImage& view, const AugmentParams& p) {
    const std::int32_t P = view.size_px;
    ViewImage out;
    out.size_px = P;
    out.pose = view.pose;
    out.rgb.resize(view.rgb.size());

    // 1) crop + resize back. Window size from area scale and aspect jitter,
    //    offset placed in the slack.
    const double cw = std::min(static_cast<double>(P), P * std::sqrt(p.crop_scale * p.crop_aspect));
    const double ch = std::min(static_cast<double>(P), P * std::sqrt(p.crop_scale / p.crop_aspect));
    const double x0 = p.crop_fx * (P - cw);
    const double y0 = p.crop_fy * (P - ch);

    // 2) affine: rotation then x-shear about the output center, inverse-mapped.
    const double theta = rad_from_deg(p.rot_deg);
    const double phi = rad_from_deg(p.shear_deg);
    const double ct = std::cos(theta), st = std::sin(theta), tn = std::tan(phi);
    // forward M = R * Sh; inverse applied analytically below
    const double m00 = ct, m01 = ct * tn - st;
    const double m10 = st, m11 = st * tn + ct;
    const double det = m00 * m11 - m01 * m10;
    const double i00 = m11 / det, i01 = -m01 / det;
    const double i10 = -m10 / det, i11 = m00 / det;
    const double cc = (P - 1) / 2.0;

    std::vector<double> work(static_cast<std::size_t>(P) * P * 3);
    for (std::int32_t i = 0; i < P; ++i) {
        for (std::int32_t j = 0; j < P; ++j) {
            const double dx = j - cc, dy = i - cc;
            const double ax = i00 * dx + i01 * dy + cc;
            const double ay = i10 * dx + i11 * dy + cc;
            // map through the crop window
            const double sx = x0 + (ax + 0.5) * cw / P - 0.5;
            const double sy = y0 + (ay + 0.5) * ch / P - 0.5;
            const auto c = sample_clamped(view, sy, sx);
            double* w = &work[3 * (static_cast<std::size_t>(i) * P + j)];
            w[0] = c[0];
            w[1] = c[1];
            w[2] = c[2];
        }
    }

    // 3) color jitter: brightness, contrast (about the mean gray), then
    //    saturation. No-op factors are skipped so identity params reproduce
    //    the input bit-exactly.
    if (p.brightness != 1.0) {
        for (auto& v : work) v *= p.brightness;
    }
    if (p.contrast != 1.0) {
        double mean_gray = 0.0;
        for (std::size_t k = 0; k < work.size(); k += 3)
            mean_gray += luma({work[k], work[k + 1], work[k + 2]});
        mean_gray /= static_cast<double>(P) * P;
        for (auto& v : work) v = mean_gray + (v - mean_gray) * p.contrast;
    }
    if (p.saturation != 1.0) {
        for (std::size_t k = 0; k < work.size(); k += 3) {
            const double l = luma({work[k], work[k + 1], work[k + 2]});
            for (int chn = 0; chn < 3; ++chn) work[k + chn] = l + (work[k + chn] - l) * p.saturation;
        }
    }
    if (p.grayscale) {
        for (std::size_t k = 0; k < work.size(); k += 3) {
            const double g = luma({work[k], work[k + 1], work[k + 2]});
            work[k] = work[k + 1] = work[k + 2] = g;
        }
    }

    // 4) optional 3x3 gaussian blur, edge replicated
    if (p.blur) {
        static const double kernel[3] = {0.25, 0.5, 0.25};
        std::vector<double> tmp(work.size());
        for (std::int32_t i = 0; i < P; ++i) {
            for (std::int32_t j = 0; j < P; ++j) {
                for (int chn = 0; chn < 3; ++chn) {
                    double acc = 0.0;
                    for (int k = -1; k <= 1; ++k) {
                        const std::int32_t jj = std::clamp(j + k, 0, P - 1);
                        acc += kernel[k + 1] * work[3 * (static_cast<std::size_t>(i) * P + jj) + chn];
                    }
                    tmp[3 * (static_cast<std::size_t>(i) * P + j) + chn] = acc;
                }
            }
        }
        for (std::int32_t i = 0; i < P; ++i) {
            for (std::int32_t j = 0; j < P; ++j) {
                for (int chn = 0; chn < 3; ++chn) {
                    double acc = 0.0;
                    for (int k = -1; k <= 1; ++k) {
                        const std::int32_t ii = std::clamp(i + k, 0, P - 1);
                        acc += kernel[k + 1] * tmp[3 * (static_cast<std::size_t>(ii) * P + j) + chn];
                    }
                    work[3 * (static_cast<std::size_t>(i) * P + j) + chn] = acc;
                }
            }
        }
    }

    for (std::size_t k = 0; k < work.size(); ++k) out.rgb[k] = clamp01f(work[k]);
    return out;
}

}  // namespace sea
