#include "cinepred/warping.hpp"

#include "cinepred/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <vector>

namespace cinepred {

void WarpParams::validate() const {
  if (!(sigma_warp > 0.0) || !std::isfinite(sigma_warp))
    throw InvalidArgument("sigma_warp must be positive");
  if (!(cutoff_radius > 0.0) || !std::isfinite(cutoff_radius))
    throw InvalidArgument("cutoff_radius must be positive");
  if (cutoff_radius < sigma_warp) throw InvalidArgument("cutoff_radius must be >= sigma_warp");
}

namespace {

// Landing points bucketed by their rounded (clamped) target cell.
struct LandingBuckets {
  Eigen::Index h, w;
  std::vector<std::vector<Eigen::Index>> cells;

  LandingBuckets(const std::vector<double>& lx, const std::vector<double>& ly, Eigen::Index h_,
                 Eigen::Index w_)
      : h(h_), w(w_), cells(static_cast<std::size_t>(h_ * w_)) {
    for (std::size_t i = 0; i < lx.size(); ++i) {
      const auto c = static_cast<Eigen::Index>(
          std::clamp(std::lround(lx[i]), 0L, static_cast<long>(w - 1)));
      const auto r = static_cast<Eigen::Index>(
          std::clamp(std::lround(ly[i]), 0L, static_cast<long>(h - 1)));
      cells[static_cast<std::size_t>(r * w + c)].push_back(static_cast<Eigen::Index>(i));
    }
  }

  // Ring search; stops once the ring is farther than the best hit.
  Eigen::Index nearest(double x, double y, const std::vector<double>& lx,
                       const std::vector<double>& ly) const {
    const auto r0 = static_cast<Eigen::Index>(std::lround(y));
    const auto c0 = static_cast<Eigen::Index>(std::lround(x));
    double best = std::numeric_limits<double>::infinity();
    Eigen::Index best_i = -1;
    const Eigen::Index max_ring = std::max(h, w);
    for (Eigen::Index ring = 0; ring <= max_ring; ++ring) {
      if (best_i >= 0 && static_cast<double>(ring - 1) > std::sqrt(best)) break;
      for (Eigen::Index r = r0 - ring; r <= r0 + ring; ++r) {
        if (r < 0 || r >= h) continue;
        const bool edge_row = (r == r0 - ring || r == r0 + ring);
        for (Eigen::Index c = c0 - ring; c <= c0 + ring; c += edge_row ? 1 : 2 * ring) {
          if (c >= 0 && c < w) {
            for (Eigen::Index i : cells[static_cast<std::size_t>(r * w + c)]) {
              const double d = (lx[i] - x) * (lx[i] - x) + (ly[i] - y) * (ly[i] - y);
              if (d < best || (d == best && i < best_i)) {
                best = d;
                best_i = i;
              }
            }
          }
          if (ring == 0) break;
        }
      }
    }
    return best_i;
  }
};

}  // namespace

Image warp_image(const Image& reference, const DisplacementField& field,
                 const WarpParams& params) {
  params.validate();
  const Eigen::Index h = reference.rows();
  const Eigen::Index w = reference.cols();
  if (field.height() != h || field.width() != w)
    throw InvalidArgument("field shape does not match the reference image");
  if (!field.all_finite()) throw InvalidArgument("field contains non-finite entries");

  Image num = Image::Zero(h, w);
  Image den = Image::Zero(h, w);
  const double inv2s2 = 1.0 / (2.0 * params.sigma_warp * params.sigma_warp);
  const double r2max = params.cutoff_radius * params.cutoff_radius;
  const auto reach = static_cast<Eigen::Index>(std::ceil(params.cutoff_radius));

  for (Eigen::Index r = 0; r < h; ++r) {
    for (Eigen::Index c = 0; c < w; ++c) {
      const double x = static_cast<double>(c) + field.ux(r, c);
      const double y = static_cast<double>(r) + field.uy(r, c);
      const double value = reference(r, c);
      const auto cx = static_cast<Eigen::Index>(std::floor(x));
      const auto cy = static_cast<Eigen::Index>(std::floor(y));
      for (Eigen::Index tr = std::max<Eigen::Index>(0, cy - reach);
           tr <= std::min<Eigen::Index>(h - 1, cy + reach + 1); ++tr) {
        const double dy = static_cast<double>(tr) - y;
        for (Eigen::Index tc = std::max<Eigen::Index>(0, cx - reach);
             tc <= std::min<Eigen::Index>(w - 1, cx + reach + 1); ++tc) {
          const double dx = static_cast<double>(tc) - x;
          const double d2 = dx * dx + dy * dy;
          if (d2 > r2max) continue;
          const double k = std::exp(-d2 * inv2s2);
          num(tr, tc) += k * value;
          den(tr, tc) += k;
        }
      }
    }
  }

  Image out(h, w);
  std::vector<double> lx, ly;
  std::unique_ptr<LandingBuckets> buckets;
  for (Eigen::Index r = 0; r < h; ++r) {
    for (Eigen::Index c = 0; c < w; ++c) {
      double v;
      if (den(r, c) > 0.0) {
        v = num(r, c) / den(r, c);
      } else if (params.fallback == WarpFallback::ReferenceIntensity) {
        v = reference(r, c);
      } else {
        if (!buckets) {
          lx.resize(static_cast<std::size_t>(h * w));
          ly.resize(lx.size());
          for (Eigen::Index rr = 0; rr < h; ++rr)
            for (Eigen::Index cc = 0; cc < w; ++cc) {
              lx[static_cast<std::size_t>(rr * w + cc)] = static_cast<double>(cc) + field.ux(rr, cc);
              ly[static_cast<std::size_t>(rr * w + cc)] = static_cast<double>(rr) + field.uy(rr, cc);
            }
          buckets = std::make_unique<LandingBuckets>(lx, ly, h, w);
        }
        const Eigen::Index i = buckets->nearest(static_cast<double>(c), static_cast<double>(r), lx, ly);
        v = reference(i / w, i % w);
      }
      out(r, c) = std::clamp(v, 0.0, 255.0);
    }
  }
  return out;
}

}  // namespace cinepred
