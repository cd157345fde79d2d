#include "cinepred/optical_flow.hpp"

#include "cinepred/error.hpp"
#include "cinepred/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace cinepred {

void FlowParams::validate() const {
  if (!(sigma_init >= 0.0)) throw InvalidArgument("sigma_init must be >= 0");
  if (!(sigma_sub > 0.0)) throw InvalidArgument("sigma_sub must be > 0");
  if (!(sigma_lk > 0.0)) throw InvalidArgument("sigma_lk must be > 0");
  if (n_layers < 1) throw InvalidArgument("n_layers must be >= 1");
  if (n_iter < 1) throw InvalidArgument("n_iter must be >= 1");
}

std::vector<Image> gaussian_pyramid(const Image& image, int n_layers, double sigma_sub) {
  if (n_layers < 1) throw InvalidArgument("n_layers must be >= 1");
  std::vector<Image> levels;
  levels.reserve(n_layers);
  levels.push_back(image);
  const auto kernel = gaussian_kernel(sigma_sub);
  for (int l = 1; l < n_layers; ++l) {
    const Image blurred = convolve_separable(levels.back(), kernel);
    const Eigen::Index h = (blurred.rows() + 1) / 2;
    const Eigen::Index w = (blurred.cols() + 1) / 2;
    Image down(h, w);
    for (Eigen::Index r = 0; r < h; ++r)
      for (Eigen::Index c = 0; c < w; ++c) down(r, c) = blurred(2 * r, 2 * c);
    levels.push_back(std::move(down));
  }
  const Image& coarsest = levels.back();
  if (coarsest.rows() < 8 || coarsest.cols() < 8) {
    std::ostringstream os;
    os << "pyramid with " << n_layers << " layers reaches " << coarsest.rows() << "x"
       << coarsest.cols() << ", below the 8x8 minimum";
    throw InvalidArgument(os.str());
  }
  return levels;
}

namespace {

// Bilinear upsampling of a coarse flow onto a grid twice as fine; level-l
// pixel (r, c) sits at (r / 2, c / 2) on the coarse level.
DisplacementField upsample_flow(const DisplacementField& coarse, Eigen::Index h,
                                Eigen::Index w) {
  DisplacementField fine(h, w);
  for (Eigen::Index r = 0; r < h; ++r) {
    for (Eigen::Index c = 0; c < w; ++c) {
      const double x = 0.5 * static_cast<double>(c);
      const double y = 0.5 * static_cast<double>(r);
      fine.ux(r, c) = 2.0 * sample_bilinear(coarse.ux, x, y);
      fine.uy(r, c) = 2.0 * sample_bilinear(coarse.uy, x, y);
    }
  }
  return fine;
}

void refine_level(const Image& ref, const Image& tgt, const std::vector<double>& window,
                  int n_iter, DisplacementField& u) {
  const Eigen::Index h = ref.rows();
  const Eigen::Index w = ref.cols();
  Image gx, gy;
  central_gradients(ref, gx, gy);
  const Image axx = convolve_separable(gx * gx, window);
  const Image axy = convolve_separable(gx * gy, window);
  const Image ayy = convolve_separable(gy * gy, window);

  // Each window pixel is linearized around its own current displacement, so
  // the solve returns the total displacement rather than an increment.
  Image mismatch(h, w);
  for (int it = 0; it < n_iter; ++it) {
    for (Eigen::Index r = 0; r < h; ++r) {
      for (Eigen::Index c = 0; c < w; ++c) {
        const double x = static_cast<double>(c) + u.ux(r, c);
        const double y = static_cast<double>(r) + u.uy(r, c);
        mismatch(r, c) = ref(r, c) - sample_bilinear(tgt, x, y) + gx(r, c) * u.ux(r, c) +
                         gy(r, c) * u.uy(r, c);
      }
    }
    const Image bx = convolve_separable(gx * mismatch, window);
    const Image by = convolve_separable(gy * mismatch, window);
    for (Eigen::Index r = 0; r < h; ++r) {
      for (Eigen::Index c = 0; c < w; ++c) {
        const double trace = axx(r, c) + ayy(r, c);
        if (!(trace > 0.0)) continue;
        const double eps = 1e-6 * trace / 2.0;
        const double a = axx(r, c) + eps;
        const double b = axy(r, c);
        const double d = ayy(r, c) + eps;
        const double det = a * d - b * b;
        if (!(det > 0.0)) continue;
        u.ux(r, c) = (d * bx(r, c) - b * by(r, c)) / det;
        u.uy(r, c) = (a * by(r, c) - b * bx(r, c)) / det;
      }
    }
  }
}

}  // namespace

DisplacementField lucas_kanade_dense(const Image& reference, const Image& target,
                                     const FlowParams& params) {
  params.validate();
  if (reference.rows() != target.rows() || reference.cols() != target.cols())
    throw InvalidArgument("reference and target shapes differ");

  const Image ref0 = gaussian_blur(reference, params.sigma_init);
  const Image tgt0 = gaussian_blur(target, params.sigma_init);
  const auto ref_pyr = gaussian_pyramid(ref0, params.n_layers, params.sigma_sub);
  const auto tgt_pyr = gaussian_pyramid(tgt0, params.n_layers, params.sigma_sub);
  const auto window = gaussian_kernel(params.sigma_lk);

  DisplacementField u;
  for (int l = params.n_layers - 1; l >= 0; --l) {
    const Image& ref = ref_pyr[l];
    const Image& tgt = tgt_pyr[l];
    if (l == params.n_layers - 1)
      u = DisplacementField(ref.rows(), ref.cols());
    else
      u = upsample_flow(u, ref.rows(), ref.cols());
    refine_level(ref, tgt, window, params.n_iter, u);
  }
  return u;
}

std::vector<DisplacementField> register_prefix(const ImageSequence& seq,
                                               const FlowParams& params,
                                               Eigen::Index m_train) {
  seq.validate();
  params.validate();
  if (m_train < 1 || m_train > seq.frame_count())
    throw InvalidArgument("registration prefix outside the sequence");
  std::vector<DisplacementField> fields;
  fields.reserve(m_train);
  fields.push_back(DisplacementField::zeros(seq.height(), seq.width()));
  for (Eigen::Index k = 1; k < m_train; ++k)
    fields.push_back(lucas_kanade_dense(seq.frames[0], seq.frames[k], params));
  return fields;
}

DvfSeries register_sequence(const ImageSequence& seq, const FlowParams& params) {
  DvfSeries out;
  out.params = params;
  out.fields = register_prefix(seq, params, seq.frame_count());
  return out;
}

std::vector<FlowParams> make_flow_grid(const std::vector<double>& sigma_init,
                                       const std::vector<double>& sigma_sub,
                                       const std::vector<double>& sigma_lk,
                                       const std::vector<int>& n_layers,
                                       const std::vector<int>& n_iter) {
  std::vector<FlowParams> grid;
  for (double si : sigma_init)
    for (double ss : sigma_sub)
      for (double sl : sigma_lk)
        for (int nl : n_layers)
          for (int ni : n_iter) grid.push_back(FlowParams{si, ss, sl, nl, ni});
  return grid;
}

FlowGridResult optimize_flow_params(const ImageSequence& seq,
                                    const std::vector<FlowParams>& grid,
                                    Eigen::Index m_train) {
  if (grid.empty()) throw InvalidArgument("flow parameter grid is empty");
  seq.validate();
  if (m_train < 2 || m_train > seq.frame_count())
    throw InvalidArgument("m_train must satisfy 2 <= m_train <= M");

  FlowGridResult result;
  result.best_e_gt = std::numeric_limits<double>::infinity();
  for (const FlowParams& p : grid) {
    const auto fields = register_prefix(seq, p, m_train);
    const double e = ground_truth_registration_error(fields, seq, m_train);
    result.entries.push_back({p, e});
    if (e < result.best_e_gt) {
      result.best_e_gt = e;
      result.best = p;
    }
  }
  return result;
}

}  // namespace cinepred
