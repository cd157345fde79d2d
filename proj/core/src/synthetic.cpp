#include "cinepred/synthetic.hpp"

#include "cinepred/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace cinepred {

double SyntheticMode::signal(double t) const {
  const double two_pi = 2.0 * std::numbers::pi;
  const double theta =
      two_pi * frequency_hz * t + phase_mod_depth * std::sin(two_pi * phase_mod_hz * t);
  return amplitude_px * (std::sin(theta) + harmonic * std::sin(2.0 * theta));
}

SyntheticSpec SyntheticSpec::default_two_mode(Eigen::Index frame_count) {
  SyntheticSpec spec;
  spec.frame_count = frame_count;
  SyntheticMode si;
  si.shape = ModeShape::BumpY;
  si.amplitude_px = 4.0;
  si.frequency_hz = 0.4;
  si.phase_mod_depth = 0.4;
  si.phase_mod_hz = 0.03;
  si.harmonic = 0.2;
  si.center_x = 0.5;
  si.center_y = 0.6;
  si.bump_sigma = 0.35;
  SyntheticMode ap;
  ap.shape = ModeShape::BumpX;
  ap.amplitude_px = 2.5;
  ap.frequency_hz = 0.55;
  ap.phase_mod_depth = 0.3;
  ap.phase_mod_hz = 0.021;
  ap.center_x = 0.4;
  ap.center_y = 0.4;
  ap.bump_sigma = 0.3;
  spec.modes = {si, ap};
  return spec;
}

DisplacementField mode_field(const SyntheticMode& mode, Eigen::Index height,
                             Eigen::Index width) {
  DisplacementField f(height, width);
  switch (mode.shape) {
    case ModeShape::TranslateX:
      f.ux.setOnes();
      return f;
    case ModeShape::TranslateY:
      f.uy.setOnes();
      return f;
    case ModeShape::BumpX:
    case ModeShape::BumpY:
      break;
  }
  const double cx = mode.center_x * static_cast<double>(width - 1);
  const double cy = mode.center_y * static_cast<double>(height - 1);
  const double s = mode.bump_sigma * static_cast<double>(std::min(height, width));
  Eigen::ArrayXXd& target = mode.shape == ModeShape::BumpX ? f.ux : f.uy;
  for (Eigen::Index r = 0; r < height; ++r) {
    for (Eigen::Index c = 0; c < width; ++c) {
      const double dx = static_cast<double>(c) - cx;
      const double dy = static_cast<double>(r) - cy;
      target(r, c) = std::exp(-0.5 * (dx * dx + dy * dy) / (s * s));
    }
  }
  return f;
}

Image synthetic_reference(Eigen::Index height, Eigen::Index width, int blob_count,
                          std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double side = static_cast<double>(std::min(height, width));

  struct Blob {
    double x, y, sigma, amp;
  };
  std::vector<Blob> blobs;
  for (int b = 0; b < blob_count; ++b) {
    Blob blob;
    blob.x = unit(rng) * static_cast<double>(width - 1);
    blob.y = unit(rng) * static_cast<double>(height - 1);
    blob.sigma = side * (0.025 + 0.04 * unit(rng));
    blob.amp = (unit(rng) < 0.5 ? -1.0 : 1.0) * (30.0 + 50.0 * unit(rng));
    blobs.push_back(blob);
  }

  Image raw(height, width);
  for (Eigen::Index r = 0; r < height; ++r) {
    for (Eigen::Index c = 0; c < width; ++c) {
      double v = 60.0 * static_cast<double>(r) / static_cast<double>(height) +
                 25.0 * static_cast<double>(c) / static_cast<double>(width);
      for (const Blob& b : blobs) {
        const double dx = static_cast<double>(c) - b.x;
        const double dy = static_cast<double>(r) - b.y;
        v += b.amp * std::exp(-0.5 * (dx * dx + dy * dy) / (b.sigma * b.sigma));
      }
      raw(r, c) = v;
    }
  }
  const double lo = raw.minCoeff();
  const double hi = raw.maxCoeff();
  if (hi - lo <= 0.0) return Image::Constant(height, width, 128.0);
  return 20.0 + (raw - lo) * (215.0 / (hi - lo));
}

Image push_forward(const Image& reference, const DisplacementField& field) {
  const Eigen::Index h = reference.rows();
  const Eigen::Index w = reference.cols();
  Image out(h, w);
  for (Eigen::Index r = 0; r < h; ++r) {
    for (Eigen::Index c = 0; c < w; ++c) {
      const double yx = static_cast<double>(c);
      const double yy = static_cast<double>(r);
      // Solve x + u(x) = y for the source point x.
      double sx = yx - field.ux(r, c);
      double sy = yy - field.uy(r, c);
      for (int it = 0; it < 30; ++it) {
        const double nx = yx - sample_bilinear(field.ux, sx, sy);
        const double ny = yy - sample_bilinear(field.uy, sx, sy);
        const double step = std::abs(nx - sx) + std::abs(ny - sy);
        sx = nx;
        sy = ny;
        if (step < 1e-10) break;
      }
      out(r, c) = sample_bicubic(reference, sx, sy);
    }
  }
  return out;
}

SyntheticGroundTruth generate_synthetic_sequence(const SyntheticSpec& spec) {
  if (spec.height < 8 || spec.width < 8)
    throw InvalidArgument("synthetic frames must be at least 8x8");
  if (spec.frame_count < 2) throw InvalidArgument("sequence requires at least 2 frames");
  if (!(spec.sampling_hz > 0.0)) throw InvalidArgument("sampling_hz must be positive");
  if (spec.noise_std < 0.0) throw InvalidArgument("noise_std must be non-negative");

  double max_disp = 0.0;
  for (const auto& m : spec.modes) max_disp += m.max_abs_signal();
  const double limit = 0.2 * static_cast<double>(std::min(spec.height, spec.width));
  if (max_disp > limit) {
    std::ostringstream os;
    os << "synthetic amplitudes push content off-image: max displacement " << max_disp
       << " px exceeds " << limit << " px";
    throw InvalidArgument(os.str());
  }

  SyntheticGroundTruth gt;
  gt.reference = synthetic_reference(spec.height, spec.width, spec.blob_count, spec.seed);

  std::vector<DisplacementField> units;
  for (const auto& m : spec.modes) units.push_back(mode_field(m, spec.height, spec.width));

  gt.weight_signals.assign(spec.modes.size(), std::vector<double>(spec.frame_count));
  std::mt19937_64 noise_rng(spec.seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> noise(0.0, 1.0);

  gt.sequence.name = spec.name;
  gt.sequence.sampling_hz = spec.sampling_hz;
  gt.sequence.pixel_spacing_mm = {1.0, 1.0};
  for (Eigen::Index k = 0; k < spec.frame_count; ++k) {
    const double t = static_cast<double>(k) / spec.sampling_hz;
    DisplacementField u(spec.height, spec.width);
    for (std::size_t j = 0; j < spec.modes.size(); ++j) {
      const double s = spec.modes[j].signal(t);
      gt.weight_signals[j][k] = s;
      u.ux += s * units[j].ux;
      u.uy += s * units[j].uy;
    }
    Image frame = k == 0 ? gt.reference : push_forward(gt.reference, u);
    if (spec.noise_std > 0.0) {
      for (Eigen::Index i = 0; i < frame.size(); ++i)
        frame(i) += spec.noise_std * noise(noise_rng);
    }
    if (spec.quantize) frame = quantize_8bit(frame);
    gt.sequence.frames.push_back(std::move(frame));
    gt.true_dvfs.push_back(std::move(u));
  }
  return gt;
}

}  // namespace cinepred
