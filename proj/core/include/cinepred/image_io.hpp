#pragma once

// 2D+t sequence storage and file formats.
//
//   frames     binary PGM (P5), 8-bit, one file per frame
//   manifest   JSON {"frames": [paths], "pixel_spacing_mm": s | [sy, sx],
//                    "sampling_hz": f, "name": text}
//              relative frame paths resolve against the manifest directory
//   DVF1       "DVF1" magic, H and W as uint32 LE, then the x channel
//              (H*W float32 LE, row-major) followed by the y channel

#include "cinepred/grid.hpp"

#include <array>
#include <filesystem>
#include <string>
#include <vector>

namespace cinepred {

struct ImageSequence {
  std::vector<Image> frames;
  /// (row spacing, column spacing) in mm.
  std::array<double, 2> pixel_spacing_mm{1.0, 1.0};
  double sampling_hz = 1.0;
  std::string name;

  Eigen::Index frame_count() const { return static_cast<Eigen::Index>(frames.size()); }
  Eigen::Index height() const { return frames.empty() ? 0 : frames.front().rows(); }
  Eigen::Index width() const { return frames.empty() ? 0 : frames.front().cols(); }

  /// Throws LoadError when the sequence invariants do not hold.
  void validate() const;
};

Image read_pgm(const std::filesystem::path& path);
/// Writes `image` rounded and clamped to 8 bits.
void write_pgm(const std::filesystem::path& path, const Image& image);

ImageSequence load_sequence(const std::filesystem::path& manifest_path);

/// Writes frame_0001.pgm ... and manifest.json into `dir`; returns the
/// manifest path.
std::filesystem::path save_sequence(const ImageSequence& seq,
                                    const std::filesystem::path& dir);

DisplacementField read_dvf(const std::filesystem::path& path);
void write_dvf(const std::filesystem::path& path, const DisplacementField& field);

/// Reads a JSON list of DVF1 paths ({"fields": [...]}), relative paths
/// resolved against the list's directory.
std::vector<DisplacementField> load_dvf_list(const std::filesystem::path& list_path);
/// Writes dvf_0001.dvf ... plus dvfs.json into `dir`; returns the list path.
std::filesystem::path save_dvf_list(const std::vector<DisplacementField>& fields,
                                    const std::filesystem::path& dir);

}  // namespace cinepred
