#include "cinepred/image_io.hpp"

#include "cinepred/error.hpp"

#include <nlohmann/json.hpp>

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace cinepred {

namespace fs = std::filesystem;
using nlohmann::json;

void ImageSequence::validate() const {
  if (frames.size() < 2) throw LoadError("sequence requires at least 2 frames");
  const Eigen::Index h = frames.front().rows();
  const Eigen::Index w = frames.front().cols();
  if (h == 0 || w == 0) throw LoadError("sequence frames are empty");
  for (std::size_t k = 1; k < frames.size(); ++k) {
    if (frames[k].rows() != h || frames[k].cols() != w) {
      std::ostringstream os;
      os << "frame dimension mismatch: frame " << k + 1 << " is "
         << frames[k].rows() << "x" << frames[k].cols() << ", expected " << h
         << "x" << w;
      throw LoadError(os.str());
    }
  }
  if (!(sampling_hz > 0.0) || !std::isfinite(sampling_hz))
    throw LoadError("sampling_hz must be positive");
  for (double s : pixel_spacing_mm)
    if (!(s > 0.0) || !std::isfinite(s))
      throw LoadError("pixel_spacing_mm must be positive");
}

namespace {

// Skips whitespace and '#' comments in a PNM header.
void skip_pnm_space(std::istream& in) {
  while (true) {
    const int c = in.peek();
    if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      in.get();
    } else {
      return;
    }
  }
}

int read_pnm_int(std::istream& in, const fs::path& path) {
  skip_pnm_space(in);
  int v = -1;
  if (!(in >> v) || v < 0) throw LoadError("malformed PGM header: " + path.string());
  return v;
}

void put_u32(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                              static_cast<unsigned char>((v >> 8) & 0xff),
                              static_cast<unsigned char>((v >> 16) & 0xff),
                              static_cast<unsigned char>((v >> 24) & 0xff)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f32(std::ostream& out, double value) {
  put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(value)));
}

double get_f32(std::istream& in) {
  return static_cast<double>(std::bit_cast<float>(get_u32(in)));
}

fs::path resolve(const fs::path& base_dir, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base_dir / path;
}

std::string numbered(const char* prefix, std::size_t k, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%04zu.%s", prefix, k, ext);
  return buf;
}

}  // namespace

Image read_pgm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open frame file: " + path.string());
  char magic[2];
  in.read(magic, 2);
  if (!in || magic[0] != 'P' || magic[1] != '5')
    throw LoadError("not a binary PGM (P5) file: " + path.string());
  const int width = read_pnm_int(in, path);
  const int height = read_pnm_int(in, path);
  const int maxval = read_pnm_int(in, path);
  if (width == 0 || height == 0 || maxval == 0 || maxval > 255)
    throw LoadError("unsupported PGM geometry or depth: " + path.string());
  in.get();  // single whitespace before the raster
  std::vector<unsigned char> raster(static_cast<std::size_t>(width) * height);
  in.read(reinterpret_cast<char*>(raster.data()),
          static_cast<std::streamsize>(raster.size()));
  if (in.gcount() != static_cast<std::streamsize>(raster.size()))
    throw LoadError("truncated PGM raster: " + path.string());
  Image img(height, width);
  for (int r = 0; r < height; ++r)
    for (int c = 0; c < width; ++c)
      img(r, c) = raster[static_cast<std::size_t>(r) * width + c];
  return img;
}

void write_pgm(const fs::path& path, const Image& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("io", "cannot write frame file: " + path.string());
  out << "P5\n" << image.cols() << " " << image.rows() << "\n255\n";
  std::vector<unsigned char> raster(static_cast<std::size_t>(image.size()));
  for (Eigen::Index r = 0; r < image.rows(); ++r) {
    for (Eigen::Index c = 0; c < image.cols(); ++c) {
      const double v = std::clamp(std::round(image(r, c)), 0.0, 255.0);
      raster[static_cast<std::size_t>(r * image.cols() + c)] =
          static_cast<unsigned char>(v);
    }
  }
  out.write(reinterpret_cast<const char*>(raster.data()),
            static_cast<std::streamsize>(raster.size()));
}

ImageSequence load_sequence(const fs::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw LoadError("cannot open manifest: " + manifest_path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw LoadError("malformed manifest " + manifest_path.string() + ": " + e.what());
  }
  if (!doc.contains("frames") || !doc["frames"].is_array())
    throw LoadError("manifest has no frames array");
  const auto& frames = doc["frames"];
  if (frames.size() < 2) throw LoadError("sequence requires at least 2 frames");

  ImageSequence seq;
  seq.name = doc.value("name", manifest_path.stem().string());
  try {
    seq.sampling_hz = doc.at("sampling_hz").get<double>();
    const auto& sp = doc.at("pixel_spacing_mm");
    if (sp.is_array()) {
      if (sp.size() != 2) throw LoadError("pixel_spacing_mm must have 2 entries");
      seq.pixel_spacing_mm = {sp[0].get<double>(), sp[1].get<double>()};
    } else {
      seq.pixel_spacing_mm = {sp.get<double>(), sp.get<double>()};
    }
  } catch (const json::exception& e) {
    throw LoadError(std::string("manifest metadata missing or invalid: ") + e.what());
  }

  const fs::path base = manifest_path.parent_path();
  seq.frames.reserve(frames.size());
  for (const auto& f : frames) seq.frames.push_back(read_pgm(resolve(base, f.get<std::string>())));
  seq.validate();
  return seq;
}

fs::path save_sequence(const ImageSequence& seq, const fs::path& dir) {
  seq.validate();
  fs::create_directories(dir);
  json doc;
  doc["name"] = seq.name;
  doc["sampling_hz"] = seq.sampling_hz;
  doc["pixel_spacing_mm"] = {seq.pixel_spacing_mm[0], seq.pixel_spacing_mm[1]};
  json frames = json::array();
  for (std::size_t k = 0; k < seq.frames.size(); ++k) {
    const std::string file = numbered("frame", k + 1, "pgm");
    write_pgm(dir / file, seq.frames[k]);
    frames.push_back(file);
  }
  doc["frames"] = frames;
  const fs::path manifest = dir / "manifest.json";
  std::ofstream(manifest) << doc.dump(2) << "\n";
  return manifest;
}

DisplacementField read_dvf(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open DVF file: " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "DVF1", 4) != 0)
    throw LoadError("bad DVF1 magic: " + path.string());
  const std::uint32_t h = get_u32(in);
  const std::uint32_t w = get_u32(in);
  if (!in || h == 0 || w == 0) throw LoadError("bad DVF1 header: " + path.string());
  DisplacementField f(h, w);
  for (std::uint32_t r = 0; r < h; ++r)
    for (std::uint32_t c = 0; c < w; ++c) f.ux(r, c) = get_f32(in);
  for (std::uint32_t r = 0; r < h; ++r)
    for (std::uint32_t c = 0; c < w; ++c) f.uy(r, c) = get_f32(in);
  if (!in) throw LoadError("truncated DVF1 data: " + path.string());
  if (!f.all_finite()) throw LoadError("non-finite DVF entries: " + path.string());
  return f;
}

void write_dvf(const fs::path& path, const DisplacementField& field) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("io", "cannot write DVF file: " + path.string());
  out.write("DVF1", 4);
  put_u32(out, static_cast<std::uint32_t>(field.height()));
  put_u32(out, static_cast<std::uint32_t>(field.width()));
  for (Eigen::Index r = 0; r < field.height(); ++r)
    for (Eigen::Index c = 0; c < field.width(); ++c) put_f32(out, field.ux(r, c));
  for (Eigen::Index r = 0; r < field.height(); ++r)
    for (Eigen::Index c = 0; c < field.width(); ++c) put_f32(out, field.uy(r, c));
}

std::vector<DisplacementField> load_dvf_list(const fs::path& list_path) {
  std::ifstream in(list_path);
  if (!in) throw LoadError("cannot open DVF list: " + list_path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw LoadError("malformed DVF list " + list_path.string() + ": " + e.what());
  }
  if (!doc.contains("fields") || !doc["fields"].is_array())
    throw LoadError("DVF list has no fields array");
  std::vector<DisplacementField> out;
  for (const auto& f : doc["fields"])
    out.push_back(read_dvf(resolve(list_path.parent_path(), f.get<std::string>())));
  for (const auto& f : out)
    if (f.height() != out.front().height() || f.width() != out.front().width())
      throw LoadError("DVF list mixes field shapes");
  return out;
}

fs::path save_dvf_list(const std::vector<DisplacementField>& fields, const fs::path& dir) {
  fs::create_directories(dir);
  json files = json::array();
  for (std::size_t k = 0; k < fields.size(); ++k) {
    const std::string file = numbered("dvf", k + 1, "dvf");
    write_dvf(dir / file, fields[k]);
    files.push_back(file);
  }
  const fs::path list = dir / "dvfs.json";
  std::ofstream(list) << json{{"fields", files}}.dump(2) << "\n";
  return list;
}

}  // namespace cinepred
