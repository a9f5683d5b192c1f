#include "burstlab/io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <vector>

namespace burstlab {

namespace {

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open for writing: " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("short write: " + path.string());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open: " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  return bytes;
}

// Reads one whitespace-delimited token, skipping '#' comment lines.
std::string next_token(const std::string& bytes, std::size_t& pos) {
  while (pos < bytes.size()) {
    if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
      ++pos;
    } else if (bytes[pos] == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else {
      break;
    }
  }
  std::size_t start = pos;
  while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos])))
    ++pos;
  if (start == pos) throw FormatError("truncated header");
  return bytes.substr(start, pos - start);
}

}  // namespace

void save_raw_frame(const RawFrame& frame, const std::filesystem::path& path) {
  frame.validate();
  const long maxval = (1L << frame.bit_depth) - 1;
  std::string bytes = "P5\n" + std::to_string(frame.width) + " " +
                      std::to_string(frame.height) + "\n" +
                      std::to_string(maxval) + "\n";
  bytes.reserve(bytes.size() + frame.data.size() * 2);
  for (double v : frame.data) {
    const long q = std::lround(v * static_cast<double>(maxval));
    const auto u = static_cast<unsigned>(std::clamp(q, 0L, maxval));
    if (maxval > 255) bytes.push_back(static_cast<char>((u >> 8) & 0xff));
    bytes.push_back(static_cast<char>(u & 0xff));
  }
  write_file(path, bytes);

  nlohmann::json sidecar;
  sidecar["cfa"] = to_string(frame.cfa);
  sidecar["bit_depth"] = frame.bit_depth;
  sidecar["white_level"] = maxval;
  std::filesystem::path sidecar_path = path;
  sidecar_path.replace_extension(".json");
  write_file(sidecar_path, sidecar.dump(2) + "\n");
}

RawFrame load_raw_frame(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  std::size_t pos = 0;
  if (next_token(bytes, pos) != "P5")
    throw FormatError("not a binary PGM: " + path.string());
  const int width = std::stoi(next_token(bytes, pos));
  const int height = std::stoi(next_token(bytes, pos));
  const long maxval = std::stol(next_token(bytes, pos));
  if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 65535)
    throw FormatError("bad PGM header: " + path.string());
  ++pos;  // single whitespace after maxval

  std::filesystem::path sidecar_path = path;
  sidecar_path.replace_extension(".json");
  CfaPattern cfa = CfaPattern::kRggb;
  int bit_depth = 0;
  if (std::filesystem::exists(sidecar_path)) {
    nlohmann::json sidecar;
    try {
      sidecar = nlohmann::json::parse(read_file(sidecar_path));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("bad frame sidecar: ") + e.what());
    }
    cfa = cfa_from_string(sidecar.at("cfa").get<std::string>());
    bit_depth = sidecar.at("bit_depth").get<int>();
    if (sidecar.at("white_level").get<long>() != maxval)
      throw FormatError("sidecar white_level disagrees with PGM maxval");
  } else {
    while ((1L << bit_depth) - 1 < maxval) ++bit_depth;
  }
  if ((1L << bit_depth) - 1 != maxval)
    throw FormatError("PGM maxval is not 2^bit_depth - 1");

  const int bpp = maxval > 255 ? 2 : 1;
  const std::size_t need = static_cast<std::size_t>(width) * height * bpp;
  if (bytes.size() - pos < need) throw FormatError("truncated PGM payload");

  RawFrame frame(height, width, cfa, 0.0, bit_depth);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + pos);
  for (std::size_t i = 0; i < frame.data.size(); ++i) {
    unsigned u;
    if (bpp == 2) {
      u = static_cast<unsigned>(p[2 * i]) << 8 | p[2 * i + 1];
    } else {
      u = p[i];
    }
    frame.data[i] = static_cast<double>(u) / static_cast<double>(maxval);
  }
  frame.validate();
  return frame;
}

void save_pfm(const ImagePlane& img, const std::filesystem::path& path) {
  if (img.channels() != 1 && img.channels() != 3)
    throw ShapeError("save_pfm: 1 or 3 channels required");
  static_assert(std::endian::native == std::endian::little,
                "PFM writer assumes a little-endian host");
  std::string bytes = std::string(img.channels() == 3 ? "PF" : "Pf") + "\n" +
                      std::to_string(img.width()) + " " +
                      std::to_string(img.height()) + "\n-1.0\n";
  std::vector<float> row(static_cast<std::size_t>(img.width()) * img.channels());
  for (int r = img.height() - 1; r >= 0; --r) {  // bottom-to-top
    std::size_t k = 0;
    for (int c = 0; c < img.width(); ++c)
      for (int ch = 0; ch < img.channels(); ++ch)
        row[k++] = static_cast<float>(img.at(r, c, ch));
    bytes.append(reinterpret_cast<const char*>(row.data()),
                 row.size() * sizeof(float));
  }
  write_file(path, bytes);
}

ImagePlane load_pfm(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  std::size_t pos = 0;
  const std::string magic = next_token(bytes, pos);
  int channels;
  if (magic == "PF")
    channels = 3;
  else if (magic == "Pf")
    channels = 1;
  else
    throw FormatError("not a PFM file: " + path.string());
  const int width = std::stoi(next_token(bytes, pos));
  const int height = std::stoi(next_token(bytes, pos));
  const double scale = std::stod(next_token(bytes, pos));
  if (scale >= 0.0)
    throw FormatError("big-endian PFM is not supported: " + path.string());
  if (width <= 0 || height <= 0) throw FormatError("bad PFM header");
  ++pos;

  const std::size_t need =
      static_cast<std::size_t>(width) * height * channels * sizeof(float);
  if (bytes.size() - pos < need) throw FormatError("truncated PFM payload");

  ImagePlane img(height, width, channels);
  const char* p = bytes.data() + pos;
  for (int r = height - 1; r >= 0; --r)
    for (int c = 0; c < width; ++c)
      for (int ch = 0; ch < channels; ++ch) {
        float f;
        std::memcpy(&f, p, sizeof(float));
        p += sizeof(float);
        img.at(r, c, ch) = static_cast<double>(f);
      }
  return img;
}

void save_png(const ImagePlane& img, const std::filesystem::path& path,
              double display_gamma) {
  if (img.channels() != 1 && img.channels() != 3)
    throw ShapeError("save_png: 1 or 3 channels required");
  FILE* fp = std::fopen(path.string().c_str(), "wb");
  if (!fp) throw FormatError("cannot open for writing: " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                            nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (png) png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw FormatError("libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw FormatError("libpng write failed: " + path.string());
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, img.width(), img.height(), 8,
               img.channels() == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);

  std::vector<png_byte> row(static_cast<std::size_t>(img.width()) * img.channels());
  for (int r = 0; r < img.height(); ++r) {
    for (int c = 0; c < img.width(); ++c)
      for (int ch = 0; ch < img.channels(); ++ch) {
        const double lin = std::clamp(img.at(r, c, ch), 0.0, 1.0);
        const double enc = std::pow(lin, 1.0 / display_gamma);
        row[static_cast<std::size_t>(c) * img.channels() + ch] =
            static_cast<png_byte>(std::lround(enc * 255.0));
      }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

ImagePlane load_png(const std::filesystem::path& path, double display_gamma) {
  FILE* fp = std::fopen(path.string().c_str(), "rb");
  if (!fp) throw FormatError("cannot open: " + path.string());
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                           nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (png) png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw FormatError("libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw FormatError("libpng read failed: " + path.string());
  }
  png_init_io(png, fp);
  png_read_info(png, info);

  // Normalize whatever comes in to 8-bit gray or RGB.
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_set_palette_to_rgb(png);
  png_set_expand_gray_1_2_4_to_8(png);
  png_read_update_info(png, info);

  const int width = static_cast<int>(png_get_image_width(png, info));
  const int height = static_cast<int>(png_get_image_height(png, info));
  const int channels = static_cast<int>(png_get_channels(png, info));
  if (channels != 1 && channels != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw FormatError("unsupported PNG channel count");
  }

  std::vector<png_byte> row(static_cast<std::size_t>(width) * channels);
  ImagePlane img(height, width, channels);
  for (int r = 0; r < height; ++r) {
    png_read_row(png, row.data(), nullptr);
    for (int c = 0; c < width; ++c)
      for (int ch = 0; ch < channels; ++ch) {
        const double enc =
            row[static_cast<std::size_t>(c) * channels + ch] / 255.0;
        img.at(r, c, ch) = std::pow(enc, display_gamma);
      }
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  std::fclose(fp);
  return img;
}

ImagePlane load_image(const std::filesystem::path& path) {
  const std::string ext = path.extension().string();
  if (ext == ".pfm") return load_pfm(path);
  if (ext == ".png") return load_png(path);
  throw FormatError("unsupported image extension: " + path.string());
}

namespace {

std::string frame_name(int i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%03d.pgm", i);
  return buf;
}

}  // namespace

void save_burst(const Burst& burst, const std::filesystem::path& dir) {
  burst.validate();
  std::filesystem::create_directories(dir);
  for (int i = 0; i < burst.size(); ++i)
    save_raw_frame(burst.frames[i], dir / frame_name(i));
  save_trajectory(burst.trajectory, dir / "trajectory.json");

  nlohmann::json meta;
  meta["n_frames"] = burst.size();
  meta["cfa"] = to_string(burst.frames.front().cfa);
  meta["bit_depth"] = burst.frames.front().bit_depth;
  meta["height"] = burst.frames.front().height;
  meta["width"] = burst.frames.front().width;
  nlohmann::json extra = nlohmann::json::object();
  for (const auto& [k, v] : burst.meta) extra[k] = v;
  meta["meta"] = extra;
  write_file(dir / "burst.json", meta.dump(2) + "\n");
}

Burst load_burst(const std::filesystem::path& dir) {
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(read_file(dir / "burst.json"));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad burst.json: ") + e.what());
  }
  const int n = meta.at("n_frames").get<int>();
  if (n < 1) throw FormatError("burst.json: n_frames must be >= 1");

  Burst burst;
  for (int i = 0; i < n; ++i)
    burst.frames.push_back(load_raw_frame(dir / frame_name(i)));
  burst.trajectory = load_trajectory(dir / "trajectory.json");
  if (meta.contains("meta"))
    for (const auto& [k, v] : meta.at("meta").items())
      burst.meta[k] = v.get<std::string>();
  burst.validate();
  return burst;
}

}  // namespace burstlab
