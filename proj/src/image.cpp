#include "fastspec/image.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>

#include "fastspec/errors.hpp"

namespace fastspec {

bool GrayImage::is_square_pow2() const {
  return width == height && width > 0 && std::has_single_bit(width);
}

std::vector<int> LabelMap::empty_clusters() const {
  std::vector<char> seen(static_cast<std::size_t>(std::max(k, 0)), 0);
  for (int l : labels) {
    if (l >= 0 && l < k) seen[static_cast<std::size_t>(l)] = 1;
  }
  std::vector<int> out;
  for (int c = 0; c < k; ++c) {
    if (!seen[static_cast<std::size_t>(c)]) out.push_back(c);
  }
  return out;
}

LabelMap LabelMap::cropped() const {
  LabelMap out;
  out.width = width - pad_right;
  out.height = height - pad_bottom;
  out.k = k;
  out.labels.resize(out.width * out.height);
  for (std::size_t y = 0; y < out.height; ++y) {
    std::copy_n(labels.begin() + static_cast<std::ptrdiff_t>(y * width),
                out.width,
                out.labels.begin() + static_cast<std::ptrdiff_t>(y * out.width));
  }
  return out;
}

namespace {

std::string read_token(std::istream& in) {
  std::string tok;
  char c;
  while (in.get(c)) {
    if (c == '#') {
      std::string ignored;
      std::getline(in, ignored);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(c);
  }
  return tok;
}

std::size_t parse_header_value(std::istream& in, const std::string& what) {
  const std::string tok = read_token(in);
  try {
    std::size_t pos = 0;
    const unsigned long v = std::stoul(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw FormatError("PGM: bad " + what + " '" + tok + "'");
  }
}

GrayImage load_pgm(std::istream& in, const std::string& magic) {
  const std::size_t w = parse_header_value(in, "width");
  const std::size_t h = parse_header_value(in, "height");
  const std::size_t maxval = parse_header_value(in, "maxval");
  if (w == 0 || h == 0) throw FormatError("PGM: empty image");
  if (maxval == 0 || maxval > 65535) throw FormatError("PGM: maxval out of range");

  GrayImage img(w, h);
  const double scale = 1.0 / static_cast<double>(maxval);
  if (magic == "P2") {
    for (auto& v : img.data) {
      const std::size_t raw = parse_header_value(in, "pixel");
      if (raw > maxval) throw FormatError("PGM: pixel exceeds maxval");
      v = static_cast<double>(raw) * scale;
    }
  } else {
    const std::size_t bytes = maxval > 255 ? 2 : 1;
    std::vector<unsigned char> buf(w * h * bytes);
    in.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(buf.size()));
    if (static_cast<std::size_t>(in.gcount()) != buf.size()) {
      throw FormatError("PGM: truncated pixel data");
    }
    for (std::size_t i = 0; i < w * h; ++i) {
      std::size_t raw = bytes == 2 ? (std::size_t{buf[2 * i]} << 8) | buf[2 * i + 1]
                                   : std::size_t{buf[i]};
      raw = std::min(raw, maxval);
      img.data[i] = static_cast<double>(raw) * scale;
    }
  }
  return img;
}

GrayImage load_png(const std::filesystem::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw FormatError("PNG: " + std::string(image.message));
  }
  if (image.format & PNG_FORMAT_FLAG_LINEAR) {
    png_image_free(&image);
    throw FormatError("PNG: only 8-bit images are supported");
  }
  const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const std::size_t channels = color ? 3 : 1;
  std::vector<unsigned char> buf(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw FormatError("PNG: " + msg);
  }
  GrayImage img(image.width, image.height);
  for (std::size_t i = 0; i < img.size(); ++i) {
    const unsigned char* px = buf.data() + i * channels;
    const double v = color ? 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2]
                           : static_cast<double>(px[0]);
    img.data[i] = std::clamp(v / 255.0, 0.0, 1.0);
  }
  return img;
}

}  // namespace

GrayImage load_gray(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  unsigned char sig[8] = {};
  in.read(reinterpret_cast<char*>(sig), 8);
  const auto got = static_cast<std::size_t>(in.gcount());
  if (got >= 8 && png_sig_cmp(sig, 0, 8) == 0) {
    in.close();
    return load_png(path);
  }
  if (got >= 2 && sig[0] == 'P' && (sig[1] == '2' || sig[1] == '5')) {
    in.clear();
    in.seekg(2);
    return load_pgm(in, sig[1] == '2' ? "P2" : "P5");
  }
  throw FormatError("unsupported image format: '" + path.string() + "'");
}

GrayImage resize_bilinear(const GrayImage& img, std::size_t side) {
  if (side < 2) throw ArgumentError("resize_bilinear: side must be >= 2");
  if (img.size() == 0) throw ArgumentError("resize_bilinear: empty image");
  GrayImage out(side, side);
  const double sx = static_cast<double>(img.width) / static_cast<double>(side);
  const double sy = static_cast<double>(img.height) / static_cast<double>(side);
  const double xmax = static_cast<double>(img.width - 1);
  const double ymax = static_cast<double>(img.height - 1);
  for (std::size_t y = 0; y < side; ++y) {
    const double fy = std::clamp((static_cast<double>(y) + 0.5) * sy - 0.5, 0.0, ymax);
    const auto y0 = static_cast<std::size_t>(fy);
    const std::size_t y1 = std::min(y0 + 1, img.height - 1);
    const double wy = fy - static_cast<double>(y0);
    for (std::size_t x = 0; x < side; ++x) {
      const double fx =
          std::clamp((static_cast<double>(x) + 0.5) * sx - 0.5, 0.0, xmax);
      const auto x0 = static_cast<std::size_t>(fx);
      const std::size_t x1 = std::min(x0 + 1, img.width - 1);
      const double wx = fx - static_cast<double>(x0);
      double v = (1 - wy) * ((1 - wx) * img.at(x0, y0) + wx * img.at(x1, y0)) +
                 wy * ((1 - wx) * img.at(x0, y1) + wx * img.at(x1, y1));
      // exact no-op when both weights vanish
      if (wx == 0.0 && wy == 0.0) v = img.at(x0, y0);
      out.at(x, y) = v;
    }
  }
  return out;
}

GrayImage pad_to_pow2(const GrayImage& img) {
  const std::size_t side = std::bit_ceil(std::max(img.width, img.height));
  if (img.width == side && img.height == side) return img;
  GrayImage out(side, side);
  for (std::size_t y = 0; y < side; ++y) {
    const std::size_t sy = std::min(y, img.height - 1);
    for (std::size_t x = 0; x < side; ++x) {
      out.at(x, y) = img.at(std::min(x, img.width - 1), sy);
    }
  }
  out.pad_right = img.pad_right + (side - img.width);
  out.pad_bottom = img.pad_bottom + (side - img.height);
  return out;
}

GrayImage crop_padding(const GrayImage& img) {
  GrayImage out(img.original_width(), img.original_height());
  for (std::size_t y = 0; y < out.height; ++y) {
    for (std::size_t x = 0; x < out.width; ++x) out.at(x, y) = img.at(x, y);
  }
  return out;
}

std::vector<std::array<unsigned char, 3>> label_palette(int k) {
  std::vector<std::array<unsigned char, 3>> pal;
  for (int i = 0; i < k; ++i) {
    const double h = 6.0 * static_cast<double>(i) / static_cast<double>(k);
    const int sector = static_cast<int>(h) % 6;
    const double f = h - std::floor(h);
    double r = 0, g = 0, b = 0;
    switch (sector) {
      case 0: r = 1; g = f; break;
      case 1: r = 1 - f; g = 1; break;
      case 2: g = 1; b = f; break;
      case 3: g = 1 - f; b = 1; break;
      case 4: r = f; b = 1; break;
      default: r = 1; b = 1 - f; break;
    }
    auto q = [](double c) { return static_cast<unsigned char>(std::lround(c * 255)); };
    pal.push_back({q(r), q(g), q(b)});
  }
  return pal;
}

namespace {

void write_png(const std::filesystem::path& path, png_uint_32 w, png_uint_32 h,
               png_uint_32 format, const void* buf, const void* colormap,
               png_uint_32 colormap_entries) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = w;
  image.height = h;
  image.format = format;
  image.colormap_entries = colormap_entries;
  if (!png_image_write_to_file(&image, path.c_str(), 0, buf, 0, colormap)) {
    throw IoError("cannot write '" + path.string() + "': " + image.message);
  }
}

}  // namespace

void write_labels(const LabelMap& labels, const std::filesystem::path& path,
                  LabelFormat format) {
  const LabelMap out = labels.cropped();
  if (format == LabelFormat::csv) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot write '" + path.string() + "'");
    for (std::size_t y = 0; y < out.height; ++y) {
      for (std::size_t x = 0; x < out.width; ++x) {
        if (x) f << ',';
        f << out.at(x, y);
      }
      f << '\n';
    }
    if (!f) throw IoError("write failed: '" + path.string() + "'");
    return;
  }
  const int k = std::max(out.k, 1);
  if (k > 256) throw ArgumentError("png-palette output supports at most 256 clusters");
  const auto pal = label_palette(k);
  std::vector<unsigned char> cmap;
  for (const auto& c : pal) cmap.insert(cmap.end(), c.begin(), c.end());
  std::vector<unsigned char> idx(out.labels.size());
  std::transform(out.labels.begin(), out.labels.end(), idx.begin(),
                 [](int l) { return static_cast<unsigned char>(l); });
  write_png(path, static_cast<png_uint_32>(out.width),
            static_cast<png_uint_32>(out.height), PNG_FORMAT_RGB_COLORMAP,
            idx.data(), cmap.data(), static_cast<png_uint_32>(k));
}

LabelMap read_labels_csv(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open '" + path.string() + "'");
  LabelMap out;
  std::string line;
  int max_label = -1;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::size_t cols = 0;
    while (std::getline(ss, cell, ',')) {
      const int v = std::stoi(cell);
      max_label = std::max(max_label, v);
      out.labels.push_back(v);
      ++cols;
    }
    if (out.height == 0) out.width = cols;
    else if (cols != out.width) throw FormatError("ragged label CSV");
    ++out.height;
  }
  out.k = max_label + 1;
  return out;
}

void write_overlay(const GrayImage& img, const LabelMap& labels,
                   const std::filesystem::path& path, double opacity) {
  if (img.width != labels.width || img.height != labels.height) {
    throw ArgumentError("write_overlay: image and labels differ in size");
  }
  const LabelMap lab = labels.cropped();
  const auto pal = label_palette(std::max(lab.k, 1));
  std::vector<unsigned char> rgb(lab.labels.size() * 3);
  for (std::size_t y = 0; y < lab.height; ++y) {
    for (std::size_t x = 0; x < lab.width; ++x) {
      const std::size_t i = y * lab.width + x;
      const auto& c = pal[static_cast<std::size_t>(lab.labels[i])];
      const double g = img.at(x, y) * 255.0;
      for (int ch = 0; ch < 3; ++ch) {
        rgb[3 * i + static_cast<std::size_t>(ch)] = static_cast<unsigned char>(
            std::lround((1 - opacity) * g + opacity * c[static_cast<std::size_t>(ch)]));
      }
    }
  }
  write_png(path, static_cast<png_uint_32>(lab.width),
            static_cast<png_uint_32>(lab.height), PNG_FORMAT_RGB, rgb.data(),
            nullptr, 0);
}

void write_pgm(const GrayImage& img, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write '" + path.string() + "'");
  f << "P5\n" << img.width << ' ' << img.height << "\n255\n";
  for (double v : img.data) {
    f.put(static_cast<char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)));
  }
  if (!f) throw IoError("write failed: '" + path.string() + "'");
}

}  // namespace fastspec
