#pragma once

#include <cstddef>
#include <array>
#include <filesystem>
#include <span>
#include <vector>

namespace fastspec {

/// Grayscale image, row-major, intensities in [0,1].
///
/// `pad_right`/`pad_bottom` record how many columns/rows were appended by
/// pad_to_pow2(); the original content occupies the top-left
/// (width - pad_right) x (height - pad_bottom) region.
struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> data;
  std::size_t pad_right = 0;
  std::size_t pad_bottom = 0;

  GrayImage() = default;
  GrayImage(std::size_t w, std::size_t h, double fill = 0.0)
      : width(w), height(h), data(w * h, fill) {}

  double& at(std::size_t x, std::size_t y) { return data[y * width + x]; }
  double at(std::size_t x, std::size_t y) const { return data[y * width + x]; }
  std::size_t size() const { return data.size(); }
  bool is_square_pow2() const;
  std::size_t original_width() const { return width - pad_right; }
  std::size_t original_height() const { return height - pad_bottom; }
};

/// Per-pixel cluster labels in [0, k).
struct LabelMap {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<int> labels;
  int k = 0;
  std::size_t pad_right = 0;
  std::size_t pad_bottom = 0;

  int at(std::size_t x, std::size_t y) const { return labels[y * width + x]; }
  /// Cluster indices in [0,k) that no pixel carries.
  std::vector<int> empty_clusters() const;
  /// Copy with the padded border removed.
  LabelMap cropped() const;
};

enum class LabelFormat { png_palette, csv };

/// Reads PGM (P2/P5) or 8-bit PNG. RGB is converted with
/// 0.299R + 0.587G + 0.114B; values are divided by the format's max value.
GrayImage load_gray(const std::filesystem::path& path);

/// Bilinear resampling to side x side using pixel-center alignment.
GrayImage resize_bilinear(const GrayImage& img, std::size_t side);

/// Pads to the next power-of-two square by replicating edge pixels.
GrayImage pad_to_pow2(const GrayImage& img);

/// Crops the padded border of an image.
GrayImage crop_padding(const GrayImage& img);

void write_labels(const LabelMap& labels, const std::filesystem::path& path,
                  LabelFormat format);

/// Parses the CSV form written by write_labels.
LabelMap read_labels_csv(const std::filesystem::path& path);

/// Blends label colors over the image (cropped) and writes an RGB PNG.
void write_overlay(const GrayImage& img, const LabelMap& labels,
                   const std::filesystem::path& path, double opacity = 0.45);

/// Writes an 8-bit binary PGM (values scaled by 255 and rounded).
void write_pgm(const GrayImage& img, const std::filesystem::path& path);

/// k maximally spaced hues at full saturation, as 8-bit RGB triples.
std::vector<std::array<unsigned char, 3>> label_palette(int k);

}  // namespace fastspec
