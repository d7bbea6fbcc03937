#pragma once

#include "mlrn/image.hpp"

#include <filesystem>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

namespace mlrn {

enum class ChannelMode { Y, Rgb };

std::string to_string(ChannelMode mode);
ChannelMode parse_channel_mode(const std::string& text);

struct MetricOptions {
  ChannelMode mode = ChannelMode::Y;
  Eigen::Index shave = 0;
};

struct MetricReport {
  double psnr_db = std::numeric_limits<double>::infinity();
  double ssim = 1.0;
  ChannelMode mode = ChannelMode::Y;
  Eigen::Index shave = 0;
};

/// BT.601 studio-swing luma. Single-channel input is returned unchanged.
Image rgb_to_y(const Image& img);

/// Returns +infinity for identical regions.
double psnr(const Image& ref, const Image& test, const MetricOptions& opts = {});
/// Mean SSIM over valid 11x11 Gaussian windows (sigma 1.5); rgb mode averages
/// the per-channel values.
double ssim(const Image& ref, const Image& test, const MetricOptions& opts = {});
MetricReport measure(const Image& ref, const Image& test, const MetricOptions& opts = {});

/// Arithmetic means over images. Infinite PSNR values are left out unless
/// every value is infinite.
MetricReport average(const std::vector<MetricReport>& reports);

struct ImageMetric {
  std::string image_id;
  MetricReport report;
};

struct DirEvaluation {
  std::vector<ImageMetric> images;
  MetricReport average;
  std::vector<std::string> missing;
  Eigen::Index scale = 1;
};

/// Compares every PNG of test_dir with the same-stem PNG of ref_dir. A
/// reference larger than its test image by less than `scale` pixels per side
/// is cropped top-left, matching the divisibility crop of degradation.
DirEvaluation evaluate_dir(const std::filesystem::path& ref_dir, const std::filesystem::path& test_dir,
                           Eigen::Index scale, const MetricOptions& opts);

/// Aligns a reference to a super-resolved size by top-left crop.
Image crop_reference(const Image& ref, Eigen::Index h, Eigen::Index w, Eigen::Index scale);

void write_metrics_csv(std::ostream& out, const std::vector<ImageMetric>& images, const MetricReport& average,
                       Eigen::Index scale);
/// "PSNR/SSIM: 33.66/0.9299"
std::string summary_line(const MetricReport& report);

}  // namespace mlrn
