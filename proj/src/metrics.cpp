#include "mlrn/metrics.hpp"

#include "mlrn/dataset.hpp"
#include "mlrn/parallel.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <stdexcept>

namespace mlrn {

std::string to_string(ChannelMode mode) { return mode == ChannelMode::Y ? "y" : "rgb"; }

ChannelMode parse_channel_mode(const std::string& text) {
  if (text == "y") return ChannelMode::Y;
  if (text == "rgb") return ChannelMode::Rgb;
  throw std::invalid_argument("unknown channel mode '" + text + "' (expected y or rgb)");
}

Image rgb_to_y(const Image& img) {
  if (img.channels() == 1) return img;
  if (img.channels() != 3) throw std::invalid_argument("rgb_to_y: expected 1 or 3 channels");
  Image y;
  y.planes.emplace_back(16.0 + (65.481 * img.planes[0] + 128.553 * img.planes[1] + 24.966 * img.planes[2]) / 255.0);
  return y;
}

namespace {

using Eigen::Index;

constexpr Index kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = (0.01 * 255.0) * (0.01 * 255.0);
constexpr double kC2 = (0.03 * 255.0) * (0.03 * 255.0);

// Shave, check, and (in Y mode) convert both images.
std::pair<Image, Image> prepare(const Image& ref, const Image& test, const MetricOptions& opts) {
  if (ref.channels() != test.channels() || ref.height() != test.height() || ref.width() != test.width()) {
    throw std::invalid_argument("metric inputs differ in size: " + std::to_string(ref.height()) + "x" +
                                std::to_string(ref.width()) + " vs " + std::to_string(test.height()) + "x" +
                                std::to_string(test.width()));
  }
  const Index s = opts.shave;
  if (s < 0 || 2 * s >= ref.height() || 2 * s >= ref.width()) {
    throw std::invalid_argument("shave " + std::to_string(s) + " leaves no pixels");
  }
  Image a = ref.crop(s, s, ref.height() - 2 * s, ref.width() - 2 * s);
  Image b = test.crop(s, s, test.height() - 2 * s, test.width() - 2 * s);
  if (opts.mode == ChannelMode::Y) {
    a = rgb_to_y(a);
    b = rgb_to_y(b);
  }
  return {std::move(a), std::move(b)};
}

std::array<double, kWindow> gaussian_window() {
  std::array<double, kWindow> g{};
  double total = 0.0;
  for (Index i = 0; i < kWindow; ++i) {
    const double d = static_cast<double>(i - kWindow / 2);
    g[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
    total += g[i];
  }
  for (double& v : g) v /= total;
  return g;
}

// Valid-mode separable Gaussian filtering.
Plane filter_valid(const Plane& p) {
  static const std::array<double, kWindow> g = gaussian_window();
  const Index oh = p.rows() - kWindow + 1;
  const Index ow = p.cols() - kWindow + 1;
  Plane rows(p.rows(), ow);
  for (Index y = 0; y < p.rows(); ++y)
    for (Index x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (Index k = 0; k < kWindow; ++k) acc += g[k] * p(y, x + k);
      rows(y, x) = acc;
    }
  Plane out(oh, ow);
  for (Index y = 0; y < oh; ++y)
    for (Index x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (Index k = 0; k < kWindow; ++k) acc += g[k] * rows(y + k, x);
      out(y, x) = acc;
    }
  return out;
}

double ssim_plane(const Plane& x, const Plane& y) {
  const Plane mx = filter_valid(x);
  const Plane my = filter_valid(y);
  const Plane sxx = filter_valid(x * x) - mx * mx;
  const Plane syy = filter_valid(y * y) - my * my;
  const Plane sxy = filter_valid(x * y) - mx * my;
  const Plane map = ((2.0 * mx * my + kC1) * (2.0 * sxy + kC2)) / ((mx * mx + my * my + kC1) * (sxx + syy + kC2));
  return map.sum() / static_cast<double>(map.size());
}

}  // namespace

double psnr(const Image& ref, const Image& test, const MetricOptions& opts) {
  const auto [a, b] = prepare(ref, test, opts);
  double sq = 0.0;
  double count = 0.0;
  for (Index c = 0; c < a.channels(); ++c) {
    sq += (a.planes[c] - b.planes[c]).square().sum();
    count += static_cast<double>(a.planes[c].size());
  }
  const double mse = sq / count;
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

double ssim(const Image& ref, const Image& test, const MetricOptions& opts) {
  const auto [a, b] = prepare(ref, test, opts);
  if (a.height() < kWindow || a.width() < kWindow) {
    throw std::invalid_argument("ssim: evaluated region smaller than the 11x11 window");
  }
  double total = 0.0;
  for (Index c = 0; c < a.channels(); ++c) total += ssim_plane(a.planes[c], b.planes[c]);
  return total / static_cast<double>(a.channels());
}

MetricReport measure(const Image& ref, const Image& test, const MetricOptions& opts) {
  return MetricReport{psnr(ref, test, opts), ssim(ref, test, opts), opts.mode, opts.shave};
}

MetricReport average(const std::vector<MetricReport>& reports) {
  if (reports.empty()) throw std::invalid_argument("average: no reports");
  MetricReport out;
  out.mode = reports.front().mode;
  out.shave = reports.front().shave;
  double psnr_sum = 0.0, ssim_sum = 0.0;
  std::size_t finite = 0;
  for (const MetricReport& r : reports) {
    if (std::isfinite(r.psnr_db)) {
      psnr_sum += r.psnr_db;
      ++finite;
    }
    ssim_sum += r.ssim;
  }
  out.psnr_db = finite ? psnr_sum / static_cast<double>(finite) : std::numeric_limits<double>::infinity();
  out.ssim = ssim_sum / static_cast<double>(reports.size());
  return out;
}

Image crop_reference(const Image& ref, Index h, Index w, Index scale) {
  if (ref.height() == h && ref.width() == w) return ref;
  if (ref.height() < h || ref.width() < w || ref.height() - h >= scale || ref.width() - w >= scale) {
    throw std::invalid_argument("reference " + std::to_string(ref.height()) + "x" + std::to_string(ref.width()) +
                                " does not match test image " + std::to_string(h) + "x" + std::to_string(w));
  }
  return ref.crop(0, 0, h, w);
}

DirEvaluation evaluate_dir(const std::filesystem::path& ref_dir, const std::filesystem::path& test_dir, Index scale,
                           const MetricOptions& opts) {
  std::map<std::string, std::filesystem::path> refs;
  for (const auto& p : list_images(ref_dir)) refs.emplace(p.stem().string(), p);

  DirEvaluation result;
  result.scale = scale;
  std::vector<std::pair<std::string, std::filesystem::path>> jobs;
  for (const auto& p : list_images(test_dir)) {
    const std::string id = p.stem().string();
    if (refs.count(id)) {
      jobs.emplace_back(id, p);
    } else {
      result.missing.push_back(id);
    }
  }
  for (const auto& [id, path] : refs) {
    if (!std::filesystem::exists(test_dir / (id + ".png"))) result.missing.push_back(id);
  }

  result.images.resize(jobs.size());
  parallel_for(static_cast<Index>(jobs.size()), [&](Index i) {
    const Image test = load_image(jobs[i].second);
    const Image ref = crop_reference(load_image(refs.at(jobs[i].first)), test.height(), test.width(), scale);
    result.images[i] = ImageMetric{jobs[i].first, measure(ref, test, opts)};
  });
  if (!result.images.empty()) {
    std::vector<MetricReport> reports;
    for (const ImageMetric& m : result.images) reports.push_back(m.report);
    result.average = average(reports);
  }
  result.average.mode = opts.mode;
  result.average.shave = opts.shave;
  return result;
}

void write_metrics_csv(std::ostream& out, const std::vector<ImageMetric>& images, const MetricReport& average,
                       Index scale) {
  auto row = [&](const std::string& id, const MetricReport& r) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f,%.6f", r.psnr_db, r.ssim);
    out << id << ',' << buf << ',' << scale << ',' << to_string(r.mode) << ',' << r.shave << '\n';
  };
  out << "image_id,psnr_db,ssim,scale,channel_mode,shave\n";
  for (const ImageMetric& m : images) row(m.image_id, m.report);
  row("AVERAGE", average);
}

std::string summary_line(const MetricReport& report) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "PSNR/SSIM: %.2f/%.4f", report.psnr_db, report.ssim);
  return buf;
}

}  // namespace mlrn
