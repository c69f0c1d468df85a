#include "pvda/plot.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

#include "pvda/common.hpp"

namespace pvda {

namespace {

constexpr int kWidth = 900;
constexpr int kHeight = 560;
constexpr int kMarginLeft = 80;
constexpr int kMarginRight = 30;
constexpr int kMarginTop = 50;
constexpr int kMarginBottom = 60;

const cv::Scalar kColors[] = {
    {180, 60, 30}, {30, 90, 190}, {40, 150, 60}, {30, 160, 200}, {140, 40, 150}, {20, 20, 20},
};

struct Range {
  double lo = 0.0, hi = 1.0;
};

Range nice_range(double lo, double hi) {
  if (!std::isfinite(lo) || !std::isfinite(hi)) return {0.0, 1.0};
  if (lo == hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double pad = (hi - lo) * 0.05;
  return {lo - pad, hi + pad};
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

}  // namespace

void write_line_chart(const std::filesystem::path& path, const std::string& title,
                      const std::string& x_label, const std::string& y_label,
                      const std::vector<Series>& series, bool log_y) {
  cv::Mat img(kHeight, kWidth, CV_8UC3, cv::Scalar(255, 255, 255));

  double x_lo = std::numeric_limits<double>::infinity(), x_hi = -x_lo;
  double y_lo = x_lo, y_hi = -x_lo;
  for (const auto& s : series) {
    for (double x : s.x) {
      x_lo = std::min(x_lo, x);
      x_hi = std::max(x_hi, x);
    }
    for (double y : s.y) {
      const double v = log_y ? std::log10(std::max(y, 1e-300)) : y;
      y_lo = std::min(y_lo, v);
      y_hi = std::max(y_hi, v);
    }
  }
  const Range xr = nice_range(x_lo, x_hi);
  const Range yr = nice_range(y_lo, y_hi);

  const auto to_px = [&](double x, double y) {
    const double v = log_y ? std::log10(std::max(y, 1e-300)) : y;
    const int px = kMarginLeft + static_cast<int>((x - xr.lo) / (xr.hi - xr.lo) *
                                                  (kWidth - kMarginLeft - kMarginRight));
    const int py = kHeight - kMarginBottom -
                   static_cast<int>((v - yr.lo) / (yr.hi - yr.lo) *
                                    (kHeight - kMarginTop - kMarginBottom));
    return cv::Point(px, py);
  };

  // axes + ticks
  cv::rectangle(img, cv::Point(kMarginLeft, kMarginTop),
                cv::Point(kWidth - kMarginRight, kHeight - kMarginBottom), cv::Scalar(120, 120, 120));
  for (int t = 0; t <= 5; ++t) {
    const double fx = xr.lo + (xr.hi - xr.lo) * t / 5.0;
    const double fy = yr.lo + (yr.hi - yr.lo) * t / 5.0;
    const cv::Point px = to_px(fx, log_y ? std::pow(10.0, fy) : fy);
    cv::line(img, cv::Point(px.x, kHeight - kMarginBottom), cv::Point(px.x, kHeight - kMarginBottom + 5),
             cv::Scalar(120, 120, 120));
    cv::putText(img, tick_label(fx), cv::Point(px.x - 15, kHeight - kMarginBottom + 22),
                cv::FONT_HERSHEY_SIMPLEX, 0.4, cv::Scalar(60, 60, 60), 1, cv::LINE_AA);
    cv::line(img, cv::Point(kMarginLeft - 5, px.y), cv::Point(kMarginLeft, px.y),
             cv::Scalar(120, 120, 120));
    const std::string yl = log_y ? ("1e" + tick_label(fy)) : tick_label(fy);
    cv::putText(img, yl, cv::Point(8, px.y + 4), cv::FONT_HERSHEY_SIMPLEX, 0.4,
                cv::Scalar(60, 60, 60), 1, cv::LINE_AA);
  }
  cv::putText(img, title, cv::Point(kMarginLeft, 30), cv::FONT_HERSHEY_SIMPLEX, 0.7,
              cv::Scalar(20, 20, 20), 1, cv::LINE_AA);
  cv::putText(img, x_label, cv::Point(kWidth / 2 - 40, kHeight - 18), cv::FONT_HERSHEY_SIMPLEX, 0.5,
              cv::Scalar(60, 60, 60), 1, cv::LINE_AA);
  cv::putText(img, y_label, cv::Point(8, kMarginTop - 12), cv::FONT_HERSHEY_SIMPLEX, 0.5,
              cv::Scalar(60, 60, 60), 1, cv::LINE_AA);

  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const cv::Scalar color = kColors[si % (sizeof kColors / sizeof kColors[0])];
    for (std::size_t i = 1; i < s.x.size(); ++i)
      cv::line(img, to_px(s.x[i - 1], s.y[i - 1]), to_px(s.x[i], s.y[i]), color, 1, cv::LINE_AA);
    cv::putText(img, s.label, cv::Point(kWidth - kMarginRight - 170,
                                        kMarginTop + 18 + static_cast<int>(si) * 18),
                cv::FONT_HERSHEY_SIMPLEX, 0.45, color, 1, cv::LINE_AA);
  }

  require<RuntimeFailure>(cv::imwrite(path.string(), img), "cannot write plot: " + path.string());
}

void write_bar_chart(const std::filesystem::path& path, const std::string& title,
                     const std::vector<std::string>& labels, const std::vector<double>& values) {
  require(labels.size() == values.size(), "write_bar_chart: labels/values size mismatch");
  cv::Mat img(kHeight, kWidth, CV_8UC3, cv::Scalar(255, 255, 255));
  const double vmax = values.empty() ? 1.0 : std::max(1e-12, *std::max_element(values.begin(), values.end()));
  const int plot_w = kWidth - kMarginLeft - kMarginRight;
  const int plot_h = kHeight - kMarginTop - kMarginBottom;
  const int n = static_cast<int>(values.size());
  const int slot = n > 0 ? plot_w / n : plot_w;

  cv::putText(img, title, cv::Point(kMarginLeft, 30), cv::FONT_HERSHEY_SIMPLEX, 0.7,
              cv::Scalar(20, 20, 20), 1, cv::LINE_AA);
  cv::rectangle(img, cv::Point(kMarginLeft, kMarginTop),
                cv::Point(kWidth - kMarginRight, kHeight - kMarginBottom), cv::Scalar(120, 120, 120));
  for (int i = 0; i < n; ++i) {
    const int h = static_cast<int>(values[static_cast<std::size_t>(i)] / vmax * (plot_h - 10));
    const int x0 = kMarginLeft + i * slot + slot / 6;
    const int x1 = kMarginLeft + (i + 1) * slot - slot / 6;
    const cv::Scalar color = kColors[static_cast<std::size_t>(i) % (sizeof kColors / sizeof kColors[0])];
    cv::rectangle(img, cv::Point(x0, kHeight - kMarginBottom - h),
                  cv::Point(x1, kHeight - kMarginBottom), color, cv::FILLED);
    char val[32];
    std::snprintf(val, sizeof val, "%.4f", values[static_cast<std::size_t>(i)]);
    cv::putText(img, val, cv::Point(x0, kHeight - kMarginBottom - h - 8), cv::FONT_HERSHEY_SIMPLEX,
                0.45, cv::Scalar(20, 20, 20), 1, cv::LINE_AA);
    cv::putText(img, labels[static_cast<std::size_t>(i)], cv::Point(x0, kHeight - kMarginBottom + 22),
                cv::FONT_HERSHEY_SIMPLEX, 0.45, cv::Scalar(60, 60, 60), 1, cv::LINE_AA);
  }
  require<RuntimeFailure>(cv::imwrite(path.string(), img), "cannot write plot: " + path.string());
}

}  // namespace pvda
