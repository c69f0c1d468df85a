#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace pvda {

// Minimal static chart rendering (PNG). Enough for loss curves, schedule
// traces and recall bars; not a general plotting library.
struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

void write_line_chart(const std::filesystem::path& path, const std::string& title,
                      const std::string& x_label, const std::string& y_label,
                      const std::vector<Series>& series, bool log_y = false);

void write_bar_chart(const std::filesystem::path& path, const std::string& title,
                     const std::vector<std::string>& labels, const std::vector<double>& values);

}  // namespace pvda
