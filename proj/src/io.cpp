#include "qsensor/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace qs {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void atomic_write(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp + " for writing");
    out << content;
    if (!out) throw std::runtime_error("write failed for " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw std::runtime_error("rename failed for " + path);
}

std::string CsvTable::render() const {
  std::string out;
  for (const auto& line : header_lines) out += "# " + line + "\n";
  for (size_t c = 0; c < columns.size(); ++c) out += (c ? "," : "") + columns[c];
  out += "\n";
  for (const auto& row : rows) {
    for (size_t c = 0; c < row.size(); ++c) out += (c ? "," : "") + format_double(row[c]);
    out += "\n";
  }
  return out;
}

std::string render_svg_lines(const std::vector<double>& x,
                             const std::vector<std::vector<double>>& series,
                             const std::vector<std::string>& labels, const std::string& title) {
  const int width = 800, height = 480, margin = 50;
  double xmin = x.front(), xmax = x.back();
  double ymin = 1e300, ymax = -1e300;
  for (const auto& s : series)
    for (double v : s) {
      ymin = std::min(ymin, v);
      ymax = std::max(ymax, v);
    }
  if (!(ymax > ymin)) {
    ymax = ymin + 1;
    ymin -= 1;
  }
  auto xmap = [&](double v) {
    return margin + (v - xmin) / (xmax - xmin) * (width - 2 * margin);
  };
  auto ymap = [&](double v) {
    return height - margin - (v - ymin) / (ymax - ymin) * (height - 2 * margin);
  };
  const char* palette[] = {"#2a6f97", "#e76f51", "#2a9d8f", "#9b5de5", "#f4a261"};
  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) +
                    "\" height=\"" + std::to_string(height) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<text x=\"" + std::to_string(width / 2) + "\" y=\"24\" text-anchor=\"middle\">" + title +
         "</text>\n";
  svg += "<line x1=\"" + std::to_string(margin) + "\" y1=\"" + std::to_string(height - margin) +
         "\" x2=\"" + std::to_string(width - margin) + "\" y2=\"" +
         std::to_string(height - margin) + "\" stroke=\"black\"/>\n";
  svg += "<line x1=\"" + std::to_string(margin) + "\" y1=\"" + std::to_string(margin) + "\" x2=\"" +
         std::to_string(margin) + "\" y2=\"" + std::to_string(height - margin) +
         "\" stroke=\"black\"/>\n";
  for (size_t s = 0; s < series.size(); ++s) {
    std::string points;
    for (size_t i = 0; i < x.size() && i < series[s].size(); ++i) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.2f,%.2f ", xmap(x[i]), ymap(series[s][i]));
      points += buf;
    }
    svg += "<polyline fill=\"none\" stroke=\"" + std::string(palette[s % 5]) +
           "\" stroke-width=\"1.5\" points=\"" + points + "\"/>\n";
    if (s < labels.size())
      svg += "<text x=\"" + std::to_string(width - margin - 150) + "\" y=\"" +
             std::to_string(margin + 18 * (s + 1)) + "\" fill=\"" + palette[s % 5] + "\">" +
             labels[s] + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace qs
