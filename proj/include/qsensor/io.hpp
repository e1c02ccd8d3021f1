// Output helpers: atomic writes, CSV with '#' metadata headers, tiny SVG plots.
// Doubles are printed with %.17g so reruns are byte-identical.
#pragma once

#include <string>
#include <vector>

namespace qs {

std::string format_double(double v);

// write-temp-then-rename so partial outputs never land under the final name
void atomic_write(const std::string& path, const std::string& content);

struct CsvTable {
  std::vector<std::string> header_lines;  // emitted as "# ..." before the data
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  std::string render() const;
};

// polyline plot of columns y[i] against x, one path per series
std::string render_svg_lines(const std::vector<double>& x,
                             const std::vector<std::vector<double>>& series,
                             const std::vector<std::string>& labels, const std::string& title);

}  // namespace qs
