#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "pomarl/contract.hpp"
#include "pomarl/csv.hpp"

namespace pomarl::harness {

struct PlotSeries {
  std::string label;
  std::string color;
  std::vector<double> mean;
  std::vector<double> stddev;  // may be empty for no band
};

// Static vector image: one polyline per series with a translucent +-std
// band, a dashed vertical line at the centralized/decentralized boundary,
// and min/max axis labels. Everything is regenerable from the CSVs.
inline void write_line_plot(const std::string& path, const std::string& title,
                            const std::string& x_label, const std::string& y_label,
                            const std::vector<PlotSeries>& series, int phase_boundary = -1) {
  POMARL_CHECK(!series.empty());
  const double width = 760, height = 480;
  const double ml = 70, mr = 20, mt = 40, mb = 50;
  const double pw = width - ml - mr, ph = height - mt - mb;

  std::size_t len = 0;
  double ymin = std::numeric_limits<double>::infinity(), ymax = -ymin;
  for (const auto& s : series) {
    len = std::max(len, s.mean.size());
    for (std::size_t i = 0; i < s.mean.size(); ++i) {
      if (std::isnan(s.mean[i])) continue;
      const double d = (i < s.stddev.size() && !std::isnan(s.stddev[i])) ? s.stddev[i] : 0.0;
      ymin = std::min(ymin, s.mean[i] - d);
      ymax = std::max(ymax, s.mean[i] + d);
    }
  }
  if (!std::isfinite(ymin)) {
    ymin = 0;
    ymax = 1;
  }
  if (ymax - ymin < 1e-12) {
    ymin -= 0.5;
    ymax += 0.5;
  }
  const double xmax = len > 1 ? static_cast<double>(len - 1) : 1.0;
  auto X = [&](double i) { return ml + pw * (i / xmax); };
  auto Y = [&](double v) { return mt + ph * (1.0 - (v - ymin) / (ymax - ymin)); };

  std::ofstream os(path);
  POMARL_CHECK_MSG(os.good(), "cannot open for writing: " + path);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
     << title << "</text>\n";
  // axes
  os << "<line x1=\"" << ml << "\" y1=\"" << mt + ph << "\" x2=\"" << ml + pw << "\" y2=\""
     << mt + ph << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << mt + ph
     << "\" stroke=\"black\"/>\n";
  os << "<text x=\"" << ml << "\" y=\"" << height - 14 << "\" font-size=\"12\">0</text>\n";
  os << "<text x=\"" << ml + pw << "\" y=\"" << height - 14
     << "\" text-anchor=\"end\" font-size=\"12\">" << fmt(xmax) << "</text>\n";
  os << "<text x=\"" << width / 2 << "\" y=\"" << height - 14
     << "\" text-anchor=\"middle\" font-size=\"12\">" << x_label << "</text>\n";
  os << "<text x=\"14\" y=\"" << mt + ph << "\" font-size=\"12\">" << fmt(ymin) << "</text>\n";
  os << "<text x=\"14\" y=\"" << mt + 10 << "\" font-size=\"12\">" << fmt(ymax) << "</text>\n";
  os << "<text x=\"16\" y=\"" << mt + ph / 2
     << "\" font-size=\"12\" transform=\"rotate(-90 16 " << mt + ph / 2 << ")\" "
     << "text-anchor=\"middle\">" << y_label << "</text>\n";
  if (phase_boundary > 0 && phase_boundary < static_cast<int>(len)) {
    const double x = X(phase_boundary);
    os << "<line x1=\"" << x << "\" y1=\"" << mt << "\" x2=\"" << x << "\" y2=\"" << mt + ph
       << "\" stroke=\"black\" stroke-dasharray=\"6,4\"/>\n";
  }
  int legend_row = 0;
  for (const auto& s : series) {
    if (!s.stddev.empty()) {
      std::string band;
      for (std::size_t i = 0; i < s.mean.size(); ++i) {
        if (std::isnan(s.mean[i])) continue;
        const double d = i < s.stddev.size() && !std::isnan(s.stddev[i]) ? s.stddev[i] : 0.0;
        band += fmt(X(static_cast<double>(i))) + "," + fmt(Y(s.mean[i] + d)) + " ";
      }
      for (std::size_t ri = s.mean.size(); ri-- > 0;) {
        if (std::isnan(s.mean[ri])) continue;
        const double d = ri < s.stddev.size() && !std::isnan(s.stddev[ri]) ? s.stddev[ri] : 0.0;
        band += fmt(X(static_cast<double>(ri))) + "," + fmt(Y(s.mean[ri] - d)) + " ";
      }
      if (!band.empty())
        os << "<polygon points=\"" << band << "\" fill=\"" << s.color
           << "\" fill-opacity=\"0.18\" stroke=\"none\"/>\n";
    }
    std::string line;
    for (std::size_t i = 0; i < s.mean.size(); ++i) {
      if (std::isnan(s.mean[i])) continue;
      line += fmt(X(static_cast<double>(i))) + "," + fmt(Y(s.mean[i])) + " ";
    }
    os << "<polyline points=\"" << line << "\" fill=\"none\" stroke=\"" << s.color
       << "\" stroke-width=\"1.5\"/>\n";
    const double ly = mt + 14 + 16 * legend_row++;
    os << "<line x1=\"" << ml + pw - 150 << "\" y1=\"" << ly << "\" x2=\"" << ml + pw - 120
       << "\" y2=\"" << ly << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << ml + pw - 114 << "\" y=\"" << ly + 4 << "\" font-size=\"12\">"
       << s.label << "</text>\n";
  }
  os << "</svg>\n";
}

inline const char* series_color(int index) {
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                  "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
  return palette[index % 8];
}

}  // namespace pomarl::harness
