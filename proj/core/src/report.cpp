#include "moflp/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "moflp/errors.hpp"
#include "moflp/util.hpp"

namespace moflp {

CsvWriter::CsvWriter(std::vector<std::string> header) : width_(header.size()) {
  rows_.push_back(std::move(header));
}

CsvWriter& CsvWriter::begin_row() {
  rows_.emplace_back();
  return *this;
}

CsvWriter& CsvWriter::col(const std::string& value) {
  rows_.back().push_back(value);
  return *this;
}

CsvWriter& CsvWriter::col(double value) { return col(fmt_double(value)); }
CsvWriter& CsvWriter::col(long value) { return col(std::to_string(value)); }
CsvWriter& CsvWriter::col(int value) { return col(std::to_string(value)); }

std::string CsvWriter::str() const {
  std::ostringstream os;
  for (const auto& row : rows_) {
    if (row.size() != width_) {
      throw std::logic_error("CSV row width " + std::to_string(row.size()) +
                             " != header width " + std::to_string(width_));
    }
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (k) os << ',';
      os << row[k];
    }
    os << '\n';
  }
  return os.str();
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  for (char c : line) {
    if (c == ',') {
      out.push_back(std::move(cell));
      cell.clear();
    } else if (c != '\r') {
      cell.push_back(c);
    }
  }
  out.push_back(std::move(cell));
  return out;
}

BoxStats box_stats(std::vector<double> values) {
  if (values.empty()) throw DomainError("box_stats requires at least one value");
  std::sort(values.begin(), values.end());
  const auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(values.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] * (1.0 - frac) + values[hi] * frac;
  };
  return {values.front(), quantile(0.25), quantile(0.5), quantile(0.75), values.back()};
}

SvgPlot::SvgPlot(std::string title, std::string x_label, std::string y_label)
    : title_(std::move(title)), x_label_(std::move(x_label)), y_label_(std::move(y_label)) {}

void SvgPlot::add_scatter(std::vector<Point> points, const std::string& color,
                          const std::string& label) {
  series_.push_back({Series::Kind::scatter, std::move(points), color, label});
}

void SvgPlot::add_line(std::vector<Point> points, const std::string& color,
                       const std::string& label) {
  series_.push_back({Series::Kind::line, std::move(points), color, label});
}

void SvgPlot::add_step_front(std::vector<Point> points, const std::string& color,
                             const std::string& label) {
  std::sort(points.begin(), points.end(),
            [](const Point& a, const Point& b) { return a.x != b.x ? a.x < b.x : a.y < b.y; });
  series_.push_back({Series::Kind::step, std::move(points), color, label});
}

void SvgPlot::add_box(double x, double width, const BoxStats& stats, const std::string& color,
                      const std::string& label) {
  boxes_.push_back({x, width, stats, color, label});
}

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

}  // namespace

std::string SvgPlot::render(int width, int height) const {
  const double ml = 70, mr = 20, mt = 40, mb = 55;
  const double pw = width - ml - mr;
  const double ph = height - mt - mb;

  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  auto grow = [&](double x, double y) {
    xmin = std::min(xmin, x);
    xmax = std::max(xmax, x);
    ymin = std::min(ymin, y);
    ymax = std::max(ymax, y);
  };
  for (const auto& s : series_)
    for (const auto& p : s.points) grow(p.x, p.y);
  for (const auto& b : boxes_) {
    grow(b.x - b.width, b.stats.min);
    grow(b.x + b.width, b.stats.max);
  }
  if (!std::isfinite(xmin)) {
    xmin = 0;
    xmax = 1;
    ymin = 0;
    ymax = 1;
  }
  if (xmax - xmin < 1e-12) {
    xmin -= 0.5;
    xmax += 0.5;
  }
  if (ymax - ymin < 1e-12) {
    ymin -= 0.5;
    ymax += 0.5;
  }
  const double xpad = 0.05 * (xmax - xmin);
  const double ypad = 0.05 * (ymax - ymin);
  xmin -= xpad;
  xmax += xpad;
  ymin -= ypad;
  ymax += ypad;

  auto sx = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * pw; };
  auto sy = [&](double y) { return mt + ph - (y - ymin) / (ymax - ymin) * ph; };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
     << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\" "
     << "font-family=\"sans-serif\">" << title_ << "</text>\n";

  // Axes and ticks.
  os << "<line x1=\"" << num(ml) << "\" y1=\"" << num(mt + ph) << "\" x2=\"" << num(ml + pw)
     << "\" y2=\"" << num(mt + ph) << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << num(ml) << "\" y1=\"" << num(mt) << "\" x2=\"" << num(ml)
     << "\" y2=\"" << num(mt + ph) << "\" stroke=\"black\"/>\n";
  const int ticks = 5;
  for (int t = 0; t <= ticks; ++t) {
    const double fx = xmin + (xmax - xmin) * t / ticks;
    const double fy = ymin + (ymax - ymin) * t / ticks;
    os << "<line x1=\"" << num(sx(fx)) << "\" y1=\"" << num(mt + ph) << "\" x2=\""
       << num(sx(fx)) << "\" y2=\"" << num(mt + ph + 5) << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << num(sx(fx)) << "\" y=\"" << num(mt + ph + 18)
       << "\" text-anchor=\"middle\" font-size=\"11\" font-family=\"sans-serif\">"
       << tick_label(fx) << "</text>\n";
    os << "<line x1=\"" << num(ml - 5) << "\" y1=\"" << num(sy(fy)) << "\" x2=\"" << num(ml)
       << "\" y2=\"" << num(sy(fy)) << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << num(ml - 8) << "\" y=\"" << num(sy(fy) + 4)
       << "\" text-anchor=\"end\" font-size=\"11\" font-family=\"sans-serif\">"
       << tick_label(fy) << "</text>\n";
  }
  os << "<text x=\"" << width / 2 << "\" y=\"" << height - 12
     << "\" text-anchor=\"middle\" font-size=\"13\" font-family=\"sans-serif\">" << x_label_
     << "</text>\n";
  os << "<text x=\"16\" y=\"" << mt + ph / 2
     << "\" text-anchor=\"middle\" font-size=\"13\" font-family=\"sans-serif\" "
     << "transform=\"rotate(-90 16 " << mt + ph / 2 << ")\">" << y_label_ << "</text>\n";

  // Series.
  for (const auto& s : series_) {
    if (s.kind == Series::Kind::scatter) {
      for (const auto& p : s.points) {
        os << "<circle cx=\"" << num(sx(p.x)) << "\" cy=\"" << num(sy(p.y))
           << "\" r=\"3\" fill=\"" << s.color << "\" fill-opacity=\"0.75\"/>\n";
      }
    } else {
      std::ostringstream path;
      bool first = true;
      double prev_y = 0.0;
      for (const auto& p : s.points) {
        if (first) {
          path << "M " << num(sx(p.x)) << ' ' << num(sy(p.y));
          first = false;
        } else {
          if (s.kind == Series::Kind::step) {
            path << " L " << num(sx(p.x)) << ' ' << num(sy(prev_y));
          }
          path << " L " << num(sx(p.x)) << ' ' << num(sy(p.y));
        }
        prev_y = p.y;
      }
      os << "<path d=\"" << path.str() << "\" fill=\"none\" stroke=\"" << s.color
         << "\" stroke-width=\"1.5\"/>\n";
    }
  }

  // Boxes.
  for (const auto& b : boxes_) {
    const double x0 = sx(b.x - b.width / 2);
    const double x1 = sx(b.x + b.width / 2);
    const double xc = sx(b.x);
    os << "<line x1=\"" << num(xc) << "\" y1=\"" << num(sy(b.stats.min)) << "\" x2=\""
       << num(xc) << "\" y2=\"" << num(sy(b.stats.max)) << "\" stroke=\"" << b.color
       << "\"/>\n";
    for (double whisker : {b.stats.min, b.stats.max}) {
      os << "<line x1=\"" << num(x0 + (x1 - x0) * 0.25) << "\" y1=\"" << num(sy(whisker))
         << "\" x2=\"" << num(x1 - (x1 - x0) * 0.25) << "\" y2=\"" << num(sy(whisker))
         << "\" stroke=\"" << b.color << "\"/>\n";
    }
    os << "<rect x=\"" << num(x0) << "\" y=\"" << num(sy(b.stats.q3)) << "\" width=\""
       << num(x1 - x0) << "\" height=\"" << num(sy(b.stats.q1) - sy(b.stats.q3))
       << "\" fill=\"" << b.color << "\" fill-opacity=\"0.25\" stroke=\"" << b.color
       << "\"/>\n";
    os << "<line x1=\"" << num(x0) << "\" y1=\"" << num(sy(b.stats.median)) << "\" x2=\""
       << num(x1) << "\" y2=\"" << num(sy(b.stats.median)) << "\" stroke=\"" << b.color
       << "\" stroke-width=\"2\"/>\n";
  }

  // Legend.
  double ly = mt + 6;
  auto legend_entry = [&](const std::string& color, const std::string& label) {
    if (label.empty()) return;
    os << "<rect x=\"" << num(ml + pw - 150) << "\" y=\"" << num(ly) << "\" width=\"10\" "
       << "height=\"10\" fill=\"" << color << "\"/>\n";
    os << "<text x=\"" << num(ml + pw - 135) << "\" y=\"" << num(ly + 9)
       << "\" font-size=\"11\" font-family=\"sans-serif\">" << label << "</text>\n";
    ly += 16;
  };
  for (const auto& s : series_) legend_entry(s.color, s.label);
  for (const auto& b : boxes_) legend_entry(b.color, b.label);

  os << "</svg>\n";
  return os.str();
}

}  // namespace moflp
