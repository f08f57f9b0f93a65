#ifndef MOFLP_REPORT_HPP
#define MOFLP_REPORT_HPP

#include <string>
#include <vector>

namespace moflp {

/// CSV assembly with deterministic number formatting (shortest round-trip).
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);

  CsvWriter& begin_row();
  CsvWriter& col(const std::string& value);
  CsvWriter& col(double value);
  CsvWriter& col(long value);
  CsvWriter& col(int value);

  /// Rendered document; throws if any row length disagrees with the header.
  std::string str() const;

 private:
  std::size_t width_;
  std::vector<std::vector<std::string>> rows_;
};

std::vector<std::string> split_csv_line(const std::string& line);

/// Five-number summary used by the sweep boxplots.
struct BoxStats {
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
};

BoxStats box_stats(std::vector<double> values);

/// Minimal self-contained SVG plotting: scatter marks, polylines, step fronts
/// and boxes on a single pair of linear axes.
class SvgPlot {
 public:
  struct Point {
    double x = 0.0;
    double y = 0.0;
  };

  SvgPlot(std::string title, std::string x_label, std::string y_label);

  void add_scatter(std::vector<Point> points, const std::string& color,
                   const std::string& label);
  void add_line(std::vector<Point> points, const std::string& color,
                const std::string& label);
  /// Lower-left staircase through the points (min-min orientation).
  void add_step_front(std::vector<Point> points, const std::string& color,
                      const std::string& label);
  void add_box(double x, double width, const BoxStats& stats, const std::string& color,
               const std::string& label);

  std::string render(int width = 760, int height = 520) const;

 private:
  struct Series {
    enum class Kind { scatter, line, step } kind;
    std::vector<Point> points;
    std::string color;
    std::string label;
  };
  struct Box {
    double x, width;
    BoxStats stats;
    std::string color;
    std::string label;
  };

  std::string title_, x_label_, y_label_;
  std::vector<Series> series_;
  std::vector<Box> boxes_;
};

}  // namespace moflp

#endif  // MOFLP_REPORT_HPP
