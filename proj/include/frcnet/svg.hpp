#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace frcnet {

/// Minimal line-plot writer: axes with tick labels, polylines, point markers
/// and a legend. NaN samples split a polyline into segments.
class SvgPlot {
 public:
  SvgPlot(std::string title, std::string x_label, std::string y_label);

  void add_series(Eigen::VectorXd x, Eigen::VectorXd y, std::string color,
                  std::string label);
  void add_marker(double x, double y, std::string color, std::string label);

  void write(const std::string& path) const;

 private:
  struct Series {
    Eigen::VectorXd x, y;
    std::string color, label;
  };
  struct Marker {
    double x, y;
    std::string color, label;
  };

  std::string title_, x_label_, y_label_;
  std::vector<Series> series_;
  std::vector<Marker> markers_;
};

}  // namespace frcnet
