#pragma once

#include <string>
#include <vector>

#include "polycbf/polytope.hpp"
#include "polycbf/sim.hpp"

namespace polycbf {

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    std::string color = "#1f77b4";
    bool dashed = false;
};

struct ChartOptions {
    std::string title;
    std::string x_label;
    std::string y_label;
    int width = 640;
    int height = 420;
    bool equal_aspect = false;
};

/// Self-contained SVG document with axes, ticks, a legend and one polyline
/// per series.
std::string line_chart(const std::vector<Series>& series, const ChartOptions& options);

/// Vertices (counter-clockwise) of each term's polygon for a planar spec,
/// clipped to `box_lo`/`box_hi`.
std::vector<std::vector<Eigen::Vector2d>> term_polygons(const SafetySpec& spec,
                                                        const Eigen::Vector2d& box_lo,
                                                        const Eigen::Vector2d& box_hi);

/// Writes <prefix>_angles.svg, <prefix>_magnitudes.svg and, for n = 2,
/// <prefix>_phase.svg with the safety-set outline. Returns the paths.
std::vector<std::string> write_trajectory_plots(const std::vector<const TrajectoryLog*>& logs,
                                                const std::vector<std::string>& labels,
                                                const SafetySpec& spec,
                                                const std::string& out_dir,
                                                const std::string& prefix);

} // namespace polycbf
