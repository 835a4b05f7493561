#include "polycbf/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

namespace polycbf {

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

std::string fmt(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string escape(const std::string& s)
{
    std::string out;
    for (char c : s) {
        switch (c) {
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '&': out += "&amp;"; break;
        default: out += c;
        }
    }
    return out;
}

double nice_step(double span, int target)
{
    const double raw = span / std::max(target, 1);
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    const double f = raw / mag;
    return mag * (f < 1.5 ? 1 : f < 3.5 ? 2 : f < 7.5 ? 5 : 10);
}

// Keeps the part of `poly` with a.x + b >= 0.
std::vector<Eigen::Vector2d> clip(const std::vector<Eigen::Vector2d>& poly,
                                  const Eigen::Vector2d& a, double b)
{
    std::vector<Eigen::Vector2d> out;
    const std::size_t k = poly.size();
    for (std::size_t i = 0; i < k; ++i) {
        const auto& p = poly[i];
        const auto& q = poly[(i + 1) % k];
        const double fp = a.dot(p) + b;
        const double fq = a.dot(q) + b;
        if (fp >= 0)
            out.push_back(p);
        if ((fp >= 0) != (fq >= 0))
            out.push_back(p + (fp / (fp - fq)) * (q - p));
    }
    return out;
}

} // namespace

std::string line_chart(const std::vector<Series>& series, const ChartOptions& o)
{
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    double ymin = xmin, ymax = -xmin;
    for (const auto& s : series) {
        if (s.x.size() != s.y.size())
            throw Error(ErrorKind::InvalidSpec, "series '" + s.label + "' has mismatched x and y");
        for (double v : s.x) {
            if (std::isfinite(v)) {
                xmin = std::min(xmin, v);
                xmax = std::max(xmax, v);
            }
        }
        for (double v : s.y) {
            if (std::isfinite(v)) {
                ymin = std::min(ymin, v);
                ymax = std::max(ymax, v);
            }
        }
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
    const double ypad = 0.05 * (ymax - ymin);
    ymin -= ypad;
    ymax += ypad;

    const double left = 70, right = 20, top = 40, bottom = 50;
    double pw = o.width - left - right;
    double ph = o.height - top - bottom;
    if (o.equal_aspect) {
        const double sx = pw / (xmax - xmin);
        const double sy = ph / (ymax - ymin);
        if (sx > sy) {
            const double extra = (pw / sy - (xmax - xmin)) / 2;
            xmin -= extra;
            xmax += extra;
        } else {
            const double extra = (ph / sx - (ymax - ymin)) / 2;
            ymin -= extra;
            ymax += extra;
        }
    }
    const auto X = [&](double v) { return left + (v - xmin) / (xmax - xmin) * pw; };
    const auto Y = [&](double v) { return top + (ymax - v) / (ymax - ymin) * ph; };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << o.width << "\" height=\""
       << o.height << "\" viewBox=\"0 0 " << o.width << ' ' << o.height
       << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << o.width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
       << escape(o.title) << "</text>\n";
    os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
       << "\" fill=\"none\" stroke=\"black\"/>\n";

    const double xs = nice_step(xmax - xmin, 8);
    for (double v = std::ceil(xmin / xs) * xs; v <= xmax + 1e-9 * xs; v += xs) {
        os << "<line x1=\"" << fmt(X(v)) << "\" y1=\"" << top + ph << "\" x2=\"" << fmt(X(v))
           << "\" y2=\"" << top + ph + 5 << "\" stroke=\"black\"/>"
           << "<text x=\"" << fmt(X(v)) << "\" y=\"" << top + ph + 18
           << "\" text-anchor=\"middle\">" << fmt(std::abs(v) < 1e-12 * xs ? 0 : v)
           << "</text>\n";
    }
    const double ys = nice_step(ymax - ymin, 6);
    for (double v = std::ceil(ymin / ys) * ys; v <= ymax + 1e-9 * ys; v += ys) {
        os << "<line x1=\"" << left - 5 << "\" y1=\"" << fmt(Y(v)) << "\" x2=\"" << left
           << "\" y2=\"" << fmt(Y(v)) << "\" stroke=\"black\"/>"
           << "<text x=\"" << left - 8 << "\" y=\"" << fmt(Y(v) + 4)
           << "\" text-anchor=\"end\">" << fmt(std::abs(v) < 1e-12 * ys ? 0 : v) << "</text>\n";
    }
    os << "<text x=\"" << left + pw / 2 << "\" y=\"" << o.height - 10
       << "\" text-anchor=\"middle\">" << escape(o.x_label) << "</text>\n";
    os << "<text x=\"16\" y=\"" << top + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
       << top + ph / 2 << ")\">" << escape(o.y_label) << "</text>\n";

    os << "<clipPath id=\"plot\"><rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw
       << "\" height=\"" << ph << "\"/></clipPath>\n";
    for (const auto& s : series) {
        os << "<polyline clip-path=\"url(#plot)\" fill=\"none\" stroke=\"" << s.color
           << "\" stroke-width=\"1.5\"" << (s.dashed ? " stroke-dasharray=\"6 4\"" : "")
           << " points=\"";
        const std::size_t k = std::min(s.x.size(), s.y.size());
        // Thin long traces to at most ~4000 points per series.
        const std::size_t stride = std::max<std::size_t>(1, k / 4000);
        for (std::size_t i = 0; i < k; i += stride)
            os << fmt(X(s.x[i])) << ',' << fmt(Y(s.y[i])) << ' ';
        if (k && (k - 1) % stride)
            os << fmt(X(s.x[k - 1])) << ',' << fmt(Y(s.y[k - 1]));
        os << "\"/>\n";
    }
    double ly = top + 16;
    for (const auto& s : series) {
        if (s.label.empty())
            continue;
        os << "<line x1=\"" << left + pw - 140 << "\" y1=\"" << ly - 4 << "\" x2=\""
           << left + pw - 115 << "\" y2=\"" << ly - 4 << "\" stroke=\"" << s.color
           << "\" stroke-width=\"2\"" << (s.dashed ? " stroke-dasharray=\"6 4\"" : "") << "/>"
           << "<text x=\"" << left + pw - 108 << "\" y=\"" << ly << "\">" << escape(s.label)
           << "</text>\n";
        ly += 16;
    }
    os << "</svg>\n";
    return os.str();
}

std::vector<std::vector<Eigen::Vector2d>> term_polygons(const SafetySpec& spec,
                                                        const Eigen::Vector2d& lo,
                                                        const Eigen::Vector2d& hi)
{
    if (spec.dim() != 2)
        throw Error(ErrorKind::InvalidSpec, "term polygons need a planar spec");
    std::vector<std::vector<Eigen::Vector2d>> out;
    for (const auto& term : spec.terms()) {
        std::vector<Eigen::Vector2d> poly = {lo, {hi(0), lo(1)}, hi, {lo(0), hi(1)}};
        for (int i : term) {
            poly = clip(poly, spec.halfspace(i).a, spec.halfspace(i).b);
            if (poly.empty())
                break;
        }
        out.push_back(std::move(poly));
    }
    return out;
}

std::vector<std::string> write_trajectory_plots(const std::vector<const TrajectoryLog*>& logs,
                                                const std::vector<std::string>& labels,
                                                const SafetySpec& spec,
                                                const std::string& out_dir,
                                                const std::string& prefix)
{
    std::filesystem::create_directories(out_dir);
    std::vector<std::string> written;
    const auto save = [&](const std::string& name, const std::string& svg) {
        const std::string path = (std::filesystem::path(out_dir) / (prefix + name)).string();
        std::ofstream f(path);
        if (!f)
            throw Error(ErrorKind::Io, "cannot write " + path);
        f << svg;
        written.push_back(path);
    };
    const auto label = [&](std::size_t k) {
        return k < labels.size() ? labels[k] : "run " + std::to_string(k + 1);
    };

    std::vector<Series> angles, mags;
    for (std::size_t k = 0; k < logs.size(); ++k) {
        const auto& log = *logs[k];
        std::vector<double> t;
        for (const auto& r : log.rows)
            t.push_back(r.t);
        for (int j = 0; j < log.n; ++j) {
            Series s{label(k) + " x1_" + std::to_string(j + 1), t, {},
                     kPalette[(k * log.n + j) % 6], j > 0};
            for (const auto& r : log.rows)
                s.y.push_back(r.x(j));
            angles.push_back(std::move(s));
        }
        Series su{label(k) + " |u|", t, {}, kPalette[(2 * k) % 6]};
        Series sv{label(k) + " |x2|", t, {}, kPalette[(2 * k + 1) % 6], true};
        for (const auto& r : log.rows) {
            su.y.push_back(r.u.norm());
            sv.y.push_back(r.x.tail(log.n).norm());
        }
        mags.push_back(std::move(su));
        mags.push_back(std::move(sv));
    }
    save("_angles.svg", line_chart(angles, {"Positions", "t [s]", "x1", 640, 420, false}));
    save("_magnitudes.svg",
         line_chart(mags, {"Input and velocity magnitudes", "t [s]", "norm", 640, 420, false}));

    if (spec.dim() == 2) {
        const auto [lo, hi] = bounding_box(spec);
        const Eigen::Vector2d pad = 0.05 * (hi - lo) + Eigen::Vector2d::Constant(1e-9);
        std::vector<Series> phase;
        const auto polys = term_polygons(spec, lo - pad, hi + pad);
        for (std::size_t p = 0; p < polys.size(); ++p) {
            Series s{p == 0 ? "safe set" : "", {}, {}, "#555555", true};
            for (const auto& v : polys[p]) {
                s.x.push_back(v(0));
                s.y.push_back(v(1));
            }
            if (!polys[p].empty()) {
                s.x.push_back(polys[p][0](0));
                s.y.push_back(polys[p][0](1));
            }
            phase.push_back(std::move(s));
        }
        for (std::size_t k = 0; k < logs.size(); ++k) {
            Series s{label(k), {}, {}, kPalette[k % 6]};
            for (const auto& r : logs[k]->rows) {
                s.x.push_back(r.x(0));
                s.y.push_back(r.x(1));
            }
            phase.push_back(std::move(s));
        }
        save("_phase.svg", line_chart(phase, {"Position portrait", "x1_1", "x1_2", 560, 560, true}));
    }
    return written;
}

} // namespace polycbf
