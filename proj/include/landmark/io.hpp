#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "landmark/dynamics.hpp"
#include "landmark/geometry.hpp"

namespace landmark::io {

// Shortest round-trip decimal form, '.' separator, locale-independent.
inline std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// FNV-1a 64-bit, used to stamp reports with the config they came from.
inline std::uint64_t fnv1a(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(v));
  return std::string(buf);
}

// Write-then-rename so consumers never observe a partial file.
inline void write_file_atomic(const std::filesystem::path& path,
                              std::string_view content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string());
    out.write(content.data(),
              static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

// Trajectory CSV: t, x_{i,k}, p_{i,k}, H, P_k, L_m with a mandatory header,
// '\n' line endings, '.' decimal separator.
inline std::string trajectory_csv(const dynamics::Trajectory& traj,
                                  const kernels::Kernel& kernel) {
  if (traj.states.empty()) throw std::invalid_argument("empty trajectory");
  const int n = traj.states.front().n();
  const int d = traj.states.front().d();
  std::string out = "t";
  for (int i = 1; i <= n; ++i)
    for (int k = 1; k <= d; ++k)
      out += ",x_" + std::to_string(i) + "_" + std::to_string(k);
  for (int i = 1; i <= n; ++i)
    for (int k = 1; k <= d; ++k)
      out += ",p_" + std::to_string(i) + "_" + std::to_string(k);
  out += ",H";
  for (int k = 1; k <= d; ++k) out += ",P_" + std::to_string(k);
  for (int m = 1; m <= d * (d - 1) / 2; ++m)
    out += ",L_" + std::to_string(m);
  out += "\n";

  for (std::size_t s = 0; s < traj.states.size(); ++s) {
    const auto& st = traj.states[s];
    out += format_double(traj.times[s]);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < d; ++k) out += "," + format_double(st.x(i, k));
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < d; ++k) out += "," + format_double(st.p(i, k));
    const auto c = dynamics::conserved(st, kernel);
    out += "," + format_double(c.H);
    for (Eigen::Index k = 0; k < c.P.size(); ++k)
      out += "," + format_double(c.P[k]);
    for (Eigen::Index m = 0; m < c.L.size(); ++m)
      out += "," + format_double(c.L[m]);
    out += "\n";
  }
  return out;
}

// Curve CSV (t, x_{i,k} columns): the inverse of the trajectory position
// block; n and d are inferred from the header.
inline geometry::SampledCurve read_curve_csv(std::istream& in) {
  std::string header;
  if (!std::getline(in, header))
    throw std::runtime_error("curve csv: missing header");
  std::vector<std::string> cols;
  {
    std::stringstream ss(header);
    std::string tok;
    while (std::getline(ss, tok, ',')) cols.push_back(tok);
  }
  if (cols.empty() || cols.front() != "t")
    throw std::runtime_error("curve csv: first column must be t");
  int n = 0, d = 0;
  for (std::size_t c = 1; c < cols.size(); ++c) {
    int i = 0, k = 0;
    if (std::sscanf(cols[c].c_str(), "x_%d_%d", &i, &k) != 2)
      throw std::runtime_error("curve csv: bad column '" + cols[c] + "'");
    n = std::max(n, i);
    d = std::max(d, k);
  }
  if (static_cast<int>(cols.size()) != 1 + n * d)
    throw std::runtime_error("curve csv: header does not cover n*d columns");

  geometry::SampledCurve curve;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string tok;
    std::vector<double> vals;
    while (std::getline(ss, tok, ',')) vals.push_back(std::stod(tok));
    if (static_cast<int>(vals.size()) != 1 + n * d)
      throw std::runtime_error("curve csv: row width mismatch");
    curve.times.push_back(vals[0]);
    Eigen::MatrixXd pt(n, d);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < d; ++k) pt(i, k) = vals[1 + i * d + k];
    curve.points.push_back(std::move(pt));
  }
  return curve;
}

// Minimal SVG 1.1 document with polylines from sampled function graphs.
struct SvgSeries {
  std::string label;
  std::string color;
  std::vector<std::pair<double, double>> points;
};

inline std::string svg_plot(const std::vector<SvgSeries>& series, int width,
                            int height) {
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& s : series)
    for (const auto& [x, y] : s.points) {
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  if (!(xmax > xmin)) xmax = xmin + 1.0;
  if (!(ymax > ymin)) ymax = ymin + 1.0;
  const double mx = 50, my = 30;
  auto sx = [&](double x) {
    return mx + (x - xmin) / (xmax - xmin) * (width - 2 * mx);
  };
  auto sy = [&](double y) {
    return height - my - (y - ymin) / (ymax - ymin) * (height - 2 * my);
  };

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" +
         std::to_string(width) + "\" height=\"" + std::to_string(height) +
         "\">\n";
  out += "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out += "  <line x1=\"" + format_double(sx(xmin)) + "\" y1=\"" +
         format_double(sy(ymin)) + "\" x2=\"" + format_double(sx(xmax)) +
         "\" y2=\"" + format_double(sy(ymin)) +
         "\" stroke=\"black\" stroke-width=\"1\"/>\n";
  out += "  <line x1=\"" + format_double(sx(xmin)) + "\" y1=\"" +
         format_double(sy(ymin)) + "\" x2=\"" + format_double(sx(xmin)) +
         "\" y2=\"" + format_double(sy(ymax)) +
         "\" stroke=\"black\" stroke-width=\"1\"/>\n";
  int li = 0;
  for (const auto& s : series) {
    out += "  <polyline fill=\"none\" stroke=\"" + s.color +
           "\" stroke-width=\"1.5\" points=\"";
    for (const auto& [x, y] : s.points)
      out += format_double(sx(x)) + "," + format_double(sy(y)) + " ";
    out += "\"/>\n";
    out += "  <text x=\"" + format_double(width - 170.0) + "\" y=\"" +
           format_double(my + 18.0 * li) + "\" fill=\"" + s.color +
           "\" font-size=\"13\">" + s.label + "</text>\n";
    ++li;
  }
  out += "</svg>\n";
  return out;
}

}  // namespace landmark::io
