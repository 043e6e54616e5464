#include "splatprep/undistort.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "splatprep/error.hpp"
#include "splatprep/kernels.hpp"

namespace splatprep {

void validate(const DistortionModel& m) {
  for (double v : {m.fx, m.fy, m.cx, m.cy, m.k1, m.k2, m.k3, m.p1, m.p2})
    if (!std::isfinite(v)) throw UsageError("distortion model has a non-finite field");
  if (!(m.fx > 0.0 && m.fy > 0.0)) throw UsageError("focal lengths must be positive");
}

Vec2 correct_normalized(const DistortionModel& m, const Vec2& d) {
  const double x = d.x();
  const double y = d.y();
  const double r2 = x * x + y * y;
  const double radial = 1.0 + m.k1 * r2 + m.k2 * r2 * r2 + m.k3 * r2 * r2 * r2;
  return {x * radial + 2.0 * m.p1 * x * y + m.p2 * (r2 + 2.0 * x * x),
          y * radial + m.p1 * (r2 + 2.0 * y * y) + 2.0 * m.p2 * x * y};
}

std::optional<Vec2> distort_normalized(const DistortionModel& m, const Vec2& u) {
  if (m.is_identity()) return u;
  constexpr int kMaxIterations = 20;
  constexpr double kTolerance = 1e-8;
  Vec2 d = u;
  for (int it = 0; it <= kMaxIterations; ++it) {
    const Vec2 residual = correct_normalized(m, d) - u;
    if (!residual.allFinite()) return std::nullopt;
    if (residual.norm() <= kTolerance) return d;
    if (it == kMaxIterations) break;
    const double x = d.x();
    const double y = d.y();
    const double r2 = x * x + y * y;
    const double radial = 1.0 + m.k1 * r2 + m.k2 * r2 * r2 + m.k3 * r2 * r2 * r2;
    const double dr = m.k1 + 2.0 * m.k2 * r2 + 3.0 * m.k3 * r2 * r2;  // d radial / d r2
    const double jxx = radial + 2.0 * x * x * dr + 2.0 * m.p1 * y + 6.0 * m.p2 * x;
    const double jxy = 2.0 * x * y * dr + 2.0 * m.p1 * x + 2.0 * m.p2 * y;
    const double jyy = radial + 2.0 * y * y * dr + 6.0 * m.p1 * y + 2.0 * m.p2 * x;
    const double det = jxx * jyy - jxy * jxy;
    if (!(std::abs(det) > 1e-15)) return std::nullopt;
    d -= Vec2(jyy * residual.x() - jxy * residual.y(), -jxy * residual.x() + jxx * residual.y()) / det;
  }
  return std::nullopt;
}

Vec2 undistort_point(const DistortionModel& m, const Vec2& px) {
  if (m.is_identity()) return px;
  const Vec2 n((px.x() - m.cx) / m.fx, (px.y() - m.cy) / m.fy);
  const Vec2 u = correct_normalized(m, n);
  return {u.x() * m.fx + m.cx, u.y() * m.fy + m.cy};
}

std::optional<Vec2> distort_point(const DistortionModel& m, const Vec2& px) {
  if (m.is_identity()) return px;
  const Vec2 n((px.x() - m.cx) / m.fx, (px.y() - m.cy) / m.fy);
  const auto d = distort_normalized(m, n);
  if (!d) return std::nullopt;
  return Vec2(d->x() * m.fx + m.cx, d->y() * m.fy + m.cy);
}

Image undistort_image(const DistortionModel& model, const Image& img) {
  validate(model);
  if (model.is_identity()) return img;
  return kernels::omp::undistort_remap(model, img);
}

GrayImage undistort_image(const DistortionModel& model, const GrayImage& img) {
  const Image out = undistort_image(model, to_image(img));
  return to_gray(out);
}

Image distort_image(const DistortionModel& model, const Image& src) {
  validate(model);
  const int w = src.width();
  const int h = src.height();
  const int ch = src.channels();
  Image out(w, h, ch);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const Vec2 s = undistort_point(model, Vec2(x, y));
      if (!(s.x() >= 0.0 && s.y() >= 0.0 && s.x() <= w - 1 && s.y() <= h - 1)) continue;
      const int x0 = std::min(static_cast<int>(s.x()), w - 1);
      const int y0 = std::min(static_cast<int>(s.y()), h - 1);
      const int x1 = std::min(x0 + 1, w - 1);
      const int y1 = std::min(y0 + 1, h - 1);
      const double fx = s.x() - x0;
      const double fy = s.y() - y0;
      for (int c = 0; c < ch; ++c) {
        const double top = src.at(x0, y0, c) + fx * (src.at(x1, y0, c) - src.at(x0, y0, c));
        const double bot = src.at(x0, y1, c) + fx * (src.at(x1, y1, c) - src.at(x0, y1, c));
        out.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(std::lround(top + fy * (bot - top)), 0L, 255L));
      }
    }
  return out;
}

DistortionModel load_intrinsics(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open intrinsics '" + path.string() + "'");
  static const char* kKeys[] = {"fx", "fy", "cx", "cy", "k1", "k2", "k3", "p1", "p2"};
  std::map<std::string, double> named;
  std::vector<double> positional;
  std::string line;
  std::size_t line_no = 0;
  auto number = [&](const std::string& tok) {
    double v = 0.0;
    const char* first = tok.data() + (tok.starts_with('+') ? 1 : 0);
    auto [p, ec] = std::from_chars(first, tok.data() + tok.size(), v);
    if (ec != std::errc{} || p != tok.data() + tok.size()) throw ParseError("bad number '" + tok + "'", line_no);
    return v;
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::replace(line.begin(), line.end(), ':', ' ');
    std::replace(line.begin(), line.end(), '=', ' ');
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    std::vector<std::string> tok;
    for (std::string t; ss >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    const bool is_key = std::isalpha(static_cast<unsigned char>(tok[0][0])) != 0;
    if (is_key) {
      if (tok.size() != 2) throw ParseError("expected 'key value'", line_no);
      if (std::find(std::begin(kKeys), std::end(kKeys), tok[0]) == std::end(kKeys))
        throw ParseError("unknown intrinsics key '" + tok[0] + "'", line_no);
      named[tok[0]] = number(tok[1]);
    } else {
      for (const auto& t : tok) positional.push_back(number(t));
    }
  }
  if (!named.empty() && !positional.empty()) throw ParseError("mixes named and positional intrinsics", line_no);
  DistortionModel m;
  double* fields[] = {&m.fx, &m.fy, &m.cx, &m.cy, &m.k1, &m.k2, &m.k3, &m.p1, &m.p2};
  if (!positional.empty()) {
    if (positional.size() != 9) throw ParseError("expected 9 numbers (fx fy cx cy k1 k2 k3 p1 p2)", line_no);
    for (int i = 0; i < 9; ++i) *fields[i] = positional[i];
  } else {
    for (const char* req : {"fx", "fy", "cx", "cy"})
      if (!named.count(req)) throw ParseError(std::string("missing intrinsics key '") + req + "'", line_no);
    for (int i = 0; i < 9; ++i)
      if (auto it = named.find(kKeys[i]); it != named.end()) *fields[i] = it->second;
  }
  validate(m);
  return m;
}

}  // namespace splatprep
