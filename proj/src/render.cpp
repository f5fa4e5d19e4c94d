#include "ace/render.hpp"

#include "ace/errors.hpp"
#include "ace/image.hpp"

#include <cstdio>
#include <sstream>

namespace ace {

namespace {

std::string fmt(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

void blit(RgbImage& dst, const RgbImage& src, int x0, int y0) {
  for (int y = 0; y < src.height; ++y)
    for (int x = 0; x < src.width; ++x)
      for (int c = 0; c < 3; ++c) dst(x0 + x, y0 + y, c) = src(x, y, c);
}

}  // namespace

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += ch;
    }
  }
  return out;
}

RgbImage make_montage(std::span<const RgbImage> patches, std::span<const RgbImage> crops, int tile, int gap) {
  require(patches.size() == crops.size(), "make_montage: patches and crops differ in length");
  require(!patches.empty(), "make_montage: no examples");
  require(tile > 0 && gap >= 0, "make_montage: bad geometry");
  const int n = int(patches.size());
  RgbImage out(gap + n * (tile + gap), gap + 2 * (tile + gap), 1.0f);
  for (int i = 0; i < n; ++i) {
    const int x0 = gap + i * (tile + gap);
    blit(out, resize_bilinear(patches[std::size_t(i)], tile, tile), x0, gap);
    blit(out, resize_bilinear(crops[std::size_t(i)], tile, tile), x0, 2 * gap + tile);
  }
  return out;
}

std::string curve_svg(const std::string& title, const std::string& x_label,
                      const std::map<std::string, std::vector<CurvePoint>>& series) {
  constexpr int W = 480, H = 320, L = 60, R = 120, T = 40, B = 50;
  const int pw = W - L - R, ph = H - T - B;
  int k_max = 1;
  for (const auto& [_, pts] : series)
    for (const auto& p : pts) k_max = std::max(k_max, p.k);
  auto sx = [&](double k) { return L + pw * k / k_max; };
  auto sy = [&](double a) { return T + ph * (1.0 - a); };
  static const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd"};

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
    << ' ' << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
  s << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << xml_escape(title)
    << "</text>\n";
  s << "<line x1=\"" << L << "\" y1=\"" << T + ph << "\" x2=\"" << L + pw << "\" y2=\"" << T + ph
    << "\" stroke=\"black\"/>\n";
  s << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << T + ph << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double a = i / 4.0;
    s << "<text x=\"" << L - 6 << "\" y=\"" << fmt(sy(a) + 4, 1) << "\" text-anchor=\"end\">" << fmt(a, 2)
      << "</text>\n";
    s << "<line x1=\"" << L << "\" y1=\"" << fmt(sy(a), 1) << "\" x2=\"" << L + pw << "\" y2=\"" << fmt(sy(a), 1)
      << "\" stroke=\"#ddd\"/>\n";
  }
  for (int k = 0; k <= k_max; ++k)
    s << "<text x=\"" << fmt(sx(k), 1) << "\" y=\"" << T + ph + 16 << "\" text-anchor=\"middle\">" << k
      << "</text>\n";
  s << "<text x=\"" << L + pw / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">" << xml_escape(x_label)
    << "</text>\n";
  s << "<text transform=\"translate(16," << T + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">accuracy</text>\n";
  int idx = 0;
  for (const auto& [name, pts] : series) {
    const char* color = palette[idx % 5];
    s << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i)
      s << (i ? " " : "") << fmt(sx(pts[i].k), 1) << ',' << fmt(sy(pts[i].accuracy), 1);
    s << "\"/>\n";
    const int ly = T + 10 + idx * 18;
    s << "<line x1=\"" << L + pw + 10 << "\" y1=\"" << ly << "\" x2=\"" << L + pw + 30 << "\" y2=\"" << ly
      << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    s << "<text x=\"" << L + pw + 34 << "\" y=\"" << ly + 4 << "\">" << xml_escape(name) << "</text>\n";
    ++idx;
  }
  s << "</svg>\n";
  return s.str();
}

std::string index_svg(const std::string& title, std::span<const IndexEntry> entries,
                      const std::vector<std::string>& links) {
  constexpr int W = 1200, row_h = 120, top = 60, bar_w = 160;
  const int H = top + int(entries.size()) * row_h + 20 * int(links.size()) + 30;
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" xmlns:xlink=\"http://www.w3.org/1999/xlink\" width=\"" << W
    << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
  s << "<text x=\"10\" y=\"28\" font-size=\"18\">" << xml_escape(title) << "</text>\n";
  int y = top;
  for (const auto& e : entries) {
    s << "<g transform=\"translate(10," << y << ")\">\n";
    s << "<text x=\"0\" y=\"16\" font-size=\"14\">concept " << e.concept_id << "</text>\n";
    s << "<text x=\"0\" y=\"34\">size " << e.size << ", " << xml_escape(e.rule) << "</text>\n";
    if (e.score) {
      s << "<rect x=\"0\" y=\"44\" width=\"" << bar_w << "\" height=\"12\" fill=\"#eee\"/>\n";
      s << "<rect x=\"0\" y=\"44\" width=\"" << fmt(bar_w * *e.score, 1) << "\" height=\"12\" fill=\""
        << (e.passed ? "#2ca02c" : "#999") << "\"/>\n";
      s << "<text x=\"0\" y=\"74\">TCAV " << fmt(*e.score) << ", p = " << fmt(e.p_value.value_or(1.0), 4)
        << (e.passed ? "" : " (not significant)") << "</text>\n";
    }
    if (!e.montage_path.empty())
      s << "<image x=\"200\" y=\"0\" height=\"" << row_h - 10 << "\" width=\"" << W - 220
        << "\" preserveAspectRatio=\"xMinYMin meet\" href=\"" << xml_escape(e.montage_path) << "\" xlink:href=\""
        << xml_escape(e.montage_path) << "\"/>\n";
    s << "</g>\n";
    y += row_h;
  }
  for (const auto& link : links) {
    s << "<a href=\"" << xml_escape(link) << "\" xlink:href=\"" << xml_escape(link) << "\"><text x=\"10\" y=\""
      << y + 14 << "\" fill=\"#1f77b4\">" << xml_escape(link) << "</text></a>\n";
    y += 20;
  }
  s << "</svg>\n";
  return s.str();
}

}  // namespace ace
