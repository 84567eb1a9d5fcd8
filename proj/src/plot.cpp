#include "fladle/plot.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <vector>

namespace fladle {

namespace {

constexpr double kPanelW = 260, kPanelH = 220, kMargin = 40, kGap = 20;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

void panel(std::ostringstream& os, double x0, const std::vector<double>& y, const char* title, std::size_t d_hat) {
  const std::size_t L = y.size();
  const double top = 30, left = x0 + kMargin, w = kPanelW - kMargin, h = kPanelH - kMargin;
  const double ymax = std::max(1e-12, *std::max_element(y.begin(), y.end())) * 1.05;
  auto px = [&](std::size_t ell) {
    return L == 1 ? left + w / 2 : left + w * static_cast<double>(ell - 1) / static_cast<double>(L - 1);
  };
  auto py = [&](double v) { return top + h - h * v / ymax; };

  os << "<text x=\"" << num(left + w / 2) << "\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">" << title
     << "</text>\n";
  os << "<rect x=\"" << num(left) << "\" y=\"" << num(top) << "\" width=\"" << num(w) << "\" height=\"" << num(h)
     << "\" fill=\"none\" stroke=\"#444\"/>\n";
  os << "<text x=\"" << num(left - 4) << "\" y=\"" << num(top + 4) << "\" text-anchor=\"end\" font-size=\"10\">"
     << tick(ymax) << "</text>\n";
  os << "<text x=\"" << num(left - 4) << "\" y=\"" << num(top + h) << "\" text-anchor=\"end\" font-size=\"10\">0</text>\n";
  for (std::size_t ell = 1; ell <= L; ++ell) {
    os << "<text x=\"" << num(px(ell)) << "\" y=\"" << num(top + h + 14)
       << "\" text-anchor=\"middle\" font-size=\"10\">" << ell << "</text>\n";
  }
  os << "<line x1=\"" << num(px(d_hat)) << "\" y1=\"" << num(top) << "\" x2=\"" << num(px(d_hat)) << "\" y2=\""
     << num(top + h) << "\" stroke=\"#888\" stroke-dasharray=\"3,3\"/>\n";
  os << "<polyline fill=\"none\" stroke=\"#1f4e9c\" stroke-width=\"1.5\" points=\"";
  for (std::size_t ell = 1; ell <= L; ++ell) os << num(px(ell)) << ',' << num(py(y[ell - 1])) << ' ';
  os << "\"/>\n";
  for (std::size_t ell = 1; ell <= L; ++ell) {
    os << "<circle cx=\"" << num(px(ell)) << "\" cy=\"" << num(py(y[ell - 1])) << "\" r=\"3\" fill=\"#1f4e9c\"/>\n";
  }
  os << "<text x=\"" << num(left + w / 2) << "\" y=\"" << num(top + h + 30)
     << "\" text-anchor=\"middle\" font-size=\"11\">l</text>\n";
}

}  // namespace

std::string ladle_svg(const LadleResult& result) {
  std::ostringstream os;
  const double width = 3 * kPanelW + 2 * kGap + 10;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\"" << num(kPanelH + 30)
     << "\" font-family=\"sans-serif\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  panel(os, 0, result.g, "g(l)", result.d_hat);
  panel(os, kPanelW + kGap, result.f, "f(l)", result.d_hat);
  panel(os, 2 * (kPanelW + kGap), result.h, "h(l)", result.d_hat);
  os << "</svg>\n";
  return os.str();
}

}  // namespace fladle
