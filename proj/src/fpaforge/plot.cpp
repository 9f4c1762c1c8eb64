#include "fpaforge/plot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include <fmt/format.h>

#include "fpaforge/error.hpp"

namespace fpaforge::plot {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
constexpr int kLeft = 80;
constexpr int kRight = 170;
constexpr int kTop = 50;
constexpr int kBottom = 60;

std::string fmt_tick(double v) {
  if (v == 0.0) return "0";
  return fmt::format("{:g}", v);
}

struct Frame {
  double x0, x1, y0, y1;
  int w, h;
  double px(double x) const { return kLeft + (x - x0) / (x1 - x0) * (w - kLeft - kRight); }
  double py(double y) const { return h - kBottom - (y - y0) / (y1 - y0) * (h - kTop - kBottom); }
};

void header(std::string& out, const ChartSpec& spec) {
  if (spec.width <= kLeft + kRight + 10 || spec.height <= kTop + kBottom + 10)
    fail(ErrorCode::InvalidArgument, "chart size too small");
  out += fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\" "
      "font-family=\"sans-serif\" font-size=\"12\">\n",
      spec.width, spec.height);
  out += fmt::format("<rect width=\"{}\" height=\"{}\" fill=\"white\"/>\n", spec.width, spec.height);
  out += fmt::format("<text x=\"{}\" y=\"28\" text-anchor=\"middle\" font-size=\"16\">{}</text>\n",
                     (spec.width - kRight + kLeft) / 2, xml_escape(spec.title));
  out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", (spec.width - kRight + kLeft) / 2,
                     spec.height - 15, xml_escape(spec.x_label));
  out += fmt::format("<text x=\"18\" y=\"{0}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {0})\">{1}</text>\n",
                     spec.height / 2, xml_escape(spec.y_label));
}

void y_axis(std::string& out, const Frame& f, const std::vector<double>& ticks) {
  for (double t : ticks) {
    const double y = f.py(t);
    out += fmt::format("<line x1=\"{}\" y1=\"{:.2f}\" x2=\"{}\" y2=\"{:.2f}\" stroke=\"#ddd\"/>\n", kLeft, y,
                       f.w - kRight, y);
    out += fmt::format("<text x=\"{}\" y=\"{:.2f}\" text-anchor=\"end\">{}</text>\n", kLeft - 6, y + 4, fmt_tick(t));
  }
  out += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>\n", kLeft, kTop,
                     f.h - kBottom);
  out += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"black\"/>\n", kLeft, f.h - kBottom,
                     f.w - kRight);
}

std::pair<double, double> padded(double lo, double hi) {
  if (!(hi > lo)) {
    const double d = lo == 0.0 ? 1.0 : std::abs(lo) * 0.1;
    return {lo - d, hi + d};
  }
  return {lo, hi};
}

}  // namespace

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

std::vector<double> nice_ticks(double lo, double hi, int target) {
  if (!std::isfinite(lo) || !std::isfinite(hi) || target < 2) fail(ErrorCode::InvalidArgument, "bad tick range");
  if (hi < lo) std::swap(lo, hi);
  std::tie(lo, hi) = padded(lo, hi);
  const double raw = (hi - lo) / (target - 1);
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 2.5, 5.0, 10.0}) {
    step = m * mag;
    if (step >= raw) break;
  }
  std::vector<double> ticks;
  const double first = std::floor(lo / step) * step;
  for (double t = first; t <= hi + step * 0.5; t += step) {
    ticks.push_back(std::abs(t) < step * 1e-9 ? 0.0 : t);
    if (t >= hi) break;
  }
  return ticks;
}

std::string line_chart_svg(const ChartSpec& spec, const std::vector<Series>& series) {
  double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo, ylo = xlo, yhi = -xlo;
  for (const auto& s : series) {
    if (s.x.size() != s.y.size()) fail(ErrorCode::DimMismatch, fmt::format("series '{}' has unequal x/y", s.label));
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      xlo = std::min(xlo, s.x[i]);
      xhi = std::max(xhi, s.x[i]);
      ylo = std::min(ylo, s.y[i]);
      yhi = std::max(yhi, s.y[i]);
    }
  }
  if (!std::isfinite(xlo)) fail(ErrorCode::InvalidArgument, "no finite points to plot");
  std::tie(xlo, xhi) = padded(xlo, xhi);
  const auto xt = nice_ticks(xlo, xhi);
  const auto yt = nice_ticks(std::min(0.0, ylo), yhi);
  Frame f{xt.front(), xt.back(), yt.front(), yt.back(), spec.width, spec.height};

  std::string out;
  header(out, spec);
  y_axis(out, f, yt);
  for (double t : xt)
    out += fmt::format("<text x=\"{:.2f}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", f.px(t), f.h - kBottom + 16,
                       fmt_tick(t));
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = kPalette[k % std::size(kPalette)];
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < s.x.size(); ++i)
      if (std::isfinite(s.x[i]) && std::isfinite(s.y[i])) pts.emplace_back(s.x[i], s.y[i]);
    std::sort(pts.begin(), pts.end());
    std::string path;
    for (const auto& [x, y] : pts) path += fmt::format("{}{:.2f},{:.2f}", path.empty() ? "" : " ", f.px(x), f.py(y));
    out += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"2\" points=\"{}\"/>\n", color, path);
    for (const auto& [x, y] : pts)
      out += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"3\" fill=\"{}\"/>\n", f.px(x), f.py(y), color);
    const int ly = kTop + 10 + static_cast<int>(k) * 18;
    out += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"{3}\" stroke-width=\"2\"/>\n",
                       f.w - kRight + 12, ly, f.w - kRight + 32, color);
    out += fmt::format("<text x=\"{}\" y=\"{}\">{}</text>\n", f.w - kRight + 38, ly + 4, xml_escape(s.label));
  }
  out += "</svg>\n";
  return out;
}

std::string bar_chart_svg(const ChartSpec& spec, const std::vector<Bar>& bars) {
  if (bars.empty()) fail(ErrorCode::InvalidArgument, "no bars to plot");
  double ylo = 0.0, yhi = 0.0;
  for (const auto& b : bars) {
    if (!std::isfinite(b.value)) fail(ErrorCode::InvalidArgument, fmt::format("bar '{}' is not finite", b.label));
    ylo = std::min(ylo, b.value);
    yhi = std::max(yhi, b.value);
  }
  const auto yt = nice_ticks(ylo, yhi);
  Frame f{0.0, static_cast<double>(bars.size()), yt.front(), yt.back(), spec.width, spec.height};
  std::string out;
  header(out, spec);
  y_axis(out, f, yt);
  for (std::size_t i = 0; i < bars.size(); ++i) {
    const double x0 = f.px(static_cast<double>(i) + 0.15);
    const double x1 = f.px(static_cast<double>(i) + 0.85);
    const double ya = f.py(std::max(0.0, bars[i].value));
    const double yb = f.py(std::min(0.0, bars[i].value));
    out += fmt::format("<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" fill=\"{}\"/>\n", x0, ya,
                       x1 - x0, yb - ya, kPalette[i % std::size(kPalette)]);
    out += fmt::format("<text x=\"{:.2f}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", (x0 + x1) / 2,
                       f.h - kBottom + 16, xml_escape(bars[i].label));
    out += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">{}</text>\n", (x0 + x1) / 2, ya - 4,
                       fmt::format("{:.4g}", bars[i].value));
  }
  out += "</svg>\n";
  return out;
}

std::vector<Series> series_from_table(const Table& table, const std::string& x, const std::string& y,
                                      const std::string& group) {
  const std::size_t xi = table.column(x);
  const std::size_t yi = table.column(y);
  const std::optional<std::size_t> gi = group.empty() ? std::nullopt : std::optional(table.column(group));
  std::vector<Series> out;
  for (const auto& r : table.rows) {
    const std::string key = gi ? group + "=" + r[*gi] : y;
    auto it = std::find_if(out.begin(), out.end(), [&](const Series& s) { return s.label == key; });
    if (it == out.end()) {
      out.push_back({key, {}, {}});
      it = std::prev(out.end());
    }
    const auto xv = parse_number(r[xi]);
    const auto yv = parse_number(r[yi]);
    if (!xv || !yv) fail(ErrorCode::InvalidArgument, fmt::format("non-numeric value in '{}' or '{}'", x, y));
    it->x.push_back(*xv);
    it->y.push_back(*yv);
  }
  return out;
}

std::vector<Bar> bars_from_table(const Table& table, const std::string& label, const std::string& value) {
  const std::size_t li = table.column(label);
  const std::size_t vi = table.column(value);
  std::vector<Bar> out;
  for (const auto& r : table.rows) {
    const auto v = parse_number(r[vi]);
    if (!v) fail(ErrorCode::InvalidArgument, fmt::format("non-numeric value '{}' in '{}'", r[vi], value));
    out.push_back({r[li], *v});
  }
  return out;
}

void write_svg(const std::filesystem::path& path, const std::string& svg) { write_text_file(path, svg); }

}  // namespace fpaforge::plot
