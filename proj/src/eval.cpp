#include "ppwgan/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "ppwgan/mle.hpp"

namespace ppwgan {

namespace {

std::string fmt(double v) {
  if (!std::isfinite(v)) return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// Fixed-point coordinates keep SVGs short and stable.
std::string coord(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

QqResult regress(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n < 2) throw DomainError("QQ fit needs at least 2 samples, got " + std::to_string(n));
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw DomainError("QQ fit: theoretical quantiles are degenerate");
  QqResult r;
  r.slope = sxy / sxx;
  r.intercept = my - r.slope * mx;
  r.slope_deviation = std::abs(r.slope - 1.0);
  r.sample_size = n;
  return r;
}

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string color(std::size_t i) { return kPalette[i % std::size(kPalette)]; }

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Frame {
  double x0 = 60, y0 = 30, w = 520, h = 320;
  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  double px(double x) const { return x0 + (x - xmin) / (xmax - xmin) * w; }
  double py(double y) const { return y0 + h - (y - ymin) / (ymax - ymin) * h; }
};

void svg_open(std::ostream& out, const Frame& f, const std::string& title) {
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"760\" height=\"400\">\n"
      << "<rect width=\"760\" height=\"400\" fill=\"white\"/>\n"
      << "<text x=\"" << coord(f.x0) << "\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">"
      << escape(title) << "</text>\n"
      << "<rect x=\"" << coord(f.x0) << "\" y=\"" << coord(f.y0) << "\" width=\"" << coord(f.w)
      << "\" height=\"" << coord(f.h) << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = f.xmin + (f.xmax - f.xmin) * i / 4.0;
    const double yv = f.ymin + (f.ymax - f.ymin) * i / 4.0;
    out << "<text x=\"" << coord(f.px(xv)) << "\" y=\"" << coord(f.y0 + f.h + 16)
        << "\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"middle\">" << fmt(xv)
        << "</text>\n";
    out << "<text x=\"" << coord(f.x0 - 6) << "\" y=\"" << coord(f.py(yv) + 3)
        << "\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"end\">" << fmt(yv)
        << "</text>\n";
  }
}

void svg_legend(std::ostream& out, std::span<const std::string> names) {
  out << "<g class=\"legend\">\n";
  for (std::size_t i = 0; i < names.size(); ++i) {
    const double y = 40 + 18 * static_cast<double>(i);
    out << "<rect x=\"596\" y=\"" << coord(y - 9) << "\" width=\"12\" height=\"12\" fill=\""
        << color(i) << "\"/>\n"
        << "<text x=\"614\" y=\"" << coord(y + 1)
        << "\" font-family=\"sans-serif\" font-size=\"12\">" << escape(names[i]) << "</text>\n";
  }
  out << "</g>\n";
}

template <typename Writer>
void write_file(const std::filesystem::path& path, Writer&& writer) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  writer(out);
  out.flush();
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace

std::size_t bin_count(double horizon, double bin_width) {
  if (!(bin_width > 0.0) || !std::isfinite(bin_width)) {
    throw DomainError("bin width must be positive");
  }
  return static_cast<std::size_t>(std::ceil(horizon / bin_width - 1e-9));
}

IntensityCurve empirical_intensity(const Dataset& data, double bin_width, parallel::Exec exec) {
  const std::size_t bins = bin_count(data.window.horizon(), bin_width);
  if (data.sequences.empty()) throw DomainError("empirical intensity of an empty dataset");
  const std::size_t n = data.sequences.size();
  // Integer counts per sequence, merged in index order.
  std::vector<std::vector<std::size_t>> counts(n);
  parallel::for_each_index(
      n,
      [&](std::size_t i) {
        auto& c = counts[i];
        c.assign(bins, 0);
        for (double t : data.sequences[i].times()) {
          auto j = static_cast<std::size_t>(t / bin_width);
          c[std::min(j, bins - 1)] += 1;
        }
      },
      exec);
  std::vector<std::size_t> total(bins, 0);
  for (const auto& c : counts) {
    for (std::size_t j = 0; j < bins; ++j) total[j] += c[j];
  }
  IntensityCurve curve{bin_width, std::vector<double>(bins)};
  for (std::size_t j = 0; j < bins; ++j) {
    curve.values[j] = static_cast<double>(total[j]) / static_cast<double>(n) / bin_width;
  }
  return curve;
}

double intensity_deviation(const IntensityCurve& a, const IntensityCurve& b) {
  if (a.bin_width != b.bin_width || a.values.size() != b.values.size()) {
    throw DomainError("intensity curves differ in bin width or length");
  }
  double acc = 0.0;
  for (std::size_t j = 0; j < a.values.size(); ++j) acc += std::abs(a.values[j] - b.values[j]);
  return acc * a.bin_width;
}

QqResult qq_fit(std::span<const double> values, QqPoints* points) {
  std::vector<double> y(values.begin(), values.end());
  std::sort(y.begin(), y.end());
  const double n1 = static_cast<double>(y.size()) + 1.0;
  std::vector<double> x(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    x[i] = -std::log1p(-static_cast<double>(i + 1) / n1);
  }
  QqResult r = regress(x, y);
  if (points) *points = QqPoints{std::move(x), std::move(y)};
  return r;
}

QqResult qq_fit_censored(std::span<const double> values, std::span<const char> censored,
                         QqPoints* points) {
  if (values.size() != censored.size()) {
    throw DomainError("qq_fit_censored: values and censoring flags differ in length");
  }
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  // Ties: events before censorings, the usual Kaplan-Meier convention.
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (values[a] != values[b]) return values[a] < values[b];
    return !censored[a] && censored[b];
  });
  std::vector<double> x, y;
  double surv = 1.0;
  for (std::size_t pos = 0; pos < n; ++pos) {
    const std::size_t i = order[pos];
    if (censored[i]) continue;
    const double at_risk = static_cast<double>(n - pos);
    surv *= at_risk / (at_risk + 1.0);
    x.push_back(-std::log(surv));
    y.push_back(values[i]);
  }
  QqResult r = regress(x, y);
  if (points) *points = QqPoints{std::move(x), std::move(y)};
  return r;
}

QqResult qq_slope(const Dataset& generated, const IntensityModel& truth, QqPoints* points,
                  parallel::Exec exec) {
  const std::size_t n = generated.sequences.size();
  std::vector<std::vector<double>> pieces(n);
  parallel::for_each_index(
      n,
      [&](std::size_t i) {
        pieces[i] = compensator(truth, generated.sequences[i], generated.window);
      },
      exec);
  std::vector<double> values;
  std::vector<char> censored;
  for (const auto& p : pieces) {
    for (std::size_t j = 0; j < p.size(); ++j) {
      values.push_back(p[j]);
      censored.push_back(j + 1 == p.size() ? 1 : 0);
    }
  }
  return qq_fit_censored(values, censored, points);
}

// ---------------------------------------------------------------------------

double mean_of(std::span<const double> v) {
  if (v.empty()) return 0.0;
  double acc = 0.0;
  for (double x : v) acc += x;
  return acc / static_cast<double>(v.size());
}

double sample_std(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

double median_of(std::vector<double> v) {
  if (v.empty()) throw DomainError("median of an empty set");
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

void write_table_csv(const ReportTable& table, std::ostream& out) {
  out << "dataset";
  for (const auto& e : table.estimators) out << ',' << e << "_mean," << e << "_std";
  out << '\n';
  for (const auto& row : table.rows) {
    out << row.dataset;
    for (std::size_t e = 0; e < table.estimators.size(); ++e) {
      const bool have = e < row.values.size() && !row.values[e].empty();
      if (have) {
        out << ',' << fmt(mean_of(row.values[e])) << ',' << fmt(sample_std(row.values[e]));
      } else {
        out << ",NA,NA";
      }
    }
    out << '\n';
  }
}

void write_intensity_svg(std::span<const NamedCurve> curves, const std::string& title,
                         std::ostream& out) {
  Frame f;
  f.xmax = 1.0;
  f.ymax = 1e-9;
  for (const auto& c : curves) {
    f.xmax = std::max(f.xmax, c.curve.bin_width * static_cast<double>(c.curve.values.size()));
    for (double v : c.curve.values) f.ymax = std::max(f.ymax, v);
  }
  f.ymax *= 1.05;
  svg_open(out, f, title);
  std::vector<std::string> names;
  for (std::size_t i = 0; i < curves.size(); ++i) {
    const auto& c = curves[i].curve;
    names.push_back(curves[i].name);
    out << "<polyline fill=\"none\" stroke=\"" << color(i) << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t j = 0; j < c.values.size(); ++j) {
      const double mid = (static_cast<double>(j) + 0.5) * c.bin_width;
      if (j) out << ' ';
      out << coord(f.px(mid)) << ',' << coord(f.py(c.values[j]));
    }
    out << "\"/>\n";
  }
  svg_legend(out, names);
  out << "</svg>\n";
}

void write_qq_svg(std::span<const NamedQq> series, const std::string& title, std::ostream& out) {
  // Cap the plotted points per series; the regression uses all of them.
  constexpr std::size_t kMaxPoints = 400;
  Frame f;
  double hi = 1.0;
  for (const auto& s : series) {
    for (double v : s.points.theoretical) hi = std::max(hi, v);
    for (double v : s.points.empirical) hi = std::max(hi, v);
  }
  f.xmax = f.ymax = hi * 1.05;
  svg_open(out, f, title);
  out << "<line x1=\"" << coord(f.px(0)) << "\" y1=\"" << coord(f.py(0)) << "\" x2=\""
      << coord(f.px(f.xmax)) << "\" y2=\"" << coord(f.py(f.ymax))
      << "\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n";
  std::vector<std::string> names;
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& p = series[i].points;
    names.push_back(series[i].name);
    const std::size_t n = p.theoretical.size();
    const std::size_t stride = std::max<std::size_t>(1, n / kMaxPoints);
    out << "<g fill=\"" << color(i) << "\">\n";
    for (std::size_t j = 0; j < n; j += stride) {
      out << "<circle cx=\"" << coord(f.px(p.theoretical[j])) << "\" cy=\""
          << coord(f.py(p.empirical[j])) << "\" r=\"2\"/>\n";
    }
    out << "</g>\n";
  }
  svg_legend(out, names);
  out << "</svg>\n";
}

void emit_report(const Report& report, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create report directory " + dir.string() + ": " + ec.message());
  for (const auto& t : report.tables) {
    write_file(dir / (t.name + ".csv"), [&](std::ostream& out) { write_table_csv(t, out); });
  }
  for (const auto& [stem, curves] : report.intensity_charts) {
    write_file(dir / (stem + ".svg"),
               [&](std::ostream& out) { write_intensity_svg(curves, stem, out); });
  }
  for (const auto& [stem, series] : report.qq_charts) {
    write_file(dir / (stem + ".svg"), [&](std::ostream& out) { write_qq_svg(series, stem, out); });
  }
}

}  // namespace ppwgan
