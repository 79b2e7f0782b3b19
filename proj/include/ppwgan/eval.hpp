#pragma once

// Quantitative comparison of a learned sequence distribution with the ground
// truth: binned empirical intensity and its L1 deviation, and the QQ slope of
// time-changed inter-event intervals against Exp(1).

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "ppwgan/core.hpp"
#include "ppwgan/parallel.hpp"
#include "ppwgan/simulate.hpp"

namespace ppwgan {

inline constexpr double kDefaultBinWidth = 0.1;

struct IntensityCurve {
  double bin_width = kDefaultBinWidth;
  std::vector<double> values;

  /// Left edge of bin j.
  double bin_start(std::size_t j) const noexcept { return static_cast<double>(j) * bin_width; }
};

/// ceil(T / dt), with a small guard so T = 15, dt = 0.1 gives 150 bins.
std::size_t bin_count(double horizon, double bin_width);

/// value[j] = mean number of events per sequence in [j dt, (j+1) dt), divided by dt.
IntensityCurve empirical_intensity(const Dataset& data, double bin_width = kDefaultBinWidth,
                                   parallel::Exec exec = parallel::Exec::threaded);

/// sum_j |a_j - b_j| dt.
double intensity_deviation(const IntensityCurve& a, const IntensityCurve& b);

struct QqResult {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_deviation = 0.0;
  std::size_t sample_size = 0;  // uncensored values used in the regression
};

struct QqPoints {
  std::vector<double> theoretical;
  std::vector<double> empirical;
};

/// Least-squares fit of the sorted values on Exp(1) quantiles
/// -ln(1 - i / (N + 1)).
QqResult qq_fit(std::span<const double> values, QqPoints* points = nullptr);

/// Same fit when some values are right-censored (known only to exceed the
/// recorded value). Plotting positions come from the Kaplan-Meier survival
/// estimate; without censoring they reduce to i / (N + 1). Censored values
/// shape the positions but are not plotted.
QqResult qq_fit_censored(std::span<const double> values, std::span<const char> censored,
                         QqPoints* points = nullptr);

/// Time-changes every sequence of `generated` with the compensator of
/// `truth` and fits the pooled values. The interval after the last event of
/// each sequence is cut off by the horizon and enters as censored.
QqResult qq_slope(const Dataset& generated, const IntensityModel& truth,
                  QqPoints* points = nullptr,
                  parallel::Exec exec = parallel::Exec::threaded);

// ---------------------------------------------------------------------------
// Reports

/// One metric, datasets by estimators, several rounds per cell.
struct ReportTable {
  struct Row {
    std::string dataset;
    /// values[e] holds one entry per round for estimator e; empty = not applicable.
    std::vector<std::vector<double>> values;
  };
  std::string name;  // file stem
  std::vector<std::string> estimators;
  std::vector<Row> rows;
};

/// Sample standard deviation (n - 1); 0 for fewer than two values.
double sample_std(std::span<const double> v);
double mean_of(std::span<const double> v);
double median_of(std::vector<double> v);

/// Header dataset,<est>_mean,<est>_std,... then one line per row; "NA" for
/// empty cells. Numbers are printed with %.6g.
void write_table_csv(const ReportTable& table, std::ostream& out);

struct NamedCurve {
  std::string name;
  IntensityCurve curve;
};

/// Line chart of empirical intensity curves with a legend.
void write_intensity_svg(std::span<const NamedCurve> curves, const std::string& title,
                         std::ostream& out);

struct NamedQq {
  std::string name;
  QqPoints points;
};

/// QQ scatter per estimator plus the 45-degree reference line.
void write_qq_svg(std::span<const NamedQq> series, const std::string& title,
                  std::ostream& out);

struct Report {
  std::vector<ReportTable> tables;
  /// Chart file stem -> curves / QQ series.
  std::vector<std::pair<std::string, std::vector<NamedCurve>>> intensity_charts;
  std::vector<std::pair<std::string, std::vector<NamedQq>>> qq_charts;
};

/// Writes <name>.csv per table and <stem>.svg per chart into `dir`, creating
/// it if needed. IoError when anything cannot be written.
void emit_report(const Report& report, const std::filesystem::path& dir);

}  // namespace ppwgan
