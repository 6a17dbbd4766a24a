#include "polent/analysis.hpp"

#include <fmt/format.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <stdexcept>

#include "polent/rng.hpp"

namespace polent {

void FringeScan::validate() const {
  if (points.size() < 8) throw std::invalid_argument(fmt::format("fringe scan needs >= 8 points, got {}", points.size()));
  if (!(harmonic > 0.0)) throw std::invalid_argument("fringe harmonic must be > 0");
  double lo = points.front().angle_rad, hi = lo;
  for (const auto& p : points) {
    if (!(p.counts >= 0.0) || !std::isfinite(p.counts)) throw std::invalid_argument("fringe counts must be >= 0");
    if (!(p.integration_s > 0.0)) throw std::invalid_argument("fringe integration time must be > 0");
    lo = std::min(lo, p.angle_rad);
    hi = std::max(hi, p.angle_rad);
  }
  const double half_period = std::numbers::pi / harmonic;
  if (hi - lo < half_period * (1.0 - 1e-9))
    throw std::invalid_argument(fmt::format("fringe scan spans {} rad, needs at least half a period ({} rad)", hi - lo,
                                            half_period));
}

FringeFit fit_fringe(const FringeScan& scan, std::span<const double> weights_from) {
  scan.validate();
  const std::size_t n = scan.points.size();
  if (!weights_from.empty() && weights_from.size() != n)
    throw std::invalid_argument("weight source must match the number of fringe points");

  Eigen::Matrix3d ata = Eigen::Matrix3d::Zero();
  Eigen::Vector3d aty = Eigen::Vector3d::Zero();
  std::vector<double> y(n), w(n);
  std::vector<Eigen::Vector3d> rows(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = scan.points[i];
    const double kx = scan.harmonic * p.angle_rad;
    rows[i] = Eigen::Vector3d(1.0, std::cos(kx), std::sin(kx));
    const double var_counts = std::max(weights_from.empty() ? p.counts : weights_from[i], 1.0);
    y[i] = p.counts / p.integration_s;
    w[i] = p.integration_s * p.integration_s / var_counts;
    ata += w[i] * rows[i] * rows[i].transpose();
    aty += w[i] * y[i] * rows[i];
  }
  const Eigen::FullPivLU<Eigen::Matrix3d> lu(ata);
  if (!lu.isInvertible() || lu.rcond() < 1e-13)
    throw std::runtime_error(fmt::format("fringe fit did not converge: normal matrix is singular (rcond {:.3g}, {} points)",
                                         lu.rcond(), n));
  const Eigen::Matrix3d cov = lu.inverse();
  const Eigen::Vector3d beta = cov * aty;

  FringeFit f;
  f.offset = beta(0);
  f.amplitude = std::hypot(beta(1), beta(2));
  f.phase = std::atan2(-beta(2), beta(1));
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - rows[i].dot(beta);
    f.chi2 += w[i] * r * r;
  }
  f.dof = n - 3;
  if (!(f.offset > 0.0)) {
    throw std::runtime_error(fmt::format("fringe fit has non-positive offset {:.4g} (chi2 {:.4g}, {} points)", f.offset,
                                         f.chi2, n));
  }
  f.visibility = f.amplitude / f.offset;
  Eigen::Vector3d grad;
  if (f.amplitude > 0.0) {
    grad << -f.amplitude / (f.offset * f.offset), beta(1) / (f.amplitude * f.offset),
        beta(2) / (f.amplitude * f.offset);
    f.visibility_error = std::sqrt(std::max(0.0, grad.dot(cov * grad)));
  } else {
    f.visibility_error = std::sqrt(std::max(0.0, cov(1, 1) + cov(2, 2))) / f.offset;
  }
  f.unphysical = f.visibility > 1.0 + 3.0 * f.visibility_error;
  return f;
}

CorrelationEstimate correlation_from_counts(const OutcomeCounts& n) {
  const double total = n[0] + n[1] + n[2] + n[3];
  if (!(total > 0.0)) throw std::invalid_argument("correlation needs a positive total count");
  const double e = (n[0] + n[3] - n[1] - n[2]) / total;
  return {e, std::sqrt(std::max(0.0, 1.0 - e * e) / total)};
}

ChshResult chsh(const std::array<OutcomeCounts, 4>& counts) {
  ChshResult r;
  double var = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    const double total = counts[i][0] + counts[i][1] + counts[i][2] + counts[i][3];
    if (!(total > 0.0)) throw std::invalid_argument(fmt::format("CHSH setting pair {} has zero total counts", i));
    r.e[i] = correlation_from_counts(counts[i]);
    var += r.e[i].error * r.e[i].error;
  }
  r.s_signed = r.e[0].value - r.e[1].value + r.e[2].value + r.e[3].value;
  r.s = std::abs(r.s_signed);
  r.error = std::sqrt(var);
  return r;
}

double violation_nsigma(double s, double sigma_s) {
  if (!(sigma_s > 0.0)) throw std::invalid_argument("sigma_S must be > 0");
  return (s - 2.0) / sigma_s;
}

NetCorrection net_correction(const FringeScan& raw, std::span<const double> accidentals) {
  if (accidentals.size() != raw.points.size())
    throw std::invalid_argument("one accidental estimate per fringe point is required");
  NetCorrection out;
  out.net = raw;
  std::vector<double> weights(raw.points.size());
  std::size_t over = 0;
  for (std::size_t i = 0; i < raw.points.size(); ++i) {
    if (!(accidentals[i] >= 0.0)) throw std::invalid_argument("accidental estimates must be >= 0");
    const double c = raw.points[i].counts;
    weights[i] = c;
    if (accidentals[i] > c) {
      ++over;
      ++out.clamped_points;
    }
    out.net.points[i].counts = std::max(0.0, c - accidentals[i]);
  }
  out.overcorrection = static_cast<double>(over) > 0.2 * static_cast<double>(raw.points.size());
  out.fit = fit_fringe(out.net, weights);
  return out;
}

namespace {

struct Run {
  std::size_t begin;
  std::size_t end;  // exclusive
  double peak;
};

std::vector<double> box_smooth(const std::vector<double>& y, std::size_t half) {
  std::vector<double> out(y.size());
  std::vector<double> prefix(y.size() + 1, 0.0);
  for (std::size_t i = 0; i < y.size(); ++i) prefix[i + 1] = prefix[i] + y[i];
  for (std::size_t i = 0; i < y.size(); ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(y.size(), i + half + 1);
    out[i] = (prefix[hi] - prefix[lo]) / static_cast<double>(hi - lo);
  }
  return out;
}

struct LogFit {
  Eigen::VectorXd coef;
  double aic = std::numeric_limits<double>::infinity();
};

// Weighted least squares of log(y) on the given columns, weights equal to the counts.
template <typename Row>
LogFit fit_log(const std::vector<double>& x, const std::vector<double>& y, std::size_t lo, std::size_t hi, int cols,
               Row row) {
  LogFit f;
  Eigen::MatrixXd ata = Eigen::MatrixXd::Zero(cols, cols);
  Eigen::VectorXd aty = Eigen::VectorXd::Zero(cols);
  Eigen::VectorXd r(cols);
  std::size_t used = 0;
  for (std::size_t i = lo; i < hi; ++i) {
    if (!(y[i] > 0.0)) continue;
    row(x[i], r);
    ata += y[i] * r * r.transpose();
    aty += y[i] * std::log(y[i]) * r;
    ++used;
  }
  if (used < static_cast<std::size_t>(cols) + 2) return f;
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(ata);
  if (!lu.isInvertible()) return f;
  f.coef = lu.solve(aty);
  double chi2 = 0.0;
  for (std::size_t i = lo; i < hi; ++i) {
    if (!(y[i] > 0.0)) continue;
    row(x[i], r);
    const double d = std::log(y[i]) - r.dot(f.coef);
    chi2 += y[i] * d * d;
  }
  f.aic = chi2 + 2.0 * cols;
  return f;
}

// Peak value at x0 from the best of a cusp, a smooth and a mixed log model.
double fit_peak_height(const std::vector<double>& x, const std::vector<double>& y, std::size_t lo, std::size_t hi,
                       double x0) {
  const LogFit cusp = fit_log(x, y, lo, hi, 2, [&](double xi, Eigen::VectorXd& r) {
    r(0) = 1.0;
    r(1) = std::abs(xi - x0);
  });
  const LogFit smooth = fit_log(x, y, lo, hi, 2, [&](double xi, Eigen::VectorXd& r) {
    r(0) = 1.0;
    r(1) = (xi - x0) * (xi - x0);
  });
  const LogFit mixed = fit_log(x, y, lo, hi, 3, [&](double xi, Eigen::VectorXd& r) {
    r(0) = 1.0;
    r(1) = std::abs(xi - x0);
    r(2) = (xi - x0) * (xi - x0);
  });
  const LogFit* best = &cusp;
  if (smooth.aic < best->aic) best = &smooth;
  if (mixed.aic < best->aic) best = &mixed;
  if (best->coef.size() == 0) return -1.0;
  return std::exp(best->coef(0));
}

// Delay where a flank crosses level, from a log-linear or log-quadratic regression around xc.
std::optional<double> flank_crossing(const std::vector<double>& x, const std::vector<double>& y, std::size_t lo,
                                     std::size_t hi, double xc, double level) {
  const LogFit lin = fit_log(x, y, lo, hi, 2, [&](double xi, Eigen::VectorXd& r) {
    r(0) = 1.0;
    r(1) = xi - xc;
  });
  const LogFit quad = fit_log(x, y, lo, hi, 3, [&](double xi, Eigen::VectorXd& r) {
    r(0) = 1.0;
    r(1) = xi - xc;
    r(2) = (xi - xc) * (xi - xc);
  });
  const double target = std::log(level);
  const double span = x[hi - 1] - x[lo];
  if (quad.coef.size() == 3 && quad.aic < lin.aic) {
    const double a = quad.coef(2), b = quad.coef(1), c = quad.coef(0) - target;
    if (std::abs(a) * span * span < 1e-12 * std::abs(b) * span) {
      if (b != 0.0) return xc - c / b;
    } else {
      const double disc = b * b - 4.0 * a * c;
      if (disc >= 0.0) {
        const double sq = std::sqrt(disc);
        const double u1 = (-b + sq) / (2.0 * a), u2 = (-b - sq) / (2.0 * a);
        return xc + (std::abs(u1) < std::abs(u2) ? u1 : u2);
      }
    }
  }
  if (lin.coef.size() == 2 && lin.coef(1) != 0.0) return xc + (target - lin.coef(0)) / lin.coef(1);
  return std::nullopt;
}

// Linear interpolation between the last bin above level and the first below, walking outwards from i.
double interpolate_crossing(const std::vector<double>& x, const std::vector<double>& y, std::size_t i, int dir,
                            double level) {
  std::size_t j = i;
  while (true) {
    const std::size_t k = dir > 0 ? j + 1 : j - 1;
    if ((dir > 0 && k >= y.size()) || (dir < 0 && j == 0)) return x[j];
    if (y[k] <= level) {
      const double t = (y[j] - level) / (y[j] - y[k]);
      return x[j] + t * (x[k] - x[j]);
    }
    j = k;
  }
}

struct PeakCore {
  double position;
  double fwhm;
};

PeakMetrics measure_peaks(const std::vector<double>& x, const std::vector<double>& y, double bw,
                          std::size_t expected) {
  const std::size_t n = y.size();
  if (n < 10) throw std::invalid_argument("histogram too small for peak analysis");

  // Background from the outer 10% of the delay range on both sides.
  const std::size_t edge = std::max<std::size_t>(1, n / 10);
  double bg = 0.0;
  for (std::size_t i = 0; i < edge; ++i) bg += y[i] + y[n - 1 - i];
  bg /= static_cast<double>(2 * edge);

  const std::vector<double> ys = box_smooth(y, 2);
  const double top = *std::max_element(ys.begin(), ys.end());
  const double threshold = bg + 0.2 * (top - bg);
  const double significance = bg + 5.0 * std::sqrt(bg + 1.0);

  std::vector<Run> runs;
  for (std::size_t i = 0; i < n;) {
    if (ys[i] <= threshold) {
      ++i;
      continue;
    }
    std::size_t j = i;
    double peak = 0.0;
    while (j < n && ys[j] > threshold) peak = std::max(peak, ys[j++]);
    if (!runs.empty() && i - runs.back().end < 3) {
      runs.back().end = j;
      runs.back().peak = std::max(runs.back().peak, peak);
    } else {
      runs.push_back({i, j, peak});
    }
    i = j;
  }
  runs.erase(std::remove_if(runs.begin(), runs.end(), [&](const Run& r) { return r.peak < significance; }),
             runs.end());
  if (runs.size() < expected) {
    std::string found;
    for (const Run& r : runs) found += fmt::format(" {:.4g}", x[(r.begin + r.end) / 2]);
    throw std::runtime_error(
        fmt::format("expected {} peaks, found {} at delays [{} ] ns", expected, runs.size(), found));
  }
  if (runs.size() > expected) {
    std::sort(runs.begin(), runs.end(), [](const Run& a, const Run& b) { return a.peak > b.peak; });
    runs.resize(expected);
    std::sort(runs.begin(), runs.end(), [](const Run& a, const Run& b) { return a.begin < b.begin; });
  }

  std::vector<PeakCore> cores;
  for (const Run& r : runs) {
    const std::size_t imax =
        static_cast<std::size_t>(std::max_element(ys.begin() + static_cast<std::ptrdiff_t>(r.begin),
                                                  ys.begin() + static_cast<std::ptrdiff_t>(r.end)) -
                                 ys.begin());
    // Centroid of the region above the smoothed half maximum.
    const double half_s = bg + 0.5 * (ys[imax] - bg);
    std::size_t lo = imax, hi = imax;
    while (lo > 0 && ys[lo - 1] > half_s) --lo;
    while (hi + 1 < n && ys[hi + 1] > half_s) ++hi;
    double sw = 0.0, swx = 0.0;
    for (std::size_t i = lo; i <= hi; ++i) {
      const double wgt = std::max(0.0, y[i] - half_s);
      sw += wgt;
      swx += wgt * x[i];
    }
    const double pos = sw > 0.0 ? swx / sw : x[imax];

    // Height from the part of the peak above half maximum.
    double height = fit_peak_height(x, y, lo, hi + 1, pos);
    if (!(height > bg)) height = y[imax];
    const double half = bg + 0.5 * (height - bg);

    // Half-maximum crossings: interpolation on the raw counts refined by flank regressions.
    double left = interpolate_crossing(x, y, imax, -1, half);
    double right = interpolate_crossing(x, y, imax, +1, half);
    const double hw = 0.5 * (right - left);
    auto refine = [&](double xc) {
      const double a = xc - 0.5 * hw, b = xc + 0.5 * hw;
      const auto lo = static_cast<std::size_t>(std::clamp(std::ceil((a - x[0]) / bw), 0.0, double(n - 1)));
      const auto hi = static_cast<std::size_t>(std::clamp(std::floor((b - x[0]) / bw), 0.0, double(n - 1))) + 1;
      if (hi <= lo || hi - lo < 6) return xc;
      const auto c = flank_crossing(x, y, lo, hi, xc, half);
      return c && std::abs(*c - xc) < 0.5 * hw ? *c : xc;
    };
    if (hw > 3.0 * bw) {
      left = refine(pos - hw);
      right = refine(pos + hw);
    }
    cores.push_back({pos, right - left});
  }

  // Template deblending: every peak shares the shape measured on the outer halves of the outermost
  // peaks; region sums are unmixed with the leakage matrix of that template.
  const std::size_t k = cores.size();
  double reach = 0.0;
  for (const auto& c : cores) reach = std::max(reach, 10.0 * c.fwhm);
  const std::size_t tlen = static_cast<std::size_t>(std::ceil(reach / bw)) + 1;
  auto sample = [&](double xq) {
    const double f = (xq - x[0]) / bw;
    if (f < 0.0 || f > static_cast<double>(n - 1)) return 0.0;
    const auto i0 = static_cast<std::size_t>(f);
    const std::size_t i1 = std::min(i0 + 1, n - 1);
    const double t = f - static_cast<double>(i0);
    return (1.0 - t) * y[i0] + t * y[i1] - bg;
  };
  std::vector<double> tmpl(tlen, 0.0);
  auto shape = [&](double u) {
    const double f = std::abs(u) / bw;
    const auto i0 = static_cast<std::size_t>(f);
    if (i0 + 1 >= tlen) return 0.0;
    const double t = f - static_cast<double>(i0);
    return (1.0 - t) * tmpl[i0] + t * tmpl[i0 + 1];
  };
  std::vector<double> amp(k, 1.0);
  const double pfirst = cores.front().position, plast = cores.back().position;
  for (std::size_t j = 0; j < tlen; ++j) {
    const double d = static_cast<double>(j) * bw;
    tmpl[j] = 0.5 * (sample(pfirst - d) + sample(plast + d));
  }
  std::vector<std::size_t> region(n, k);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double lo_mid = p == 0 ? -std::numeric_limits<double>::infinity()
                                   : 0.5 * (cores[p - 1].position + cores[p].position);
      const double hi_mid = p + 1 == k ? std::numeric_limits<double>::infinity()
                                       : 0.5 * (cores[p].position + cores[p + 1].position);
      if (x[i] >= lo_mid && x[i] < hi_mid && std::abs(x[i] - cores[p].position) <= reach) region[i] = p;
    }
  }
  std::vector<double> area(k, 0.0);
  for (int iter = 0; iter < 4; ++iter) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(k, k);
    Eigen::VectorXd yr = Eigen::VectorXd::Zero(k);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t r = region[i];
      if (r == k) continue;
      yr(r) += y[i] - bg;
      for (std::size_t p = 0; p < k; ++p) m(r, p) += shape(x[i] - cores[p].position);
    }
    const Eigen::VectorXd a = m.fullPivLu().solve(yr);
    for (std::size_t p = 0; p < k; ++p) amp[p] = a(p);
    if (k < 2 || !(amp.front() > 0.0) || !(amp.back() > 0.0)) break;
    std::vector<double> next(tlen, 0.0);
    for (std::size_t j = 0; j < tlen; ++j) {
      const double d = static_cast<double>(j) * bw;
      double l = sample(pfirst - d), r = sample(plast + d);
      for (std::size_t p = 1; p < k; ++p) l -= amp[p] * shape(pfirst - d - cores[p].position);
      for (std::size_t p = 0; p + 1 < k; ++p) r -= amp[p] * shape(plast + d - cores[p].position);
      next[j] = 0.5 * (l / amp.front() + r / amp.back());
    }
    tmpl = std::move(next);
    std::fill(amp.begin(), amp.end(), 1.0);
  }
  {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(k, k);
    Eigen::VectorXd yr = Eigen::VectorXd::Zero(k);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t r = region[i];
      if (r == k) continue;
      yr(r) += y[i] - bg;
      for (std::size_t p = 0; p < k; ++p) m(r, p) += shape(x[i] - cores[p].position);
    }
    const Eigen::VectorXd a = m.fullPivLu().solve(yr);
    for (std::size_t p = 0; p < k; ++p) {
      double total = 0.0;
      for (std::size_t i = 0; i < n; ++i) total += shape(x[i] - cores[p].position);
      area[p] = a(p) * total;
    }
  }

  PeakMetrics out;
  out.background_per_bin = bg;
  for (std::size_t p = 0; p < k; ++p) {
    out.positions.push_back(cores[p].position);
    out.fwhm.push_back(cores[p].fwhm);
    out.areas.push_back(area[p]);
  }
  if (k >= 3) {
    std::size_t c = 0;
    for (std::size_t p = 1; p < k; ++p)
      if (std::abs(out.positions[p]) < std::abs(out.positions[c])) c = p;
    double side = 0.0;
    std::size_t ns = 0;
    for (std::size_t p = 0; p < k; ++p)
      if (p != c) {
        side += out.areas[p];
        ++ns;
      }
    side /= static_cast<double>(ns);
    out.central_to_side_ratio = side > 0.0 ? out.areas[c] / side : 0.0;
  }
  return out;
}

}  // namespace

PeakMetrics peak_metrics(const CoincidenceHistogram& h, std::size_t expected_peaks) {
  const std::size_t n = h.size();
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = h.bin_center(i);
    y[i] = static_cast<double>(h.count(i));
  }
  PeakMetrics out = measure_peaks(x, y, h.bin_width(), expected_peaks);
  if (expected_peaks >= 3 && out.central_to_side_ratio > 0.0) {
    // Parametric Poisson bootstrap of the area ratio.
    Rng rng(0x5eed);
    constexpr int kResamples = 40;
    double s1 = 0.0, s2 = 0.0;
    int used = 0;
    std::vector<double> yb(n);
    for (int r = 0; r < kResamples; ++r) {
      for (std::size_t i = 0; i < n; ++i) {
        std::poisson_distribution<long long> pd(std::max(y[i], 1e-12));
        yb[i] = static_cast<double>(pd(rng));
      }
      try {
        const PeakMetrics b = measure_peaks(x, yb, h.bin_width(), expected_peaks);
        s1 += b.central_to_side_ratio;
        s2 += b.central_to_side_ratio * b.central_to_side_ratio;
        ++used;
      } catch (const std::exception&) {
      }
    }
    if (used > 1) {
      const double mean = s1 / used;
      out.ratio_error = std::sqrt(std::max(0.0, (s2 - used * mean * mean) / (used - 1)));
    }
  }
  return out;
}

double fidelity_from_correlations(double e_zz, double e_xx) { return (1.0 + e_zz - 2.0 * e_xx) / 4.0; }

void write_fringe(std::ostream& out, const FringeScan& scan) {
  out << "angle_rad,counts\n";
  for (const auto& p : scan.points) out << fmt::format("{},{}\n", p.angle_rad, p.counts);
}

}  // namespace polent
