#pragma once

#include "polent/detection.hpp"
#include "polent/states.hpp"

#include <array>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace polent {

struct FringePoint {
  double angle_rad;
  double counts;
  double integration_s = 1.0;
};

/// Coincidences versus the scanned angle. harmonic is the multiplier of the
/// angle in the fringe model: 4 for a half-wave plate scan, 1 for a phase scan.
struct FringeScan {
  std::vector<FringePoint> points;
  AnalyzerSetting fixed;
  double harmonic = 4.0;

  void validate() const;
};

struct FringeFit {
  double offset = 0.0;     // rate
  double amplitude = 0.0;  // rate
  double phase = 0.0;      // model offset + amplitude cos(harmonic x + phase)
  double visibility = 0.0;
  double visibility_error = 0.0;
  double chi2 = 0.0;
  std::size_t dof = 0;
  bool unphysical = false;  // V > 1 by more than 3 sigma
};

/// Weighted linear least squares of offset + a cos(kx) + b sin(kx) with Poisson
/// weights. weights_from (if non-empty) supplies the counts used for the weights.
FringeFit fit_fringe(const FringeScan& scan, std::span<const double> weights_from = {});

/// Coincidences of one CHSH setting pair for the outcomes ++, +-, -+, --.
using OutcomeCounts = std::array<double, 4>;

struct CorrelationEstimate {
  double value;
  double error;
};
CorrelationEstimate correlation_from_counts(const OutcomeCounts& n);

struct ChshResult {
  std::array<CorrelationEstimate, 4> e;
  double s_signed = 0.0;
  double s = 0.0;  // |S|
  double error = 0.0;
};

/// Setting pairs ordered (a,b), (a,b'), (a',b), (a',b').
ChshResult chsh(const std::array<OutcomeCounts, 4>& counts);

double violation_nsigma(double s, double sigma_s);

struct NetCorrection {
  FringeScan net;
  FringeFit fit;
  std::size_t clamped_points = 0;
  bool overcorrection = false;
};

/// Subtracts the accidental estimate of each point and refits with the raw
/// Poisson weights.
NetCorrection net_correction(const FringeScan& raw, std::span<const double> accidentals);

struct PeakMetrics {
  std::vector<double> positions;
  std::vector<double> fwhm;
  std::vector<double> areas;
  double background_per_bin = 0.0;
  double central_to_side_ratio = 0.0;
  double ratio_error = 0.0;
};

/// Locates the coincidence peaks, measures half-maximum widths by linear
/// interpolation and integrated areas after background subtraction.
PeakMetrics peak_metrics(const CoincidenceHistogram& h, std::size_t expected_peaks = 3);

/// Fidelity to Phi- from the H/V and D/A correlations: (1 + E_zz - 2 E_xx) / 4.
double fidelity_from_correlations(double e_zz, double e_xx);

void write_fringe(std::ostream& out, const FringeScan& scan);

}  // namespace polent
