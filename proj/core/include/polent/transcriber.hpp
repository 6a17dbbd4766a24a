#pragma once

#include "polent/states.hpp"

#include <array>
#include <string>

namespace polent {

struct TranscriberSpec {
  double delta_t_ns = 76.0;
  double phi1 = 0.0;
  double phi2 = 0.0;
  double arm_transmission_H = 1.0;  // amplitude transmission of the short arm
  double arm_transmission_V = 1.0;  // amplitude transmission of the long arm

  void validate() const;
};

struct ProductInput {
  Complex alpha1{1.0, 0.0};
  Complex beta1{0.0, 0.0};
  Complex alpha2{1.0, 0.0};
  Complex beta2{0.0, 0.0};

  static ProductInput diagonal();
  void validate() const;
};

/// Branch order: (H,e)(H,e), (H,e)(V,l), (V,l)(H,e), (V,l)(V,l).
enum BranchIndex : int { kBranchHH = 0, kBranchHV = 1, kBranchVH = 2, kBranchVV = 3 };

struct TemporalBranchState {
  std::array<Complex, 4> amplitude{};
  /// Detection-time offset t1 - t2 of each branch, ns.
  std::array<double, 4> offset_ns{};

  double probability(int branch) const { return std::norm(amplitude[static_cast<std::size_t>(branch)]); }
  double total_norm() const;
  double central_norm() const { return probability(kBranchHH) + probability(kBranchVV); }
  double side_norm() const { return probability(kBranchHV) + probability(kBranchVH); }
};

TemporalBranchState apply_transcriber(const ProductInput& input, const TranscriberSpec& spec);

/// Post-selected state alpha|HH> + beta e^{i phi}|VV> with real alpha, beta >= 0.
struct PostSelection {
  TwoPhotonState state;
  double alpha;
  double beta;
  double phi;
  double probability;
};

PostSelection post_select_central(const TemporalBranchState& branches);

struct TimescaleReport {
  double photon_ratio;  // delta_t / tau_photon
  double pair_ratio;    // tau_pair / delta_t
  double threshold;
  bool photon_ok;
  bool pair_ok;

  bool ok() const { return photon_ok && pair_ok; }
  std::string describe() const;
};

TimescaleReport validate_timescales(const TranscriberSpec& spec, double tau_photon_ns, double tau_pair_ns,
                                    double threshold = 3.0);

}  // namespace polent
