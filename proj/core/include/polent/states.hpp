#pragma once

#include <Eigen/Dense>

#include <array>
#include <complex>

namespace polent {

using Complex = std::complex<double>;
using Matrix4c = Eigen::Matrix<Complex, 4, 4>;
using Vector4c = Eigen::Matrix<Complex, 4, 1>;
using Matrix2c = Eigen::Matrix<Complex, 2, 2>;

// Basis order of every 4-dimensional object.
enum BasisIndex : int { kHH = 0, kHV = 1, kVH = 2, kVV = 3 };

/// Two-photon polarization density matrix. Construction validates Hermiticity,
/// unit trace and positivity; invalid matrices throw std::invalid_argument.
class TwoPhotonState {
 public:
  explicit TwoPhotonState(const Matrix4c& rho);

  /// Pure state |psi><psi|, normalizing psi. Zero vectors are rejected.
  static TwoPhotonState from_pure(const Vector4c& psi);
  static TwoPhotonState maximally_mixed();

  const Matrix4c& rho() const noexcept { return rho_; }
  Complex operator()(int r, int c) const { return rho_(r, c); }
  double purity() const;
  Eigen::Vector4d eigenvalues() const;

 private:
  Matrix4c rho_;
};

/// Half-wave plate in front of a polarizing splitter. The transmitted port
/// projects onto linear polarization at 2*hwp_angle from H.
struct AnalyzerSetting {
  double hwp_angle = 0.0;

  AnalyzerSetting() = default;
  explicit AnalyzerSetting(double angle);

  /// Setting whose transmitted port is the reflected port of this one.
  AnalyzerSetting orthogonal() const;
  Eigen::Vector2d pass_vector() const;
  Eigen::Matrix2d projector() const;
};

struct NoiseModel {
  double dephasing_sigma = 0.0;
  double white_floor = 0.0;

  void validate() const;
};

TwoPhotonState bell_state(double phi);
/// (|HV> + e^{i phi}|VH>)/sqrt2.
TwoPhotonState psi_state(double phi);

/// tr(rho Pi_a (x) Pi_b) with both analyzers on their transmitted ports.
double coincidence_probability(const TwoPhotonState& state, const AnalyzerSetting& a,
                               const AnalyzerSetting& b);

/// Joint probability of the four PBS outcome combinations, ordered
/// (pass,pass), (pass,block), (block,pass), (block,block).
std::array<double, 4> outcome_probabilities(const TwoPhotonState& state, const AnalyzerSetting& a,
                                            const AnalyzerSetting& b);

/// Correlation coefficient E(a,b) = P++ + P-- - P+- - P-+.
double correlation(const TwoPhotonState& state, const AnalyzerSetting& a, const AnalyzerSetting& b);

TwoPhotonState apply_noise(const TwoPhotonState& state, const NoiseModel& model);

/// <Phi(phi)| rho |Phi(phi)>.
double fidelity(const TwoPhotonState& state, double target_phi);

struct FidelityOptimum {
  double fidelity;
  double phi;
};
/// Maximum of fidelity over target_phi in closed form.
FidelityOptimum max_fidelity(const TwoPhotonState& state);

/// Conditional (unnormalized) partner operator Tr_A[(Pi_a (x) 1) rho].
Matrix2c conditional_partner_operator(const TwoPhotonState& state, const AnalyzerSetting& a);

/// Fringe visibility seen by the partner when it scans every pure projection.
double visibility_from_state(const TwoPhotonState& state, const AnalyzerSetting& basis);

/// Fringe visibility seen by the partner when it rotates a half-wave plate,
/// i.e. restricted to linear polarization projections.
double hwp_scan_visibility(const TwoPhotonState& state, const AnalyzerSetting& basis);

struct ChshSettings {
  double a = 0.0;
  double a_prime = 0.39269908169872414;  // pi/8
  double b = 0.58904862254808621;        // 3pi/16
  double b_prime = 0.19634954084936207;  // pi/16

  std::array<std::array<AnalyzerSetting, 2>, 4> pairs() const;
};

/// S = E(a,b) - E(a,b') + E(a',b) + E(a',b') for the state (signed).
double chsh_value(const TwoPhotonState& state, const ChshSettings& settings = {});

/// Swaps H and V on the photon selected by rotate_second (photon 2).
TwoPhotonState bell_basis_switch(const TwoPhotonState& state, bool rotate_second);

}  // namespace polent
