#include "polent/states.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace polent {

namespace {

constexpr double kHermitianTol = 1e-12;
constexpr double kTraceTol = 1e-12;
constexpr double kEigenFloor = -1e-10;

Matrix4c kron(const Matrix2c& a, const Matrix2c& b) {
  Matrix4c out;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l) out(2 * i + k, 2 * j + l) = a(i, j) * b(k, l);
  return out;
}

Matrix2c to_complex(const Eigen::Matrix2d& m) { return m.cast<Complex>(); }

}  // namespace

TwoPhotonState::TwoPhotonState(const Matrix4c& rho) : rho_(rho) {
  const double herm = (rho_ - rho_.adjoint()).cwiseAbs().maxCoeff();
  if (!(herm <= kHermitianTol))
    throw std::invalid_argument("state is not Hermitian (max deviation " + std::to_string(herm) + ")");
  const Complex tr = rho_.trace();
  if (std::abs(tr) < kTraceTol) throw std::invalid_argument("state has zero trace");
  if (!(std::abs(tr - 1.0) < kTraceTol))
    throw std::invalid_argument("state trace is " + std::to_string(tr.real()) + ", expected 1");
  const Eigen::Vector4d ev = eigenvalues();
  if (!(ev.minCoeff() >= kEigenFloor))
    throw std::invalid_argument("state has negative eigenvalue " + std::to_string(ev.minCoeff()));
}

TwoPhotonState TwoPhotonState::from_pure(const Vector4c& psi) {
  const double n = psi.norm();
  if (!(n > 0.0)) throw std::invalid_argument("cannot build a state from a zero vector");
  const Vector4c v = psi / n;
  Matrix4c rho = v * v.adjoint();
  rho = 0.5 * (rho + rho.adjoint()).eval();
  return TwoPhotonState(rho);
}

TwoPhotonState TwoPhotonState::maximally_mixed() {
  return TwoPhotonState(Matrix4c::Identity() * 0.25);
}

double TwoPhotonState::purity() const { return (rho_ * rho_).trace().real(); }

Eigen::Vector4d TwoPhotonState::eigenvalues() const {
  Eigen::SelfAdjointEigenSolver<Matrix4c> solver(rho_, Eigen::EigenvaluesOnly);
  return solver.eigenvalues();
}

AnalyzerSetting::AnalyzerSetting(double angle) {
  double r = std::fmod(angle, std::numbers::pi);
  if (r < 0.0) r += std::numbers::pi;
  if (r >= std::numbers::pi) r -= std::numbers::pi;
  hwp_angle = r;
}

AnalyzerSetting AnalyzerSetting::orthogonal() const {
  return AnalyzerSetting(hwp_angle + std::numbers::pi / 4.0);
}

Eigen::Vector2d AnalyzerSetting::pass_vector() const {
  return {std::cos(2.0 * hwp_angle), std::sin(2.0 * hwp_angle)};
}

Eigen::Matrix2d AnalyzerSetting::projector() const {
  const Eigen::Vector2d v = pass_vector();
  return v * v.transpose();
}

void NoiseModel::validate() const {
  if (!(dephasing_sigma >= 0.0) || !std::isfinite(dephasing_sigma))
    throw std::invalid_argument("dephasing_sigma must be finite and non-negative");
  if (!(white_floor >= 0.0 && white_floor <= 1.0))
    throw std::invalid_argument("white_floor must lie in [0,1]");
}

TwoPhotonState bell_state(double phi) {
  Vector4c psi = Vector4c::Zero();
  psi(kHH) = 1.0 / std::numbers::sqrt2;
  psi(kVV) = std::polar(1.0 / std::numbers::sqrt2, phi);
  return TwoPhotonState::from_pure(psi);
}

TwoPhotonState psi_state(double phi) {
  Vector4c psi = Vector4c::Zero();
  psi(kHV) = 1.0 / std::numbers::sqrt2;
  psi(kVH) = std::polar(1.0 / std::numbers::sqrt2, phi);
  return TwoPhotonState::from_pure(psi);
}

std::array<double, 4> outcome_probabilities(const TwoPhotonState& state, const AnalyzerSetting& a,
                                            const AnalyzerSetting& b) {
  const Eigen::Matrix2d pa = a.projector();
  const Eigen::Matrix2d pb = b.projector();
  const Eigen::Matrix2d qa = Eigen::Matrix2d::Identity() - pa;
  const Eigen::Matrix2d qb = Eigen::Matrix2d::Identity() - pb;
  auto prob = [&](const Eigen::Matrix2d& x, const Eigen::Matrix2d& y) {
    const double p = (state.rho() * kron(to_complex(x), to_complex(y))).trace().real();
    return std::clamp(p, 0.0, 1.0);
  };
  return {prob(pa, pb), prob(pa, qb), prob(qa, pb), prob(qa, qb)};
}

double coincidence_probability(const TwoPhotonState& state, const AnalyzerSetting& a,
                               const AnalyzerSetting& b) {
  return outcome_probabilities(state, a, b)[0];
}

double correlation(const TwoPhotonState& state, const AnalyzerSetting& a, const AnalyzerSetting& b) {
  const auto p = outcome_probabilities(state, a, b);
  return p[0] + p[3] - p[1] - p[2];
}

TwoPhotonState apply_noise(const TwoPhotonState& state, const NoiseModel& model) {
  model.validate();
  Matrix4c rho = state.rho();
  const double damp = std::exp(-0.5 * model.dephasing_sigma * model.dephasing_sigma);
  // random phase on |VV>: every coherence with VV decays
  for (int i = 0; i < 4; ++i) {
    if (i == kVV) continue;
    rho(i, kVV) *= damp;
    rho(kVV, i) *= damp;
  }
  rho = (1.0 - model.white_floor) * rho + model.white_floor * Matrix4c::Identity() * 0.25;
  rho = 0.5 * (rho + rho.adjoint()).eval();
  const Complex tr = rho.trace();
  rho /= tr.real();
  return TwoPhotonState(rho);
}

double fidelity(const TwoPhotonState& state, double target_phi) {
  const Matrix4c& r = state.rho();
  const double f = 0.5 * (r(kHH, kHH).real() + r(kVV, kVV).real()) +
                   (std::polar(1.0, target_phi) * r(kHH, kVV)).real();
  return std::clamp(f, 0.0, 1.0);
}

FidelityOptimum max_fidelity(const TwoPhotonState& state) {
  const Complex c = state(kHH, kVV);
  const double phi = std::abs(c) > 0.0 ? -std::arg(c) : 0.0;
  return {fidelity(state, phi), phi};
}

Matrix2c conditional_partner_operator(const TwoPhotonState& state, const AnalyzerSetting& a) {
  const Eigen::Matrix2d pa = a.projector();
  Matrix2c m = Matrix2c::Zero();
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y) m(i, j) += pa(y, x) * state(2 * x + i, 2 * y + j);
  return m;
}

namespace {

double contrast(double hi, double lo) {
  const double sum = hi + lo;
  if (!(sum > 0.0)) return 0.0;
  return std::clamp((hi - lo) / sum, 0.0, 1.0);
}

}  // namespace

double visibility_from_state(const TwoPhotonState& state, const AnalyzerSetting& basis) {
  const Matrix2c m = conditional_partner_operator(state, basis);
  const double d = 0.5 * (m(0, 0).real() - m(1, 1).real());
  const double mean = 0.5 * (m(0, 0).real() + m(1, 1).real());
  const double r = std::sqrt(d * d + std::norm(m(0, 1)));
  return contrast(mean + r, mean - r);
}

double hwp_scan_visibility(const TwoPhotonState& state, const AnalyzerSetting& basis) {
  const Matrix2c m = conditional_partner_operator(state, basis);
  const double d = 0.5 * (m(0, 0).real() - m(1, 1).real());
  const double mean = 0.5 * (m(0, 0).real() + m(1, 1).real());
  const double off = m(0, 1).real();
  const double r = std::sqrt(d * d + off * off);
  return contrast(mean + r, mean - r);
}

std::array<std::array<AnalyzerSetting, 2>, 4> ChshSettings::pairs() const {
  return {{{AnalyzerSetting(a), AnalyzerSetting(b)},
           {AnalyzerSetting(a), AnalyzerSetting(b_prime)},
           {AnalyzerSetting(a_prime), AnalyzerSetting(b)},
           {AnalyzerSetting(a_prime), AnalyzerSetting(b_prime)}}};
}

double chsh_value(const TwoPhotonState& state, const ChshSettings& settings) {
  const auto p = settings.pairs();
  return correlation(state, p[0][0], p[0][1]) - correlation(state, p[1][0], p[1][1]) +
         correlation(state, p[2][0], p[2][1]) + correlation(state, p[3][0], p[3][1]);
}

TwoPhotonState bell_basis_switch(const TwoPhotonState& state, bool rotate_second) {
  if (!rotate_second) return state;
  Eigen::PermutationMatrix<4> perm;
  perm.indices() << kHV, kHH, kVV, kVH;
  const Matrix4c p = perm.toDenseMatrix().cast<Complex>();
  const Matrix4c rho = p * state.rho() * p.transpose();
  return TwoPhotonState(rho);
}

}  // namespace polent
