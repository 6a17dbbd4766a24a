#pragma once

#include <polent/states.hpp>
#include <polent/transcriber.hpp>

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

namespace oracle {

using C = std::complex<double>;

// Dense 4x4 density matrix in (HH, HV, VH, VV) order.
using Rho = std::array<std::array<C, 4>, 4>;

inline Rho outer(const std::array<C, 4>& v) {
  Rho r{};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) r[i][j] = v[i] * std::conj(v[j]);
  return r;
}

inline Rho from_polent(const polent::TwoPhotonState& s) {
  Rho r{};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) r[i][j] = s(i, j);
  return r;
}

// Single-photon linear polarizer at angle theta from H (projection axis).
inline std::array<C, 2> axis(double theta) { return {C(std::cos(theta)), C(std::sin(theta))}; }

// <u (x) v| rho |u (x) v> by explicit summation.
inline double project(const Rho& rho, const std::array<C, 2>& u, const std::array<C, 2>& v) {
  std::array<C, 4> w{u[0] * v[0], u[0] * v[1], u[1] * v[0], u[1] * v[1]};
  C acc = 0.0;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) acc += std::conj(w[i]) * rho[i][j] * w[j];
  return acc.real();
}

// Probability of both transmitted ports for half-wave plates at ta, tb.
inline double coincidence(const Rho& rho, double ta, double tb) {
  return project(rho, axis(2.0 * ta), axis(2.0 * tb));
}

inline double correlation(const Rho& rho, double ta, double tb) {
  const double q = std::acos(-1.0) / 2.0;
  const double pp = project(rho, axis(2.0 * ta), axis(2.0 * tb));
  const double pm = project(rho, axis(2.0 * ta), axis(2.0 * tb + q));
  const double mp = project(rho, axis(2.0 * ta + q), axis(2.0 * tb));
  const double mm = project(rho, axis(2.0 * ta + q), axis(2.0 * tb + q));
  return (pp + mm - pm - mp) / (pp + mm + pm + mp);
}

inline double chsh(const Rho& rho, double a, double ap, double b, double bp) {
  return correlation(rho, a, b) - correlation(rho, a, bp) + correlation(rho, ap, b) + correlation(rho, ap, bp);
}

// Full polarization (x) arrival-time propagation: each photon lives in
// {H,V} (x) {early, late}, the pair in the 16-dimensional product space.
// Keeping only equal arrival slots and tracing out time gives the
// post-selected polarization state.
struct PostSelected {
  std::array<C, 4> psi;  // unnormalized (HH, HV, VH, VV)
  double probability;
};

inline PostSelected propagate(const polent::ProductInput& in, const polent::TranscriberSpec& spec) {
  // index = pol * 2 + slot, pol 0 = H, slot 0 = early
  auto photon = [&](C alpha, C beta, double phi) {
    std::array<C, 4> v{};
    v[0 * 2 + 0] = alpha * spec.arm_transmission_H;
    v[1 * 2 + 1] = beta * spec.arm_transmission_V * std::polar(1.0, phi);
    return v;
  };
  const auto p1 = photon(in.alpha1, in.beta1, spec.phi1);
  const auto p2 = photon(in.alpha2, in.beta2, spec.phi2);
  std::array<C, 16> full{};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) full[i * 4 + j] = p1[i] * p2[j];
  PostSelected out{};
  out.probability = 0.0;
  for (int pol1 = 0; pol1 < 2; ++pol1)
    for (int pol2 = 0; pol2 < 2; ++pol2)
      for (int slot = 0; slot < 2; ++slot) {
        const C a = full[(pol1 * 2 + slot) * 4 + (pol2 * 2 + slot)];
        out.psi[pol1 * 2 + pol2] += a;
        out.probability += std::norm(a);
      }
  return out;
}

// Every pair (i, j) with |b_j - a_i| <= max_delay, binned by nearest multiple of bin_width.
inline std::map<long long, std::uint64_t> all_pairs(std::span<const double> a, std::span<const double> b,
                                                   double bin_width, double max_delay) {
  std::map<long long, std::uint64_t> out;
  for (double x : a)
    for (double y : b) {
      const double d = y - x;
      if (std::abs(d) <= max_delay) ++out[static_cast<long long>(std::floor(d / bin_width + 0.5))];
    }
  return out;
}

inline std::uint64_t all_pairs_in(std::span<const double> a, std::span<const double> b, double lo, double hi) {
  std::uint64_t n = 0;
  for (double x : a)
    for (double y : b)
      if (y - x >= lo && y - x <= hi) ++n;
  return n;
}

}  // namespace oracle
