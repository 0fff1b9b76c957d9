#include "rockgraph/effmed.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "rockgraph/errors.hpp"
#include "rockgraph/scoring.hpp"

namespace rockgraph {

namespace {

void check_phi(double phi) {
  if (!(phi >= 0.0 && phi <= 1.0)) throw InvalidArgument("porosity must lie in [0, 1]");
}

}  // namespace

StiffnessMatrix isotropic_stiffness(const ElasticModuli& m) {
  StiffnessMatrix c{};
  const double diag = m.k + 4.0 * m.mu / 3.0;
  const double off = m.k - 2.0 * m.mu / 3.0;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) c[i][j] = i == j ? diag : off;
    c[i + 3][i + 3] = m.mu;
  }
  return c;
}

ElasticModuli voigt_average(const StiffnessMatrix& c) {
  const double a = c[0][0] + c[1][1] + c[2][2];
  const double b = c[0][1] + c[0][2] + c[1][2];
  const double s = c[3][3] + c[4][4] + c[5][5];
  return {(a + 2.0 * b) / 9.0, (a - b + 3.0 * s) / 15.0};
}

namespace {

double harmonic(double m1, double f1, double m2, double f2) {
  if ((f1 > 0.0 && m1 == 0.0) || (f2 > 0.0 && m2 == 0.0)) return 0.0;
  double inv = 0.0;
  if (f1 > 0.0) inv += f1 / m1;
  if (f2 > 0.0) inv += f2 / m2;
  return 1.0 / inv;
}

}  // namespace

Bounds voigt_reuss_bounds(const ElasticModuli& mineral, const ElasticModuli& pore, double phi) {
  check_phi(phi);
  const double solid = 1.0 - phi;
  Bounds b;
  b.upper = {solid * mineral.k + phi * pore.k, solid * mineral.mu + phi * pore.mu};
  b.lower = {harmonic(mineral.k, solid, pore.k, phi), harmonic(mineral.mu, solid, pore.mu, phi)};
  return b;
}

Bounds hashin_shtrikman(const ElasticModuli& mineral, const ElasticModuli& pore, double phi) {
  check_phi(phi);
  const double km = mineral.k, mm = mineral.mu, kp = pore.k, mp = pore.mu;
  const double solid = 1.0 - phi;
  Bounds b;

  // Upper bounds: mineral is the host.
  if (phi == 0.0 || kp == km) {
    b.upper.k = km;
  } else {
    b.upper.k = km + phi / (1.0 / (kp - km) + solid / (km + 4.0 * mm / 3.0));
  }
  if (phi == 0.0 || mp == mm) {
    b.upper.mu = mm;
  } else {
    const double zeta = 2.0 * solid * (km + 2.0 * mm) / (5.0 * mm * (km + 4.0 * mm / 3.0));
    b.upper.mu = mm + phi / (1.0 / (mp - mm) + zeta);
  }

  // Lower bounds: pore fill is the host. With zero pore stiffness the second
  // denominator term diverges for phi > 0 and the correction vanishes.
  if (phi == 1.0 || km == kp) {
    b.lower.k = kp;
  } else if (kp + 4.0 * mp / 3.0 == 0.0) {
    b.lower.k = phi > 0.0 ? kp : km;
  } else {
    b.lower.k = kp + solid / (1.0 / (km - kp) + phi / (kp + 4.0 * mp / 3.0));
  }
  if (phi == 1.0 || mm == mp) {
    b.lower.mu = mp;
  } else if (mp == 0.0) {
    b.lower.mu = phi > 0.0 ? mp : mm;
  } else {
    const double zeta = 2.0 * phi * (kp + 2.0 * mp) / (5.0 * mp * (kp + 4.0 * mp / 3.0));
    b.lower.mu = mp + solid / (1.0 / (mm - mp) + zeta);
  }
  return b;
}

void DemParams::validate() const {
  if (!(mineral.k > 0.0 && mineral.mu > 0.0)) throw InvalidArgument("mineral moduli must be positive");
  if (!(inclusion.k >= 0.0 && inclusion.mu >= 0.0)) {
    throw InvalidArgument("inclusion moduli must be non-negative");
  }
  if (!(aspect_ratio > 0.0 && aspect_ratio <= 1.0)) throw InvalidArgument("aspect ratio must lie in (0, 1]");
  if (!(rel_tol > 0.0) || !(abs_tol > 0.0) || !(max_step > 0.0)) {
    throw InvalidArgument("integration tolerances and max step must be positive");
  }
}

namespace {

double beta(const ElasticModuli& m) {
  const double den = 3.0 * m.k + 4.0 * m.mu;
  return den > 0.0 ? m.mu * (3.0 * m.k + m.mu) / den : 0.0;
}

}  // namespace

double penny_crack_p(const ElasticModuli& m, const ElasticModuli& i, double aspect_ratio) {
  const double pab = std::numbers::pi * aspect_ratio * beta(m);
  return (m.k + 4.0 * i.mu / 3.0) / (i.k + 4.0 * i.mu / 3.0 + pab);
}

double penny_crack_q(const ElasticModuli& m, const ElasticModuli& i, double aspect_ratio) {
  const double pa = std::numbers::pi * aspect_ratio;
  const double b = beta(m);
  return (1.0 + 8.0 * m.mu / (4.0 * i.mu + pa * (m.mu + 2.0 * b)) +
          2.0 * (i.k + 2.0 * (i.mu + m.mu) / 3.0) / (i.k + 4.0 * i.mu / 3.0 + pa * b)) /
         5.0;
}

ElasticModuli dem_rhs(const DemParams& params, const ElasticModuli& state, double y) {
  const ElasticModuli m{std::max(state.k, 0.0), std::max(state.mu, 0.0)};
  const auto& inc = params.inclusion;
  // A background without shear rigidity cannot host a crack; the factors
  // have no finite value there, and the medium is left unchanged.
  if (beta(m) <= 0.0 && inc.k + 4.0 * inc.mu / 3.0 <= 0.0) return {0.0, 0.0};
  if (m.mu <= 0.0 && inc.mu <= 0.0) return {0.0, 0.0};
  const double p = penny_crack_p(m, inc, params.aspect_ratio);
  const double q = penny_crack_q(m, inc, params.aspect_ratio);
  const double scale = 1.0 / (1.0 - y);
  return {(inc.k - m.k) * p * scale, (inc.mu - m.mu) * q * scale};
}

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

using State = std::array<double, 2>;

State rhs(const DemParams& p, const State& s, double y) {
  const auto d = dem_rhs(p, {s[0], s[1]}, y);
  return {d.k, d.mu};
}

State axpy(const State& s, double h, std::initializer_list<std::pair<double, const State*>> terms) {
  State out = s;
  for (const auto& [coef, k] : terms) {
    out[0] += h * coef * (*k)[0];
    out[1] += h * coef * (*k)[1];
  }
  return out;
}

// Advances `state` from y0 to y1 in place.
void integrate(const DemParams& p, State& state, double y0, double y1, double& h) {
  double y = y0;
  State k1 = rhs(p, state, y);
  while (y < y1) {
    const double remaining = y1 - y;
    bool last = false;
    double step = std::min({h, p.max_step, remaining});
    // Snap to the endpoint rather than leave a sliver for the next step.
    if (step >= remaining || remaining - step < 1e-12 * std::max(1.0, y1)) {
      step = remaining;
      last = true;
    }
    if (step < 1e-14 * std::max(1.0, y)) {
      throw NumericError("DEM integration step underflow at porosity " + std::to_string(y) +
                         " (last state K=" + std::to_string(state[0]) + ", mu=" + std::to_string(state[1]) +
                         ")");
    }

    const State k2 = rhs(p, axpy(state, step, {{a21, &k1}}), y + c2 * step);
    const State k3 = rhs(p, axpy(state, step, {{a31, &k1}, {a32, &k2}}), y + c3 * step);
    const State k4 = rhs(p, axpy(state, step, {{a41, &k1}, {a42, &k2}, {a43, &k3}}), y + c4 * step);
    const State k5 = rhs(p, axpy(state, step, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}), y + c5 * step);
    const State k6 =
        rhs(p, axpy(state, step, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}), y + step);
    const State next = axpy(state, step, {{b1, &k1}, {b3, &k3}, {b4, &k4}, {b5, &k5}, {b6, &k6}});
    const State k7 = rhs(p, next, y + step);

    double err = 0.0;
    for (int i = 0; i < 2; ++i) {
      const double e = step * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
      const double sc = p.abs_tol + p.rel_tol * std::max(std::abs(state[i]), std::abs(next[i]));
      err = std::max(err, std::abs(e) / sc);
    }
    if (!std::isfinite(err)) {
      h = step * 0.2;
      continue;
    }
    if (err <= 1.0) {
      y = last ? y1 : y + step;
      state = next;
      k1 = k7;  // first-same-as-last
      if (last) break;  // keep h from the last unclipped step
    }
    const double factor = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
    h = step * (err <= 1.0 ? factor : std::min(factor, 1.0));
  }
}

}  // namespace

std::vector<ElasticModuli> dem_curve(const DemParams& params, std::span<const double> phis) {
  params.validate();
  for (double phi : phis) {
    if (!(phi >= 0.0 && phi < 1.0)) throw InvalidArgument("DEM porosity must lie in [0, 1)");
  }
  for (std::size_t i = 1; i < phis.size(); ++i) {
    if (phis[i] < phis[i - 1]) throw InvalidArgument("DEM porosities must be sorted ascending");
  }
  std::vector<ElasticModuli> out;
  out.reserve(phis.size());
  State state{params.mineral.k, params.mineral.mu};
  double y = 0.0;
  double h = std::min(params.max_step, 1e-3);
  for (double phi : phis) {
    if (phi > y) {
      integrate(params, state, y, phi, h);
      y = phi;
    }
    out.push_back({std::max(state[0], 0.0), std::max(state[1], 0.0)});
  }
  return out;
}

ElasticModuli dem_moduli(const DemParams& params, double phi) {
  const double phis[1] = {phi};
  return dem_curve(params, phis).front();
}

AspectRatioFit fit_aspect_ratio(std::span<const PorosityModuli> samples, std::span<const double> alpha_grid,
                                const DemParams& base) {
  if (samples.size() < 2) throw InvalidArgument("aspect-ratio fit needs at least two samples");
  if (alpha_grid.empty()) throw InvalidArgument("aspect-ratio grid is empty");
  for (double a : alpha_grid) {
    if (!(a > 0.0 && a <= 1.0)) throw InvalidArgument("aspect ratios must lie in (0, 1]");
  }

  std::vector<double> truth_k, truth_mu;
  for (const auto& s : samples) {
    truth_k.push_back(s.moduli.k);
    truth_mu.push_back(s.moduli.mu);
  }
  if (is_constant(truth_k) || is_constant(truth_mu)) {
    throw InvalidArgument("labels have zero variance; R^2 is undefined");
  }

  std::vector<double> grid(alpha_grid.begin(), alpha_grid.end());
  std::sort(grid.begin(), grid.end());

  AspectRatioFit best;
  double best_score = -std::numeric_limits<double>::infinity();
  std::vector<double> pred_k(samples.size()), pred_mu(samples.size());
  for (double alpha : grid) {
    DemParams p = base;
    p.aspect_ratio = alpha;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const auto m = dem_moduli(p, samples[i].phi);
      pred_k[i] = m.k;
      pred_mu[i] = m.mu;
    }
    const double rk = r2(pred_k, truth_k);
    const double rm = r2(pred_mu, truth_mu);
    const double score = 0.5 * (rk + rm);
    if (score > best_score) {
      best_score = score;
      best = {alpha, rk, rm};
    }
  }
  return best;
}

}  // namespace rockgraph
