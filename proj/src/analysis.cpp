#include "kamlattice/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "kamlattice/actionangle.hpp"

namespace kamlattice {

namespace {

struct BatchOptions {
  long n = 0;
  long max_iterates = 0;  // > n: undecided regular-looking orbits are continued
  int steps = 0;
  double rotation_tol = 1e-7;
  double chaos_threshold = 1e-3;
  kernels::Kernel kernel = kernels::Kernel::scalar;
};

// Weighted Birkhoff sums for windows n/2, n, 2n, 4n, ... and the indicator
// fit over (n/2, n].
struct Accumulator {
  double prev = 0.0;
  std::vector<double> wsum;
  double log_growth = 0.0;
  double fit_y = 0.0;
  double fit_ky = 0.0;
};

struct Windows {
  std::vector<long> length;
  std::vector<double> norm;
  double fit_n = 0.0, fit_k = 0.0, fit_kk = 0.0;
};

double window_average(const Accumulator& a, const Windows& w, std::size_t i) {
  return a.wsum[i] / w.norm[i];
}

std::vector<OrbitSummary> run_batch(const NormalizedSystem& sys, std::span<const PhaseState> seeds,
                                    const BatchOptions& o,
                                    std::vector<std::vector<PhaseState>>* record) {
  const std::size_t count = seeds.size();
  std::vector<OrbitSummary> out(count);
  if (count == 0) return out;
  const long n = o.n;
  const long half = n / 2;
  Windows win;
  win.length.push_back(half);
  for (long L = n; L <= std::max(n, o.max_iterates); L *= 2) win.length.push_back(L);
  const long total = win.length.back();
  win.norm.assign(win.length.size(), 0.0);
  for (long k = 1; k <= total; ++k) {
    for (std::size_t i = 0; i < win.length.size(); ++i) {
      if (k <= win.length[i]) win.norm[i] += birkhoff_weight(static_cast<double>(k) / win.length[i]);
    }
    if (k > half && k <= n) {
      win.fit_n += 1.0;
      win.fit_k += static_cast<double>(k);
      win.fit_kk += static_cast<double>(k) * static_cast<double>(k);
    }
  }

  std::vector<Accumulator> acc(count);
  for (std::size_t j = 0; j < count; ++j) {
    acc[j].wsum.assign(win.length.size(), 0.0);
    out[j].max_abs_R = std::abs(seeds[j].R);
  }
  if (record) record->assign(count, {});

  // Advances the lanes listed in `ids` from period k0 to k1 on a fresh ensemble.
  auto advance = [&](const std::vector<std::size_t>& ids, const std::vector<PhaseState>& start,
                     long k0, long k1, bool tangent) {
    Ensemble ens(sys, o.steps, start, tangent ? 1 : 0, o.kernel);
    for (std::size_t m = 0; m < ids.size(); ++m) acc[ids[m]].prev = ens.lift(m);
    for (long k = k0 + 1; k <= k1; ++k) {
      ens.step();
      const bool late = k > half && k <= n;
      for (std::size_t m = 0; m < ids.size(); ++m) {
        const std::size_t j = ids[m];
        OrbitSummary& s = out[j];
        if (ens.escaped(m)) {
          if (s.bounded) {
            s.bounded = false;
            s.escape_period = k0 + ens.escape_period(m);
            s.iterates_used = s.escape_period;
          }
          continue;
        }
        Accumulator& a = acc[j];
        const double lift = ens.lift(m);
        const double inc = (lift - a.prev) / kTwoPi;
        a.prev = lift;
        for (std::size_t i = 0; i < win.length.size(); ++i) {
          if (k < win.length[i]) a.wsum[i] += birkhoff_weight(static_cast<double>(k) / win.length[i]) * inc;
        }
        s.max_abs_R = std::max(s.max_abs_R, std::abs(ens.R(m)));
        if (tangent) {
          const double vR = ens.tangent_R(0, m);
          const double vS = ens.tangent_S(0, m);
          const double norm = std::hypot(vR, vS);
          a.log_growth += std::log(norm);
          ens.set_tangent(0, m, vR / norm, vS / norm);
          if (late) {
            a.fit_y += a.log_growth;
            a.fit_ky += static_cast<double>(k) * a.log_growth;
          }
        }
        if (record) (*record)[j].push_back({ens.R(m), ens.S(m), 0.0});
      }
    }
    std::vector<PhaseState> end(ids.size());
    for (std::size_t m = 0; m < ids.size(); ++m) end[m] = {ens.R(m), ens.S(m), 0.0};
    return end;
  };

  std::vector<std::size_t> ids(count);
  for (std::size_t j = 0; j < count; ++j) ids[j] = j;
  std::vector<PhaseState> state(seeds.begin(), seeds.end());
  state = advance(ids, state, 0, n, true);

  const double den = win.fit_n * win.fit_kk - win.fit_k * win.fit_k;
  for (std::size_t j = 0; j < count; ++j) {
    OrbitSummary& s = out[j];
    if (!s.bounded) {
      s.chaos_indicator =
          std::max(0.0, acc[j].log_growth / static_cast<double>(std::max(1L, s.iterates_used - 1)));
      continue;
    }
    s.iterates_used = n;
    if (n >= 4 && den > 0.0) {
      s.chaos_indicator =
          std::max(0.0, (win.fit_n * acc[j].fit_ky - win.fit_k * acc[j].fit_y) / den);
    }
    if ((seeds[j].R == 0.0 && seeds[j].S == 0.0) || n < 4) continue;
    const double full = window_average(acc[j], win, 1);
    s.rotation_number = full;
    s.rotation_converged = std::abs(full - window_average(acc[j], win, 0)) <= o.rotation_tol;
  }

  // Continue orbits that look regular but whose rotation test is undecided.
  for (std::size_t w = 2; w < win.length.size(); ++w) {
    std::vector<std::size_t> next;
    std::vector<PhaseState> start;
    for (std::size_t m = 0; m < ids.size(); ++m) {
      const OrbitSummary& s = out[ids[m]];
      if (s.bounded && s.rotation_number && !s.rotation_converged &&
          s.chaos_indicator < o.chaos_threshold) {
        next.push_back(ids[m]);
        start.push_back(state[m]);
      }
    }
    if (next.empty()) break;
    state = advance(next, start, win.length[w - 1], win.length[w], false);
    ids = next;
    for (std::size_t j : ids) {
      OrbitSummary& s = out[j];
      if (!s.bounded) {
        s.rotation_number.reset();
        s.rotation_converged = false;
        continue;
      }
      const double full = window_average(acc[j], win, w);
      s.rotation_number = full;
      s.rotation_converged = std::abs(full - window_average(acc[j], win, w - 1)) <= o.rotation_tol;
      s.iterates_used = win.length[w];
    }
  }
  return out;
}

std::vector<double> radial_seeds(const RadialScan& scan) {
  std::vector<double> r(scan.seeds);
  const double l0 = std::log(scan.R_min);
  const double l1 = std::log(scan.R_max);
  const double dl = (l1 - l0) / (scan.seeds - 1);
  std::mt19937_64 rng(scan.rng_seed);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (int i = 0; i < scan.seeds; ++i) {
    double l = l0 + i * dl;
    if (scan.rng_seed != 0 && i > 0 && i + 1 < scan.seeds) l += u(rng) * dl;
    r[i] = std::exp(l);
  }
  r.front() = scan.R_min;
  r.back() = scan.R_max;
  return r;
}

std::vector<OrbitSummary> classify_radii(const NormalizedSystem& sys, const std::vector<double>& radii,
                                         int steps, const ClassifyConfig& c) {
  std::vector<PhaseState> seeds;
  seeds.reserve(radii.size());
  for (double r : radii) seeds.push_back({r, 0.0, 0.0});
  return classify(sys, seeds, c, steps);
}

}  // namespace

double birkhoff_weight(double t) {
  if (!(t > 0.0 && t < 1.0)) return 0.0;
  return std::exp(-1.0 / (t * (1.0 - t)));
}

int steps_for_radius(const NormalizedSystem& sys, double R_max, int base) {
  const double z2s = sys.z2_sup();
  const double R2 = R_max * R_max;
  const double h = sys.z4 * R2 * R2 + z2s * R2;
  double rev = std::sqrt(2.0 * z2s) / kTwoPi;
  if (h > 0.0) rev = std::max(rev, K0_and_derivatives(sys.z4, action_from_energy(sys.z4, h)).dK0);
  int steps = base;
  while (steps < 48.0 * rev && steps < (1 << 26)) steps *= 2;
  return steps;
}

std::vector<OrbitSummary> summarize(const NormalizedSystem& sys, std::span<const PhaseState> seeds,
                                    long n, int steps_per_period, double rotation_tol,
                                    kernels::Kernel kernel) {
  BatchOptions o;
  o.n = n;
  o.max_iterates = n;
  o.steps = steps_per_period;
  o.rotation_tol = rotation_tol;
  o.kernel = kernel;
  return run_batch(sys, seeds, o, nullptr);
}

std::vector<OrbitSummary> classify(const NormalizedSystem& sys, std::span<const PhaseState> seeds,
                                   const ClassifyConfig& c, int steps_per_period) {
  if (c.iterates < 4) throw DomainError("classification needs at least 4 iterates");
  BatchOptions o;
  o.n = c.iterates;
  o.max_iterates = c.max_iterates;
  o.rotation_tol = c.rotation_tol;
  o.chaos_threshold = c.chaos_threshold;
  o.kernel = kernels::default_kernel();
  const int fixed = steps_per_period > 0 ? steps_per_period : c.steps_per_period;
  if (fixed > 0) {
    o.steps = fixed;
    return run_batch(sys, seeds, o, nullptr);
  }
  // Resolution per group of four seeds in radius order, redone for orbits
  // whose excursion outruns it.
  std::vector<std::size_t> order(seeds.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  auto radius = [&](std::size_t i) { return std::hypot(seeds[i].R, seeds[i].S); };
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return radius(a) < radius(b); });
  std::vector<OrbitSummary> out(seeds.size());
  std::vector<std::size_t> pending = order;
  for (int pass = 0; pass < 3 && !pending.empty(); ++pass) {
    std::vector<std::size_t> again;
    for (std::size_t g = 0; g < pending.size(); g += 4) {
      const std::size_t e = std::min(pending.size(), g + 4);
      double R = 0.0;
      for (std::size_t k = g; k < e; ++k) {
        const std::size_t i = pending[k];
        R = std::max({R, radius(i), pass > 0 ? out[i].max_abs_R : 0.0});
      }
      o.steps = steps_for_radius(sys, R);
      std::vector<PhaseState> batch;
      for (std::size_t k = g; k < e; ++k) batch.push_back(seeds[pending[k]]);
      const auto sums = run_batch(sys, batch, o, nullptr);
      for (std::size_t k = g; k < e; ++k) {
        const std::size_t i = pending[k];
        out[i] = sums[k - g];
        if (out[i].bounded && steps_for_radius(sys, out[i].max_abs_R) > o.steps) again.push_back(i);
      }
    }
    std::stable_sort(again.begin(), again.end(), [&](std::size_t a, std::size_t b) {
      return out[a].max_abs_R < out[b].max_abs_R;
    });
    pending = std::move(again);
  }
  return out;
}

OrbitSummary rotation_number(const NormalizedSystem& sys, const PhaseState& s0, long n,
                             const IntegratorConfig& cfg) {
  cfg.validate();
  if (s0.xi != 0.0) throw DomainError("seeds must lie on the section xi = 0");
  return summarize(sys, std::span<const PhaseState>(&s0, 1), n, cfg.steps_per_period).front();
}

ChaosIndicator chaos_indicator(const NormalizedSystem& sys, const PhaseState& s0, long n,
                               const IntegratorConfig& cfg) {
  const OrbitSummary s = rotation_number(sys, s0, n, cfg);
  return {s.chaos_indicator, !s.bounded};
}

InnermostResult innermost_invariant_radius(const NormalizedSystem& sys, const RadialScan& scan) {
  if (!(scan.R_min > 0.0) || !(scan.R_max > scan.R_min) || scan.seeds < 2) {
    throw DomainError("radial scan needs 0 < R_min < R_max and at least two seeds");
  }
  if (!(scan.rel_tol > 0.0)) throw DomainError("relative tolerance must be positive");
  const ClassifyConfig& c = scan.classify;
  InnermostResult res;
  res.steps_per_period =
      c.steps_per_period > 0 ? c.steps_per_period : steps_for_radius(sys, scan.R_max);
  res.radii = radial_seeds(scan);
  res.summaries = classify_radii(sys, res.radii, c.steps_per_period, c);

  if (!res.summaries.back().regular(c)) {
    std::ostringstream msg;
    msg << "no regular orbit at the top of the scan (R = " << res.radii.back() << "): bounded="
        << res.summaries.back().bounded << " indicator=" << res.summaries.back().chaos_indicator
        << " converged=" << res.summaries.back().rotation_converged;
    throw NumericalError(msg.str());
  }
  int last_bad = -1;
  for (int i = 0; i < static_cast<int>(res.radii.size()); ++i) {
    if (!res.summaries[i].regular(c)) last_bad = i;
  }
  if (last_bad < 0) {
    res.R_star = res.radii.front();
    return res;
  }
  res.found_irregular = true;
  double lo = res.radii[last_bad];
  double hi = res.radii[last_bad + 1];
  while (hi / lo - 1.0 > scan.rel_tol) {
    std::vector<double> probe(4);
    const double ratio = std::pow(hi / lo, 1.0 / 5.0);
    for (int i = 0; i < 4; ++i) probe[i] = lo * std::pow(ratio, i + 1);
    const auto sums = classify_radii(sys, probe, c.steps_per_period, c);
    double new_lo = lo;
    double new_hi = hi;
    for (int i = 0; i < 4; ++i) {
      if (!sums[i].regular(c)) new_lo = probe[i];
    }
    for (int i = 3; i >= 0; --i) {
      if (probe[i] > new_lo && sums[i].regular(c)) new_hi = probe[i];
    }
    for (int i = 0; i < 4; ++i) {
      res.radii.push_back(probe[i]);
      res.summaries.push_back(sums[i]);
    }
    lo = new_lo;
    hi = new_hi;
  }
  res.bracket_low = lo;
  res.R_star = hi;
  return res;
}

ScalingFit fit_loglog(std::vector<ScalingPoint> points) {
  if (points.size() < 2) throw DomainError("a fit needs at least two points");
  ScalingFit fit;
  fit.points = std::move(points);
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double n = static_cast<double>(fit.points.size());
  for (const auto& p : fit.points) {
    const double x = std::log10(p.V1);
    const double y = std::log10(p.R_star);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  fit.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  fit.intercept = (sy - fit.slope * sx) / n;
  for (const auto& p : fit.points) {
    const double r = std::log10(p.R_star) - (fit.intercept + fit.slope * std::log10(p.V1));
    fit.residual = std::max(fit.residual, std::abs(r));
  }
  return fit;
}

ScalingPoint scaling_point(double V1, const ScalingStudyConfig& cfg) {
  if (!(V1 > 0.0)) throw DomainError("V1 values must be positive");
  if (!(cfg.lo > 0.0) || !(cfg.hi > cfg.lo)) throw DomainError("scan needs 0 < lo < hi");
  LatticeSystem raw;
  raw.alpha1 = cfg.alpha1;
  raw.alpha3 = cfg.alpha3;
  raw.kappa_ref = cfg.kappa;
  raw.modes.push_back({V1, Rational(1)});
  const NormalizedSystem sys = normalize(raw);
  RadialScan scan = cfg.scan;
  const double unit = std::sqrt(1.0 + V1);
  scan.R_min = cfg.lo * unit;
  scan.R_max = cfg.hi * unit;
  const auto r = innermost_invariant_radius(sys, scan);
  return {V1, r.R_star, r.found_irregular};
}

ScalingFit threshold_scaling_study(std::span<const double> V1_list, const ScalingStudyConfig& cfg) {
  if (V1_list.size() < 2) throw DomainError("scaling study needs at least two V1 values");
  for (std::size_t i = 0; i < V1_list.size(); ++i) {
    if (i > 0 && !(V1_list[i] > V1_list[i - 1])) throw DomainError("V1 values must increase");
    if (!(V1_list[i] > 0.0)) throw DomainError("V1 values must be positive");
  }
  std::vector<ScalingPoint> pts;
  for (double V1 : V1_list) pts.push_back(scaling_point(V1, cfg));
  return fit_loglog(std::move(pts));
}

std::vector<PortraitOrbit> phase_portrait(const NormalizedSystem& sys,
                                          std::span<const PhaseState> seeds, long n,
                                          int steps_per_period) {
  std::vector<std::vector<PhaseState>> rec;
  BatchOptions o;
  o.n = n;
  o.max_iterates = n;
  o.steps = steps_per_period;
  o.kernel = kernels::default_kernel();
  const auto sums = run_batch(sys, seeds, o, &rec);
  std::vector<PortraitOrbit> out(seeds.size());
  for (std::size_t j = 0; j < seeds.size(); ++j) {
    out[j].seed = seeds[j];
    out[j].iterates = std::move(rec[j]);
    out[j].summary = sums[j];
  }
  return out;
}

}  // namespace kamlattice
