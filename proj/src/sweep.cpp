#include "kamlattice/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "kamlattice/parallel.hpp"

namespace kamlattice {

void Axis::validate(const char* name) const {
  const std::string n(name);
  if (count < 2) throw ConfigError("axis " + n + ": count must be at least 2");
  if (!(max > min)) throw ConfigError("axis " + n + ": max must exceed min");
  if (scale == AxisScale::log && !(min > 0.0)) throw ConfigError("axis " + n + ": log axis needs min > 0");
}

std::vector<double> Axis::values() const {
  std::vector<double> v(count);
  for (int i = 0; i < count; ++i) {
    const double t = static_cast<double>(i) / (count - 1);
    if (scale == AxisScale::log) {
      const double l0 = std::log10(min);
      const double l1 = std::log10(max);
      v[i] = std::pow(10.0, l0 + t * (l1 - l0));
    } else {
      v[i] = min + t * (max - min);
    }
  }
  v.front() = min;
  v.back() = max;
  return v;
}

double Axis::step() const {
  if (scale == AxisScale::log) return (std::log10(max) - std::log10(min)) / (count - 1);
  return (max - min) / (count - 1);
}

void GridSpec::validate() const {
  M.validate("M");
  b2.validate("b2");
  gamma.validate("gamma");
  d.validate("d");
  nu.validate("nu");
  if (!(b2.min > 0.0) || !(gamma.min > 0.0) || !(d.min > 0.0)) {
    throw ConfigError("b2, gamma and d axes must be positive");
  }
  if (nu.min < 0.0 || nu.max > nu_max() * (1.0 + 1e-15)) {
    throw ConfigError("nu axis must lie in [0, 2^{-7/3}/9]");
  }
}

std::size_t GridSpec::size() const {
  return static_cast<std::size_t>(M.count) * b2.count * gamma.count * d.count * nu.count;
}

GridSpec GridSpec::cube(int nM, int nb2, int ngamma, int nd, int nnu) {
  GridSpec g;
  g.M = {1e6, 1e18, nM, AxisScale::log};
  g.b2 = {1e-6, 1.0, nb2, AxisScale::log};
  g.gamma = {1e-3, 10.0, ngamma, AxisScale::log};
  g.d = {1e-3, 10.0, nd, AxisScale::log};
  g.nu = {1e-3, nu_max(), nnu, AxisScale::linear};
  return g;
}

FrontierPoint sweep_slice(double M, const std::vector<double>& b2, const std::vector<double>& gamma,
                          const std::vector<double>& d, const std::vector<double>& nu,
                          SweepStats* stats) {
  const CertificateContext ctx = certificate_context(M);
  FrontierPoint best;
  best.M = M;
  long evals = 0;
  long skipped = 0;
  CertificateInput in;
  in.M = M;
  for (double vb : b2) {
    in.b2 = vb;
    for (double vg : gamma) {
      if (vg > kGammaMax) {
        skipped += static_cast<long>(d.size() * nu.size());
        continue;
      }
      in.gamma = vg;
      for (double vd : d) {
        in.d = vd;
        for (double vn : nu) {
          in.nu = vn;
          ++evals;
          const TorusCertificate c = evaluate_fast(ctx, in);
          if (!c.pass) continue;
          ++best.pass_count;
          if (c.delta > best.delta_max) {
            best.delta_max = c.delta;
            best.b2 = vb;
            best.gamma = vg;
            best.d = vd;
            best.nu = vn;
          }
        }
      }
    }
  }
  if (stats) {
    stats->evaluations += evals;
    stats->skipped += skipped;
  }
  return best;
}

std::vector<FrontierPoint> run(const GridSpec& grid, SweepStats* stats) {
  grid.validate();
  const auto Ms = grid.M.values();
  const auto b2 = grid.b2.values();
  const auto gamma = grid.gamma.values();
  const auto d = grid.d.values();
  const auto nu = grid.nu.values();
  std::vector<FrontierPoint> out(Ms.size());
  std::vector<SweepStats> per(Ms.size());
  parallel_chunks(Ms.size(), 1, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) out[i] = sweep_slice(Ms[i], b2, gamma, d, nu, &per[i]);
  });
  if (stats) {
    for (const auto& s : per) {
      stats->evaluations += s.evaluations;
      stats->skipped += s.skipped;
    }
  }
  return out;
}

namespace {

std::vector<double> local_axis(const Axis& a, double centre, double half_width, int count) {
  const int K = std::max(1, count / 2);
  std::vector<double> v;
  v.reserve(2 * K + 1);
  for (int k = -K; k <= K; ++k) {
    double x;
    if (k == 0) {
      x = centre;
    } else if (a.scale == AxisScale::log) {
      x = centre * std::pow(10.0, half_width * k / K);
    } else {
      x = centre + half_width * k / K;
    }
    if (k != 0 && (x < a.min || x > a.max)) continue;
    v.push_back(x);
  }
  return v;
}

}  // namespace

RefineResult refine_around(const GridSpec& grid, const FrontierPoint& centre, double half_b2,
                           double half_gamma, double half_d, double half_nu) {
  RefineResult r;
  r.point = centre;
  if (centre.pass_count == 0) return r;
  r.b2 = local_axis(grid.b2, centre.b2, half_b2, grid.b2.count);
  r.gamma = local_axis(grid.gamma, centre.gamma, half_gamma, grid.gamma.count);
  r.d = local_axis(grid.d, centre.d, half_d, grid.d.count);
  r.nu = local_axis(grid.nu, centre.nu, half_nu, grid.nu.count);
  FrontierPoint p = sweep_slice(centre.M, r.b2, r.gamma, r.d, r.nu);
  r.point = p;
  r.gain = centre.delta_max > 0.0 ? p.delta_max / centre.delta_max : 1.0;
  return r;
}

RefineResult refine(const GridSpec& grid, const std::vector<FrontierPoint>& frontier,
                    std::size_t M_index, double zoom) {
  if (frontier.empty()) throw DomainError("refine needs a nonempty frontier");
  if (M_index >= frontier.size()) throw DomainError("M index out of range");
  if (!(zoom >= 1.0)) throw DomainError("zoom must be >= 1");
  grid.validate();
  return refine_around(grid, frontier[M_index], grid.b2.step() / zoom, grid.gamma.step() / zoom,
                       grid.d.step() / zoom, grid.nu.step() / zoom);
}

}  // namespace kamlattice
