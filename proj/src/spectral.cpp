#include "hypbrw/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <fmt/format.h>

#include "hypbrw/errors.hpp"
#include "hypbrw/numeric.hpp"

namespace hypbrw {

Automaton::Automaton(const GroupModel& g) : group_(g) {}

int Automaton::next(int state, Letter s) const {
  if (s >= group_.alphabet_size() || state < 0 || state >= num_states()) return -1;
  if (state == initial()) return 1 + s;
  const auto last = static_cast<Letter>(state - 1);
  if (s == group_.inverse(last)) return -1;
  return 1 + s;
}

int Automaton::out_degree(int state) const {
  int n = 0;
  for (int s = 0; s < group_.alphabet_size(); ++s)
    if (next(state, static_cast<Letter>(s)) >= 0) ++n;
  return n;
}

std::uint64_t Automaton::count_paths(int n) const {
  std::vector<std::uint64_t> cur(static_cast<std::size_t>(num_states()), 0), nxt;
  cur[initial()] = 1;
  for (int k = 0; k < n; ++k) {
    nxt.assign(cur.size(), 0);
    for (int q = 0; q < num_states(); ++q) {
      if (cur[static_cast<std::size_t>(q)] == 0) continue;
      for (int s = 0; s < group_.alphabet_size(); ++s) {
        const int t = next(q, static_cast<Letter>(s));
        if (t >= 0) nxt[static_cast<std::size_t>(t)] += cur[static_cast<std::size_t>(q)];
      }
    }
    cur.swap(nxt);
  }
  return std::accumulate(cur.begin(), cur.end(), std::uint64_t{0});
}

AutomatonAudit audit_automaton(const Automaton& a, int radius) {
  const auto& g = a.group();
  while (radius > 1 && g.ball_size(radius) > 2'000'000) --radius;
  AutomatonAudit out;
  out.radius = radius;

  auto reach = [&](int from, bool skip_initial) {
    std::vector<char> seen(static_cast<std::size_t>(a.num_states()), 0);
    std::vector<int> stack{from};
    seen[static_cast<std::size_t>(from)] = 1;
    while (!stack.empty()) {
      const int q = stack.back();
      stack.pop_back();
      for (int s = 0; s < g.alphabet_size(); ++s) {
        const int t = a.next(q, static_cast<Letter>(s));
        if (t < 0 || seen[static_cast<std::size_t>(t)] || (skip_initial && t == Automaton::initial())) continue;
        seen[static_cast<std::size_t>(t)] = 1;
        stack.push_back(t);
      }
    }
    return seen;
  };
  const auto from_init = reach(Automaton::initial(), false);
  out.accessible = std::all_of(from_init.begin(), from_init.end(), [](char c) { return c != 0; });
  out.strongly_connected = true;
  for (int q = 1; q < a.num_states(); ++q) {
    const auto seen = reach(q, true);
    for (int t = 1; t < a.num_states(); ++t)
      if (!seen[static_cast<std::size_t>(t)]) out.strongly_connected = false;
  }

  // Enumerate accepted words level by level and compare with spheres.
  out.geodesic = true;
  out.bijective = true;
  std::vector<std::pair<std::vector<Letter>, int>> level{{{}, Automaton::initial()}};
  for (int n = 1; n <= radius; ++n) {
    std::vector<std::pair<std::vector<Letter>, int>> nxt;
    for (const auto& [w, q] : level) {
      for (int s = 0; s < g.alphabet_size(); ++s) {
        const int t = a.next(q, static_cast<Letter>(s));
        if (t < 0) continue;
        auto v = w;
        v.push_back(static_cast<Letter>(s));
        nxt.emplace_back(std::move(v), t);
      }
    }
    level = std::move(nxt);
    std::set<Word> elements;
    for (const auto& [w, q] : level) {
      std::vector<int> ids(w.begin(), w.end());
      Word e = reduce(g, ids);
      if (e.size() != w.size()) out.geodesic = false;
      elements.insert(std::move(e));
    }
    if (elements.size() != level.size() || level.size() != g.sphere_size(n)) out.bijective = false;
  }
  return out;
}

Automaton build_automaton(const GroupModel& g) {
  Automaton a(g);
  const auto audit = audit_automaton(a);
  if (!audit.accessible || !audit.geodesic || !audit.bijective || !audit.strongly_connected)
    throw Error(fmt::format("automaton for {} failed its audit", g.describe()));
  return a;
}

CylinderPotential build_potential(const GreenTable& g, int horizon) {
  if (horizon < 0) throw InvalidArgument("horizon must be nonnegative");
  if (horizon + 1 > g.max_radius())
    throw InvalidArgument(fmt::format("horizon {} needs Green values to radius {}", horizon, horizon + 1));
  const auto& group = g.group();
  CylinderPotential p;
  p.horizon = horizon;
  p.r = g.r();
  p.G_ee = g.value(Word{});
  p.windows = sphere_words(group, horizon + 1);
  for (std::size_t i = 0; i < p.windows.size(); ++i) {
    const Word& u = p.windows[i];
    const Word shifted(std::vector<Letter>(u.begin() + 1, u.end()));
    const double gu = g.value(u);
    const double gs = g.value(shifted);
    if (!(gu > 0.0 && gs > 0.0)) throw Error("Green value vanished while building the potential");
    p.phi.push_back(std::log(gu) - std::log(gs));
    p.terminal.push_back(gu / p.G_ee);
    p.index.emplace(u, static_cast<int>(i));
  }
  return p;
}

void TransferMatrix::apply(const std::vector<double>& x, std::vector<double>& y) const {
  y.assign(static_cast<std::size_t>(dim), 0.0);
  for (int u = 0; u < dim; ++u) {
    double s = 0.0;
    for (const auto& [v, w] : rows[static_cast<std::size_t>(u)]) s += w * x[static_cast<std::size_t>(v)];
    y[static_cast<std::size_t>(u)] = s;
  }
}

void TransferMatrix::apply_transpose(const std::vector<double>& x, std::vector<double>& y) const {
  y.assign(static_cast<std::size_t>(dim), 0.0);
  for (int u = 0; u < dim; ++u)
    for (const auto& [v, w] : rows[static_cast<std::size_t>(u)])
      y[static_cast<std::size_t>(v)] += w * x[static_cast<std::size_t>(u)];
}

TransferMatrix transfer_matrix(const CylinderPotential& phi, const Automaton& a) {
  TransferMatrix m;
  m.dim = static_cast<int>(phi.windows.size());
  m.rows.resize(phi.windows.size());
  const auto& g = a.group();
  for (std::size_t i = 0; i < phi.windows.size(); ++i) {
    const Word& u = phi.windows[i];
    const int state = 1 + u.back();
    for (int s = 0; s < g.alphabet_size(); ++s) {
      if (a.next(state, static_cast<Letter>(s)) < 0) continue;
      std::vector<Letter> v(u.begin() + 1, u.end());
      v.push_back(static_cast<Letter>(s));
      auto it = phi.index.find(Word(std::move(v)));
      if (it == phi.index.end()) throw Error("transfer matrix: successor window missing");
      m.rows[i].emplace_back(it->second, std::exp(phi.phi[i]));
    }
  }
  return m;
}

namespace {

std::vector<std::vector<int>> adjacency(const TransferMatrix& m, bool transpose) {
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(m.dim));
  for (int u = 0; u < m.dim; ++u)
    for (const auto& [v, w] : m.rows[static_cast<std::size_t>(u)]) {
      if (w <= 0.0) continue;
      if (transpose)
        adj[static_cast<std::size_t>(v)].push_back(u);
      else
        adj[static_cast<std::size_t>(u)].push_back(v);
    }
  return adj;
}

std::vector<int> bfs_levels(const std::vector<std::vector<int>>& adj, int from) {
  std::vector<int> level(adj.size(), -1);
  std::vector<int> queue{from};
  level[static_cast<std::size_t>(from)] = 0;
  for (std::size_t i = 0; i < queue.size(); ++i) {
    const int u = queue[i];
    for (int v : adj[static_cast<std::size_t>(u)]) {
      if (level[static_cast<std::size_t>(v)] >= 0) continue;
      level[static_cast<std::size_t>(v)] = level[static_cast<std::size_t>(u)] + 1;
      queue.push_back(v);
    }
  }
  return level;
}

double norm1(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += std::abs(v);
  return s;
}

void apply_power(const TransferMatrix& m, int p, bool transpose, std::vector<double>& x, std::vector<double>& tmp) {
  for (int i = 0; i < p; ++i) {
    if (transpose)
      m.apply_transpose(x, tmp);
    else
      m.apply(x, tmp);
    x.swap(tmp);
  }
}

/// Dominant eigenpair of M^p by power iteration from the all-ones vector.
std::pair<double, std::vector<double>> dominant(const TransferMatrix& m, int p, bool transpose,
                                                const PowerOptions& opt, int& iterations) {
  std::vector<double> x(static_cast<std::size_t>(m.dim), 1.0 / m.dim), tmp;
  double lambda = 0.0;
  for (int it = 1; it <= opt.max_iterations; ++it) {
    apply_power(m, p, transpose, x, tmp);
    const double s = norm1(x);
    if (!(s > 0.0)) throw NotConverged("power iteration collapsed to zero");
    for (double& v : x) v /= s;
    const double prev = lambda;
    lambda = s;
    iterations = it;
    if (it > 2 && std::abs(lambda - prev) <= opt.tol * lambda) return {lambda, x};
  }
  throw NotConverged(fmt::format("power iteration did not converge in {} iterations", opt.max_iterations));
}

}  // namespace

bool strongly_connected(const TransferMatrix& m) {
  if (m.dim == 0) return false;
  const auto f = bfs_levels(adjacency(m, false), 0);
  const auto b = bfs_levels(adjacency(m, true), 0);
  for (int i = 0; i < m.dim; ++i)
    if (f[static_cast<std::size_t>(i)] < 0 || b[static_cast<std::size_t>(i)] < 0) return false;
  return true;
}

int graph_period(const TransferMatrix& m) {
  const auto adj = adjacency(m, false);
  const auto level = bfs_levels(adj, 0);
  int g = 0;
  for (int u = 0; u < m.dim; ++u) {
    if (level[static_cast<std::size_t>(u)] < 0) continue;
    for (int v : adj[static_cast<std::size_t>(u)])
      if (level[static_cast<std::size_t>(v)] >= 0)
        g = std::gcd(g, std::abs(level[static_cast<std::size_t>(u)] + 1 - level[static_cast<std::size_t>(v)]));
  }
  return g == 0 ? 1 : g;
}

PressureResult pressure(const TransferMatrix& m, const PowerOptions& opt) {
  PressureResult out;
  out.irreducible = strongly_connected(m);
  if (!out.irreducible) throw Error("transfer matrix is not irreducible");
  out.period = graph_period(m);
  const int p = out.period;
  int it_r = 0, it_l = 0;
  auto [lr, v] = dominant(m, p, false, opt, it_r);
  auto [ll, w] = dominant(m, p, true, opt, it_l);
  out.iterations = std::max(it_r, it_l);
  const double lambda = std::pow(lr, 1.0 / p);
  out.left_right_diff = std::abs(lr - ll) / lr;
  out.pressure = std::log(lambda);
  out.H = lambda;
  out.dominant_vector = v;
  out.left_vector = w;

  // Second eigenvalue: iterate with the dominant component projected out.
  double wv = 0.0;
  for (int i = 0; i < m.dim; ++i) wv += w[static_cast<std::size_t>(i)] * v[static_cast<std::size_t>(i)];
  std::vector<double> y(static_cast<std::size_t>(m.dim)), tmp;
  for (int i = 0; i < m.dim; ++i) y[static_cast<std::size_t>(i)] = std::sin(1.0 + 7.0 * i);
  auto project = [&](std::vector<double>& z) {
    double c = 0.0;
    for (int i = 0; i < m.dim; ++i) c += w[static_cast<std::size_t>(i)] * z[static_cast<std::size_t>(i)];
    c /= wv;
    for (int i = 0; i < m.dim; ++i) z[static_cast<std::size_t>(i)] -= c * v[static_cast<std::size_t>(i)];
  };
  project(y);
  double log_growth = 0.0;
  int counted = 0;
  constexpr int rounds = 200;
  for (int it = 0; it < rounds; ++it) {
    const double before = norm1(y);
    if (before < 1e-300) break;
    for (double& z : y) z /= before;
    m.apply(y, tmp);
    y.swap(tmp);
    project(y);
    const double after = norm1(y);
    if (it >= rounds / 2) {
      log_growth += std::log(std::max(after, 1e-300));
      ++counted;
    }
  }
  out.gap = counted > 0 ? std::exp(log_growth / counted) / lambda : 0.0;
  return out;
}

PressureResult pressure(const CylinderPotential& phi, const Automaton& a, const PowerOptions& opt) {
  return pressure(transfer_matrix(phi, a), opt);
}

double transfer_sphere_sum(const CylinderPotential& phi, const TransferMatrix& m, int n) {
  const int h = phi.horizon;
  if (n < h + 1) throw InvalidArgument(fmt::format("transfer sum needs n >= h + 1 = {}", h + 1));
  std::vector<double> y = phi.terminal, tmp;
  for (int k = 0; k < n - h - 1; ++k) {
    m.apply(y, tmp);
    y.swap(tmp);
  }
  CompensatedSum s;
  for (double v : y) s += v;
  return phi.G_ee * s.value();
}

double verify_Hnr_identity(const GreenTable& g, const CylinderPotential& phi, const Automaton& a, int n) {
  // Below the horizon both sides are the same direct sum.
  if (n < phi.horizon + 1) return 0.0;
  if (n > g.max_radius()) throw InvalidArgument(fmt::format("Green table stops at radius {} < {}", g.max_radius(), n));
  const auto& group = g.group();
  double H = 0.0;
  if (g.isotropic()) {
    H = std::exp(group.log_sphere_size(n) + g.radial_engine().log_value(n));
  } else {
    CompensatedSum s;
    for_each_sphere_word(group, n, 1U << 24, [&](const Word& w) { s += g.value(w); });
    H = s.value();
  }
  const double T = transfer_sphere_sum(phi, transfer_matrix(phi, a), n);
  return std::abs(H - T) / H;
}

RefinedPressure refined_pressure(const StepDistribution& mu, double r, const SpectralRadiusEstimate& rho, int h0,
                                 double tol, int h_max) {
  if (h0 < 0 || h_max < h0) throw InvalidArgument("bad horizon range");
  // The killed ball Green function is biased near the boundary; keep a margin.
  const int margin = mu.is_isotropic() ? 0 : 6;
  const auto table = GreenTable::make(mu, r, h_max + 1 + margin, rho);
  const Automaton a = build_automaton(mu.group());
  RefinedPressure out;
  double prev = NAN;
  if (h0 > 0) prev = pressure(build_potential(table, h0 - 1), a).pressure;
  for (int h = h0; h <= h_max; ++h) {
    out.result = pressure(build_potential(table, h), a);
    out.horizon = h;
    out.by_horizon.push_back(out.result.pressure);
    out.last_change = std::isnan(prev) ? INFINITY : std::abs(out.result.pressure - prev);
    if (out.last_change < tol) {
      out.converged = true;
      break;
    }
    prev = out.result.pressure;
  }
  return out;
}

double pressure_growth(const StepDistribution& mu, double r, const SpectralRadiusEstimate& rho) {
  if (mu.is_isotropic()) {
    GreenOptions opt;
    opt.tol = 1e-14;
    const auto table = GreenTable::radial(mu, r, 1, opt);
    return pressure(build_potential(table, 0), build_automaton(mu.group())).H;
  }
  return refined_pressure(mu, r, rho).result.H;
}

std::vector<double> dyadic_grid(double r_c, double j_lo, double j_hi, double step) {
  std::vector<double> out;
  for (double j = j_lo; j <= j_hi + 1e-9; j += step) out.push_back(r_c - std::exp2(-j) * (r_c - 1.0));
  return out;
}

namespace {

void check_window(const std::vector<double>& grid, double r_c, const ExponentOptions& opt) {
  for (double r : grid) {
    if (!(r < r_c)) throw InvalidArgument(fmt::format("grid point {} is not below r_c = {}", r, r_c));
    if (r_c - r > opt.window_fraction * (r_c - 1.0) * (1.0 + 1e-9))
      throw InvalidArgument(fmt::format(
          "grid point r = {} lies outside the asymptotic window r_c - r <= {} (r_c - 1)", r, opt.window_fraction));
  }
}

ExponentFit fit_against_distance(double r_c, const std::vector<double>& grid, const std::vector<double>& y,
                                 const ExponentOptions& opt) {
  std::vector<double> lx, ly;
  ExponentFit f;
  f.r_c = r_c;
  f.r = grid;
  f.y = y;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(y[i] > 0.0) || !std::isfinite(y[i])) continue;
    lx.push_back(std::log(r_c - grid[i]));
    ly.push_back(std::log(y[i]));
  }
  if (lx.size() < opt.min_points)
    throw InvalidArgument(fmt::format("grid too coarse: {} usable points, need {}", lx.size(), opt.min_points));
  const auto line = fit_line(lx, ly);
  f.slope = line.slope;
  f.slope_se = line.slope_se;
  f.C_hat = std::exp(line.intercept);
  f.residual = line.rms;
  f.window_lo = r_c - *std::max_element(grid.begin(), grid.end());
  f.window_hi = r_c - *std::min_element(grid.begin(), grid.end());
  return f;
}

}  // namespace

ExponentFit critical_exponent_fit(const StepDistribution& mu, const SpectralRadiusEstimate& rho,
                                  const std::vector<double>& r_grid, const ExponentOptions& opt) {
  const double r_c = 1.0 / rho.inflated();
  check_window(r_grid, r_c, opt);
  const double H_c = pressure_growth(mu, r_c, rho);
  std::vector<double> y;
  for (double r : r_grid) y.push_back(H_c - pressure_growth(mu, r, rho));
  return fit_against_distance(r_c, r_grid, y, opt);
}

ExponentFit eta_exponent_fit(const StepDistribution& mu, const SpectralRadiusEstimate& rho,
                             const std::vector<double>& r_grid, const ExponentOptions& opt) {
  const double r_c = 1.0 / rho.inflated();
  check_window(r_grid, r_c, opt);
  std::vector<double> y;
  for (double r : r_grid) y.push_back(eta(mu, r, rho).value);
  return fit_against_distance(r_c, r_grid, y, opt);
}

}  // namespace hypbrw
