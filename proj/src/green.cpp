#include "hypbrw/green.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "hypbrw/errors.hpp"
#include "hypbrw/numeric.hpp"

namespace hypbrw {

void check_weight(double r, const SpectralRadiusEstimate& rho) {
  if (!(r >= 1.0)) throw InvalidArgument(fmt::format("weight r = {} is outside [1, 1/rho]", r));
  const double limit = 1.0 / rho.rho_hat;
  if (r > limit)
    throw RegimeError(fmt::format("weight r = {} exceeds the critical weight 1/rho = {:.9f}", r, limit));
}

// ---------------------------------------------------------------------------
// Radial bracket engine

RadialGreen::RadialGreen(const StepDistribution& mu, double r, int K, const GreenOptions& opt)
    : chain_(RadialChain::from(mu)), r_(r) {
  if (!(r > 0.0)) throw InvalidArgument(fmt::format("weight must be positive, got {}", r));
  if (K < 0) throw InvalidArgument("radius must be nonnegative");
  const double a = r * chain_.down();
  const double b = r * chain_.up();
  const double c = 1.0 - r * chain_.stay;
  const double t_star = 1.0 / std::sqrt(chain_.degree - 1.0);
  const auto Ku = static_cast<std::size_t>(K);

  auto step = [&](double t_next) {
    const double den = c - b * t_next;
    if (!(den > 0.0))
      throw RegimeError(fmt::format("weight r = {} is beyond the critical weight of the walk", r));
    return a / den;
  };

  long L = std::max<long>(64, 2L * K + 2);
  const long L_max = 1L << opt.max_log2_length;
  std::vector<double> lo(Ku), hi(Ku);
  double prev_worst = INFINITY;
  for (;;) {
    double tl = 0.0, th = t_star;
    for (long j = L - 1; j >= 0; --j) {
      tl = step(tl);
      th = step(th);
      if (th > t_star * (1.0 + 1e-14) || tl > th * (1.0 + 1e-14))
        throw RegimeError(fmt::format("weight r = {} is beyond the critical weight of the walk", r));
      if (static_cast<std::size_t>(j) < Ku) {
        lo[static_cast<std::size_t>(j)] = tl;
        hi[static_cast<std::size_t>(j)] = th;
      }
    }
    // tl, th now hold t_0 (u[1]/u[0]); close the recursion at the origin.
    const double s = r * (1.0 - chain_.stay);
    const double den_lo = c - s * tl, den_hi = c - s * th;
    if (!(den_hi > 0.0)) throw RegimeError(fmt::format("weight r = {} is beyond the critical weight", r));
    log_u0_lo_ = -std::log(den_lo);
    log_u0_hi_ = -std::log(den_hi);
    t_lo_ = lo;
    t_hi_ = hi;
    length_ = L;

    log_lo_.assign(Ku + 1, 0.0);
    log_hi_.assign(Ku + 1, 0.0);
    log_lo_[0] = log_u0_lo_;
    log_hi_[0] = log_u0_hi_;
    double worst = log_u0_hi_ - log_u0_lo_;
    for (std::size_t k = 0; k < Ku; ++k) {
      log_lo_[k + 1] = log_lo_[k] + std::log(t_lo_[k]);
      log_hi_[k + 1] = log_hi_[k] + std::log(t_hi_[k]);
      worst = std::max(worst, log_hi_[k + 1] - log_lo_[k + 1]);
    }
    converged_ = worst <= opt.tol;
    // Close to the critical weight the map is nearly neutral and rounding puts
    // a floor under the bracket width; stop once doubling no longer helps.
    if (!converged_ && worst < 1e-9 && worst > 0.5 * prev_worst) converged_ = true;
    if (converged_ || 2 * L > L_max) break;
    prev_worst = worst;
    L *= 2;
  }
}

double RadialGreen::log_lower(int k) const { return log_lo_.at(static_cast<std::size_t>(k)); }
double RadialGreen::log_upper(int k) const { return log_hi_.at(static_cast<std::size_t>(k)); }

double RadialGreen::log_value(int k) const {
  const double lo = log_lower(k), hi = log_upper(k);
  return lo + std::log(0.5 * (1.0 + std::exp(hi - lo)));
}

GreenValue RadialGreen::at(int k) const {
  if (k < 0 || k > max_radius())
    throw InvalidArgument(fmt::format("radius {} outside the computed range 0..{}", k, max_radius()));
  const double lo = std::exp(log_lower(k)), hi = std::exp(log_upper(k));
  return GreenValue{0.5 * (lo + hi), 0.5 * (hi - lo), false};
}

double RadialGreen::ratio(int k) const {
  const auto i = static_cast<std::size_t>(k);
  return 0.5 * (t_lo_.at(i) + t_hi_.at(i));
}

// ---------------------------------------------------------------------------
// Ball engine

BallGreen::BallGreen(const StepDistribution& mu, double r, int radius, const SpectralRadiusEstimate& rho,
                     const GreenOptions& opt)
    : op_(mu, radius, opt.budget), r_(r) {
  const double x = r * rho.inflated();
  const bool certified = x < 1.0;
  std::vector<CompensatedSum> acc(op_.size());
  std::vector<double> cur(op_.size(), 0.0), next;
  cur[0] = 1.0;
  double prev_mass = 1.0;
  CompensatedSum escaped;
  for (int n = 0;; ++n) {
    double mass = 0.0, peak = 0.0;
    for (std::size_t i = 0; i < cur.size(); ++i) {
      acc[i] += cur[i];
      mass += cur[i];
      peak = std::max(peak, cur[i]);
    }
    terms_ = n + 1;
    // sup_x r^m p_m(e, x) <= (r rho)^m bounds every later term.
    if (certified) {
      const double tail = std::pow(x, n + 1) / (1.0 - x);
      if (tail < opt.tol) {
        time_tail_ = tail;
        break;
      }
    } else if (n > 10) {
      const double q = mass / prev_mass;
      if (q < 1.0 && peak * q / (1.0 - q) < opt.tol) {
        time_tail_ = peak * q / (1.0 - q);
        heuristic_ = true;
        break;
      }
    }
    if (n + 1 >= opt.max_terms)
      throw BudgetExceeded(fmt::format("Green series at r = {} did not reach tolerance {} in {} terms", r, opt.tol,
                                       opt.max_terms));
    op_.push(cur, next);
    double kept = 0.0;
    for (double& v : next) {
      v *= r;
      kept += v;
    }
    escaped += r * mass - kept;
    prev_mass = mass;
    cur.swap(next);
  }
  values_.resize(op_.size());
  for (std::size_t i = 0; i < acc.size(); ++i) values_[i] = acc[i].value();
  escape_ = std::max(0.0, escaped.value());
}

GreenValue BallGreen::at(const Word& x) const {
  const WordId id = op_.find(x);
  if (id == no_word)
    throw InvalidArgument(fmt::format("word of length {} lies outside the Green ball of radius {}", x.size(),
                                      op_.radius()));
  // Mass that left the ball may come back; its effect is estimated, not bounded.
  const double v = values_[static_cast<std::size_t>(id)];
  return GreenValue{v, time_tail_ + escape_ * v, true};
}

// ---------------------------------------------------------------------------
// GreenTable

GreenTable GreenTable::radial(const StepDistribution& mu, double r, int K, const GreenOptions& opt) {
  GreenTable t(mu.group(), r);
  t.radial_ = std::make_shared<RadialGreen>(mu, r, K, opt);
  return t;
}

GreenTable GreenTable::ball(const StepDistribution& mu, double r, int radius, const SpectralRadiusEstimate& rho,
                            const GreenOptions& opt) {
  GreenTable t(mu.group(), r);
  t.ball_ = std::make_shared<BallGreen>(mu, r, radius, rho, opt);
  return t;
}

GreenTable GreenTable::make(const StepDistribution& mu, double r, int radius, const SpectralRadiusEstimate& rho,
                            const GreenOptions& opt) {
  if (mu.is_isotropic()) return radial(mu, r, radius, opt);
  return ball(mu, r, radius, rho, opt);
}

int GreenTable::max_radius() const { return radial_ ? radial_->max_radius() : ball_->radius(); }

GreenValue GreenTable::at(const Word& x) const {
  if (radial_) return radial_->at(static_cast<int>(x.size()));
  return ball_->at(x);
}

double GreenTable::value(const Word& x, const Word& y) const { return value(mul(group_, inverse(group_, x), y)); }

namespace {

int largest_radius_in_budget(const GroupModel& g, std::uint64_t budget) {
  int R = 0;
  while (g.ball_size(R + 1) <= budget) ++R;
  return R;
}

}  // namespace

GreenValue green(const StepDistribution& mu, double r, const Word& x, const SpectralRadiusEstimate& rho, double tol) {
  check_weight(r, rho);
  GreenOptions opt;
  if (mu.is_isotropic()) {
    opt.tol = std::max(tol, 1e-15);
    return RadialGreen(mu, r, static_cast<int>(x.size()), opt).at(static_cast<int>(x.size()));
  }
  opt.tol = tol;
  const int R = largest_radius_in_budget(mu.group(), opt.budget);
  if (static_cast<int>(x.size()) > R)
    throw BudgetExceeded(fmt::format("|x| = {} exceeds the largest ball radius {} within budget", x.size(), R));
  return BallGreen(mu, r, R, rho, opt).at(x);
}

// ---------------------------------------------------------------------------
// Time series

GreenSeries green_time_series(const StepDistribution& mu, double r, int K, const SpectralRadiusEstimate& rho,
                              const GreenOptions& opt) {
  const auto chain = RadialChain::from(mu);
  const double x = r * rho.inflated();
  const auto Ku = static_cast<std::size_t>(K);
  int N = opt.max_terms;
  bool certified = false;
  if (x < 1.0) {
    const double need = std::log(opt.tol * (1.0 - x)) / std::log(x) - 1.0;
    if (need < opt.max_terms) {
      N = std::max(K, static_cast<int>(std::ceil(need)));
      certified = true;
    }
  }
  GreenSeries out;
  out.r = r;
  out.terms = N + 1;
  std::vector<CompensatedSum> acc(Ku + 1);
  // Recent nonzero terms for the tail fit: (n, value).
  std::vector<std::vector<std::pair<int, double>>> recent(Ku + 1);
  constexpr std::size_t fit_terms = 50;

  std::vector<double> cur{1.0}, next;
  double log_scale = 0.0;
  const double log_r = std::log(r);
  for (int n = 0; n <= N; ++n) {
    if (n > 0) {
      radial_step(chain, cur, next);
      // Radii beyond K + (N - n) cannot come back below K in time.
      const auto keep = static_cast<std::size_t>(std::min(n, K + (N - n))) + 1;
      if (next.size() > keep) next.resize(keep);
      double m = 0.0;
      for (double v : next) m = std::max(m, v);
      for (double& v : next) v /= m;
      log_scale += std::log(m) + log_r;
      cur.swap(next);
    }
    for (std::size_t k = 0; k <= Ku && k < cur.size(); ++k) {
      if (cur[k] == 0.0) continue;
      const double term = std::exp(std::log(cur[k]) + log_scale);
      acc[k] += term;
      if (!certified) {
        auto& q = recent[k];
        q.emplace_back(n, term);
        if (q.size() > fit_terms) q.erase(q.begin());
      }
    }
  }

  out.values.resize(Ku + 1);
  for (std::size_t k = 0; k <= Ku; ++k) {
    auto& v = out.values[k];
    v.value = acc[k].value();
    if (certified) {
      v.error_bound = std::pow(x, N + 1) / (1.0 - x);
      continue;
    }
    // Tail model C (r rho)^n n^{-3/2}; for bipartite walks only every other n.
    v.heuristic = true;
    const auto& q = recent[k];
    if (q.size() < 2) continue;
    const int stride = q[q.size() - 1].first - q[q.size() - 2].first;
    const double lx = std::log(std::min(x, 1.0));
    double C = 0.0;
    for (const auto& [n, term] : q) C += term / std::exp(n * lx - 1.5 * std::log(static_cast<double>(n)));
    C /= static_cast<double>(q.size());
    const int last = q.back().first;
    double tail = 0.0;
    if (lx > -1e-9) {
      tail = C * 2.0 / (stride * std::sqrt(last + 0.5 * stride));
    } else {
      CompensatedSum s;
      for (int n = last + stride;; n += stride) {
        const double t = C * std::exp(n * lx - 1.5 * std::log(static_cast<double>(n)));
        s += t;
        if (t < 1e-18 * v.value || n > last + 100'000'000) break;
      }
      tail = s.value();
    }
    v.value += tail;
    v.error_bound = tail;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Closed forms (cross-checks only)

double first_passage_closed_form(int degree, double p0, double r) {
  const double a = r * (1.0 - p0) / degree;
  const double b = a * (degree - 1);
  const double c = 1.0 - r * p0;
  const double disc = c * c - 4.0 * a * b;
  if (disc < -1e-15) throw RegimeError(fmt::format("r = {} is beyond the critical weight", r));
  return (c - std::sqrt(std::max(disc, 0.0))) / (2.0 * b);
}

double green_closed_form_tree(const StepDistribution& mu, double r, int k) {
  if (!mu.is_isotropic()) throw InvalidArgument("closed form needs an isotropic nearest-neighbour walk");
  const int d = mu.group().alphabet_size();
  const double p0 = mu.laziness();
  const double F = first_passage_closed_form(d, p0, r);
  const double g0 = 1.0 / (1.0 - r * p0 - r * (1.0 - p0) * F);
  return g0 * std::pow(F, k);
}

// ---------------------------------------------------------------------------
// Restricted Green function

namespace {

GreenValue restricted_on_ball(const StepDistribution& mu, double r, const Word& x, const Word& y,
                              const std::function<bool(const Word&)>& in_A, int a_radius,
                              const SpectralRadiusEstimate& rho, double tol) {
  const int R = std::max({a_radius + mu.max_step(), static_cast<int>(x.size()) + mu.max_step(),
                          static_cast<int>(y.size())});
  BallOperator op(mu, R, GreenOptions{}.budget);
  std::vector<char> mask(op.size(), 0);
  for (std::size_t i = 0; i < op.size(); ++i) {
    const Word w = op.table().word(static_cast<WordId>(i));
    mask[i] = static_cast<int>(w.size()) <= a_radius && in_A(w) ? 1 : 0;
  }
  const WordId xi = op.find(x), yi = op.find(y);
  const double xr = r * rho.inflated();
  std::vector<double> cur(op.size(), 0.0), next;
  cur[static_cast<std::size_t>(xi)] = 1.0;
  CompensatedSum total;
  if (xi == yi) total += 1.0;
  GreenValue out;
  double prev_mass = 1.0;
  for (int n = 1;; ++n) {
    op.push(cur, next);
    double mass = 0.0;
    for (std::size_t i = 0; i < next.size(); ++i) {
      next[i] *= r;
      if (static_cast<WordId>(i) == yi) total += next[i];
      if (!mask[i]) next[i] = 0.0;
      mass += next[i];
    }
    cur.swap(next);
    if (mass == 0.0) break;
    // Every later contribution to y is at most mass * sum_j (r rho)^j.
    if (xr < 1.0) {
      const double tail = mass * xr / (1.0 - xr);
      if (tail < tol) {
        out.error_bound = tail;
        break;
      }
    } else if (n > 10) {
      const double q = mass / prev_mass;
      if (q < 1.0 && mass * q / (1.0 - q) < tol) {
        out.error_bound = mass * q / (1.0 - q);
        out.heuristic = true;
        break;
      }
    }
    if (n > GreenOptions{}.max_terms) throw BudgetExceeded("restricted Green series did not reach tolerance");
    prev_mass = mass;
  }
  out.value = total.value();
  return out;
}

}  // namespace

GreenValue restricted_green(const StepDistribution& mu, double r, const Word& x, const Word& y, const Region& A,
                            const SpectralRadiusEstimate& rho, double tol) {
  check_weight(r, rho);
  const auto& g = mu.group();
  switch (A.kind) {
    case Region::Kind::whole:
      return green(mu, r, mul(g, inverse(g, x), y), rho, tol);
    case Region::Kind::bounded:
      if (!A.contains) throw InvalidArgument("bounded region needs a membership predicate");
      return restricted_on_ball(mu, r, x, y, A.contains, A.radius, rho, tol);
    case Region::Kind::windowed: {
      if (!A.contains) throw InvalidArgument("windowed region needs a membership predicate");
      auto v = restricted_on_ball(mu, r, x, y, A.contains, A.radius, rho, tol);
      auto w = restricted_on_ball(mu, r, x, y, A.contains, A.radius - 1, rho, tol);
      v.error_bound += std::abs(v.value - w.value);
      v.heuristic = true;
      return v;
    }
  }
  throw InvalidArgument("unknown region kind");
}

// ---------------------------------------------------------------------------
// Sphere sums

SphereGreenSeries sphere_green_series(const StepDistribution& mu, double r, int N, const SpectralRadiusEstimate& rho,
                                      const GreenOptions& opt) {
  check_weight(r, rho);
  if (N < 2) throw InvalidArgument("sphere series needs N >= 2");
  const auto& g = mu.group();
  SphereGreenSeries s;
  s.r = r;
  s.log_H.resize(static_cast<std::size_t>(N) + 1);
  if (mu.is_isotropic()) {
    RadialGreen G(mu, r, N, opt);
    for (int n = 0; n <= N; ++n) s.log_H[static_cast<std::size_t>(n)] = g.log_sphere_size(n) + G.log_value(n);
  } else {
    const int R = largest_radius_in_budget(g, opt.budget);
    if (N > R) throw BudgetExceeded(fmt::format("sphere series to N = {} exceeds ball radius {} within budget", N, R));
    BallGreen G(mu, r, R, rho, opt);
    for (int n = 0; n <= N; ++n) {
      CompensatedSum h;
      for_each_sphere_word(g, n, opt.budget, [&](const Word& w) { h += G.at(w).value; });
      s.log_H[static_cast<std::size_t>(n)] = std::log(h.value());
    }
  }
  s.H.resize(s.log_H.size());
  for (std::size_t n = 0; n < s.H.size(); ++n) s.H[n] = std::exp(s.log_H[n]);
  s.G_ee = s.H[0];
  s.H_estimate = std::exp(s.log_H[static_cast<std::size_t>(N)] - s.log_H[static_cast<std::size_t>(N) - 1]);
  const auto c = multiplicativity_constants(s);
  s.sub_const = c.sub_const;
  s.super_const = c.super_const;
  s.sub_const_interior = c.sub_interior;
  s.super_const_interior = c.super_interior;
  return s;
}

MultiplicativityConstants multiplicativity_constants(const SphereGreenSeries& s) {
  return multiplicativity_constants(s, static_cast<int>(s.log_H.size()) - 1);
}

MultiplicativityConstants multiplicativity_constants(const SphereGreenSeries& s, int N) {
  if (N < 2 || static_cast<std::size_t>(N) >= s.log_H.size())
    throw InvalidArgument(fmt::format("scan bound {} outside the series length", N));
  double lo = INFINITY, hi = -INFINITY, lo_in = INFINITY, hi_in = -INFINITY;
  for (int m = 0; m <= N; ++m) {
    for (int n = m; m + n <= N; ++n) {
      const double l = s.log_H[static_cast<std::size_t>(m + n)] - s.log_H[static_cast<std::size_t>(m)] -
                       s.log_H[static_cast<std::size_t>(n)];
      lo = std::min(lo, l);
      hi = std::max(hi, l);
      if (m >= 1) {
        lo_in = std::min(lo_in, l);
        hi_in = std::max(hi_in, l);
      }
    }
  }
  return {std::exp(hi), std::exp(lo), std::exp(hi_in), std::exp(lo_in)};
}

// ---------------------------------------------------------------------------
// eta and the derivative identity

GreenValue eta(const StepDistribution& mu, double r, const SpectralRadiusEstimate& rho, const GreenOptions& opt) {
  if (!(r > 0.0)) throw InvalidArgument(fmt::format("weight must be positive, got {}", r));
  if (r >= 1.0 / rho.rho_hat)
    throw RegimeError(fmt::format("eta diverges at and beyond the critical weight 1/rho = {:.9f}", 1.0 / rho.rho_hat));
  const auto& g = mu.group();
  if (!mu.is_isotropic()) {
    const int R = largest_radius_in_budget(g, opt.budget);
    BallGreen G(mu, r, R, rho, opt);
    CompensatedSum s;
    for (const auto& w : ball_words(g, R, opt.budget)) {
      const double v = G.at(w).value;
      s += v * v;
    }
    return GreenValue{s.value(), 0.0, true};
  }
  const int d = g.alphabet_size();
  for (int K = 256;; K *= 4) {
    RadialGreen G(mu, r, K, opt);
    // Beyond K every term shrinks by (d-1) t^2; t_K bounds the true ratio.
    auto total = [&](bool upper) {
      CompensatedSum s;
      double last = 0.0;
      for (int k = 0; k <= K; ++k) {
        const double lu = upper ? G.log_upper(k) : G.log_lower(k);
        last = std::exp(g.log_sphere_size(k) + 2.0 * lu);
        s += last;
      }
      const double t = upper ? G.ratio_upper(K - 1) : G.ratio(K - 1);
      const double q = (d - 1) * t * t;
      if (!(q < 1.0)) return static_cast<double>(INFINITY);
      s += last * q / (1.0 - q);
      return s.value();
    };
    const double lo = total(false), hi = total(true);
    if (std::isfinite(hi) && (hi - lo <= opt.tol * hi * 10 || K >= 1 << 16))
      return GreenValue{0.5 * (lo + hi), 0.5 * (hi - lo), !std::isfinite(hi)};
    if (K >= 1 << 16) throw NotConverged(fmt::format("eta at r = {} did not converge", r));
  }
}

DerivativeCheck green_derivative_check(const StepDistribution& mu, double r, double h,
                                       const SpectralRadiusEstimate& rho) {
  if (!(r >= 1.0 && r <= 1.0 / rho.rho_hat))
    throw InvalidArgument(fmt::format("weight r = {} is outside [1, 1/rho]", r));
  if (!(h > 0.0) || r + h >= 1.0 / rho.inflated())
    throw InvalidArgument(fmt::format("step h = {} reaches past the critical weight", h));
  GreenOptions opt;
  opt.tol = 1e-15;
  std::function<double(double)> f;
  DerivativeCheck out;
  if (mu.is_isotropic()) {
    f = [&](double s) { return s * RadialGreen(mu, s, 0, opt).value(0); };
    out.rhs = eta(mu, r, rho, opt).value;
  } else {
    // On a finite ball the identity holds exactly for the killed walk.
    const int R = largest_radius_in_budget(mu.group(), opt.budget);
    f = [&](double s) { return s * BallGreen(mu, s, R, rho, opt).at(Word{}).value; };
    out.rhs = eta(mu, r, rho, opt).value;
  }
  auto fd = [&](double step) { return (f(r + step) - f(r - step)) / (2.0 * step); };
  out.fd_h = fd(h);
  out.fd_h2 = fd(h / 2);
  out.fd_richardson = (4.0 * out.fd_h2 - out.fd_h) / 3.0;
  out.rel_error = std::abs(out.fd_h - out.rhs) / out.rhs;
  out.rel_error_h2 = std::abs(out.fd_h2 - out.rhs) / out.rhs;
  out.rel_error_richardson = std::abs(out.fd_richardson - out.rhs) / out.rhs;
  return out;
}

// ---------------------------------------------------------------------------
// Triple sums

double triple_green_sum(const RadialGreen& G, const GroupModel& group, const Word& x, const Word& y) {
  const int d = group.alphabet_size();
  const int K = G.max_radius();
  std::vector<Word> tripod;
  for (std::size_t k = 0; k <= x.size(); ++k) tripod.push_back(prefix(x, k));
  for (std::size_t k = 0; k <= y.size(); ++k) tripod.push_back(prefix(y, k));
  std::sort(tripod.begin(), tripod.end());
  tripod.erase(std::unique(tripod.begin(), tripod.end()), tripod.end());

  auto logu = [&](int k) {
    if (k > K) throw InvalidArgument(fmt::format("triple sum needs Green radius {} > {}", k, K));
    return G.log_value(k);
  };
  CompensatedSum total;
  for (const auto& w : tripod) {
    int deg = w.empty() ? 0 : 1;
    for (const auto& v : tripod)
      if (v.size() == w.size() + 1 && common_prefix_length(v, w) == w.size()) ++deg;
    const int D[3] = {static_cast<int>(w.size()), distance(group, w, x), distance(group, w, y)};
    const double base = logu(D[0]) + logu(D[1]) + logu(D[2]);
    total += std::exp(base);
    const int branches = d - deg;
    if (branches <= 0) continue;
    // Off-tripod vertices hanging at w: (d-1)^{j-1} of them per branch at depth j.
    CompensatedSum side;
    const int J = K - std::max({D[0], D[1], D[2]});
    double last = 0.0;
    for (int j = 1; j <= J; ++j) {
      last = std::exp((j - 1) * std::log(d - 1.0) + logu(D[0] + j) + logu(D[1] + j) + logu(D[2] + j));
      side += last;
      if (last < 1e-18 * side.value()) break;
    }
    const double t = G.ratio(K - 1);
    const double q = (d - 1) * t * t * t;
    side += last * q / (1.0 - q);
    total += branches * side.value();
  }
  return total.value();
}

double triple_green_sum_ball(const GreenTable& G, const Word& x, const Word& y, int z_radius) {
  const auto& g = G.group();
  CompensatedSum s;
  for (const auto& z : ball_words(g, z_radius)) s += G.value(z) * G.value(z, x) * G.value(z, y);
  return s.value();
}

namespace {

Word greedy_extension(const GroupModel& g, std::vector<Letter> w, std::size_t length) {
  while (w.size() < length) {
    for (int s = 0; s < g.alphabet_size(); ++s) {
      auto l = static_cast<Letter>(s);
      if (!w.empty() && l == g.inverse(w.back())) continue;
      w.push_back(l);
      break;
    }
  }
  return Word(std::move(w));
}

}  // namespace

TwoPointSum two_point_sum(const StepDistribution& mu, double lambda, int n, int k, const SpectralRadiusEstimate& rho) {
  check_weight(lambda, rho);
  if (n < 0 || k < 0 || k > 2 * n) throw InvalidArgument(fmt::format("no pairs in S_{} at distance {}", n, k));
  const auto& g = mu.group();
  const int d = g.alphabet_size();
  TwoPointSum out;
  const auto series = sphere_green_series(mu, lambda, std::max(n + 8, 64), rho);
  const double H = series.H_estimate;
  if (k % 2 == 1) return out;
  const int m = n - k / 2;

  if (!mu.is_isotropic()) {
    // Exhaustive over pairs, z over a ball around e.
    const int z_radius = n + 3;
    const auto G = GreenTable::make(mu, lambda, z_radius + n, rho);
    const auto sphere = sphere_words(g, n);
    CompensatedSum s;
    for (const auto& x : sphere)
      for (const auto& y : sphere)
        if (distance(g, x, y) == k) {
          s += triple_green_sum_ball(G, x, y, z_radius);
          ++out.pairs;
        }
    out.value = s.value();
  } else {
    // Tree automorphisms fixing e act transitively on such pairs and preserve
    // the isotropic Green function, so one representative suffices.
    const Word x = greedy_extension(g, {}, static_cast<std::size_t>(n));
    std::vector<Letter> yl(x.begin(), x.begin() + m);
    if (m < n) {
      for (int s = 0; s < d; ++s) {
        auto l = static_cast<Letter>(s);
        if (l == x[static_cast<std::size_t>(m)] || (m > 0 && l == g.inverse(yl.back()))) continue;
        yl.push_back(l);
        break;
      }
    }
    const Word y = greedy_extension(g, yl, static_cast<std::size_t>(n));
    if (m == n) {
      out.pairs = g.sphere_size(n);
    } else {
      const std::uint64_t c = m == 0 ? d : d - 1;
      std::uint64_t tails = 1;
      for (int i = 0; i < 2 * (n - m - 1); ++i) tails *= static_cast<std::uint64_t>(d - 1);
      out.pairs = g.sphere_size(m) * c * (c - 1) * tails;
    }
    RadialGreen G(mu, lambda, 2 * n + 256);
    out.value = static_cast<double>(out.pairs) * triple_green_sum(G, g, x, y);
  }
  out.ratio = out.value / std::pow(H, n + k / 2.0);
  return out;
}

AnconaScan ancona_ratio_scan(const GreenTable& G, int n_max) {
  const auto& g = G.group();
  AnconaScan out{-INFINITY, INFINITY, 0};
  for (const auto& w : ball_words(g, n_max)) {
    const double gw = G.value(w);
    for (std::size_t j = 0; j <= w.size(); ++j) {
      const Word head = prefix(w, j);
      const Word tail(std::vector<Letter>(w.begin() + static_cast<std::ptrdiff_t>(j), w.end()));
      const double ratio = gw / (G.value(head) * G.value(tail));
      out.max_ratio = std::max(out.max_ratio, ratio);
      out.min_ratio = std::min(out.min_ratio, ratio);
      ++out.triples;
    }
  }
  return out;
}

}  // namespace hypbrw
