#include "fracnls/solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fracnls/norms.hpp"
#include "fracnls/operators.hpp"
#include "fracnls/stochastic.hpp"

namespace fracnls {

TreeElements make_tree(int level, ModeTrajectory psi, std::vector<cplx> lambda, ModeTrajectory sigma) {
  require_same_shape(psi, sigma, "make_tree");
  if (static_cast<int>(lambda.size()) != psi.points()) throw std::invalid_argument("make_tree: lambda length mismatch");
  TreeElements t;
  t.level = level;
  t.counterterm = sigma_counterterm(sigma);
  t.centered = compute_centered_square(psi, t.counterterm);
  t.psi = std::move(psi);
  t.lambda = std::move(lambda);
  t.sigma = std::move(sigma);
  return t;
}

TreeElements zero_tree(int K, int M) {
  TreeElements t;
  t.psi = ModeTrajectory(K, M);
  t.sigma = ModeTrajectory(K, M);
  t.counterterm = ModeTrajectory(K, M);
  t.centered = ModeTrajectory(K, M);
  t.lambda.assign(static_cast<std::size_t>(M + 1), cplx{});
  return t;
}

void SolverConfig::validate() const {
  if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError("tau must lie in (0, 1]");
  if (!(tol > 0.0)) throw ConfigError("solver tolerance must be positive");
  if (!(b > 0.5 && b < 1.0)) throw ConfigError("contraction exponent b must lie in (1/2, 1)");
  if (!(c > 0.0 && c < 0.25)) throw ConfigError("contraction exponent c must lie in (0, 1/4)");
  if (maxPicard < 1) throw ConfigError("maxPicard must be positive");
}

namespace {

ModeTrajectory times_series(const ModeTrajectory& z, const std::vector<cplx>& f) {
  ModeTrajectory out = z;
  for (int k = -z.K(); k <= z.K(); ++k) {
    auto m = out.mode(k);
    for (std::size_t j = 0; j < m.size(); ++j) m[j] *= f[j];
  }
  return out;
}

double xbc(const ModeTrajectory& z, const SolverConfig& cfg) {
  NormSpec s;
  s.kind = NormKind::Xbc;
  s.b = cfg.b;
  s.c = cfg.c;
  return norm_eval(z, s);
}

}  // namespace

ModeTrajectory gamma_map(const ModeTrajectory& z, const TreeElements& tree, const SolverConfig& cfg) {
  require_same_shape(z, tree.psi, "gamma_map");
  ModeTrajectory acc = cutoff_integral(twisted_product(z, z));
  acc += product_operator(tree.psi, z, ProductSide::Plus);
  acc += product_operator(tree.psi, z, ProductSide::Minus);
  acc -= cutoff_integral(times_series(z, tree.lambda));
  acc += tree.centered;
  acc *= cfg.coupling;
  return localize(acc, cfg.tau);
}

PicardResult picard_solve(const TreeElements& tree, const SolverConfig& base) {
  base.validate();
  SolverConfig cfg = base;
  PicardResult res;
  res.report.restarts = 0;
  while (true) {
    SolveReport rep;
    rep.tau = cfg.tau;
    rep.restarts = res.report.restarts;
    ModeTrajectory z(tree.psi.K(), tree.psi.M());
    bool diverged = false;
    for (int it = 1; it <= cfg.maxPicard; ++it) {
      ModeTrajectory next = gamma_map(z, tree, cfg);
      const double d = xbc(next - z, cfg);
      if (!rep.differences.empty() && rep.differences.back() > 0.0) rep.ratios.push_back(d / rep.differences.back());
      rep.differences.push_back(d);
      rep.iterations = it;
      z = std::move(next);
      if (!std::isfinite(d) || d > 1e6) {
        diverged = true;
        break;
      }
      if (d <= cfg.tol) {
        rep.converged = true;
        break;
      }
    }
    if (rep.converged) {
      rep.residual = xbc(gamma_map(z, tree, cfg) - z, cfg);
      res.z = std::move(z);
      res.report = std::move(rep);
      return res;
    }
    if (!cfg.adaptiveTau || cfg.tau / 2.0 < std::ldexp(1.0, -10)) {
      std::ostringstream msg;
      msg << "Picard iteration did not contract (tau = " << cfg.tau << ", last difference "
          << (rep.differences.empty() ? 0.0 : rep.differences.back()) << (diverged ? ", diverged" : "")
          << "); the data leave the small-data regime";
      throw NumericalError(msg.str());
    }
    cfg.tau /= 2.0;
    ++res.report.restarts;
  }
}

ModeTrajectory reconstruct_u(const ModeTrajectory& z, const ModeTrajectory& psi) {
  require_same_shape(z, psi, "reconstruct_u");
  ModeTrajectory u = z + psi;
  const TimeGrid g = z.grid();
  for (int k = -z.K(); k <= z.K(); ++k) {
    auto m = u.mode(k);
    for (int j = 0; j < g.points(); ++j) m[j] *= std::polar(1.0, g.t(j) * double(k) * k);
  }
  return u;
}

ModeTrajectory forcing_from_noise_modes(const ModeTrajectory& noiseModes) {
  const TimeGrid g = noiseModes.grid();
  ModeTrajectory out(noiseModes.K(), noiseModes.M());
  const double h = g.step();
  const int o = g.origin();
  for (int k = -noiseModes.K(); k <= noiseModes.K(); ++k) {
    auto in = noiseModes.mode(k);
    auto m = out.mode(k);
    auto f = [&](int j) { return std::polar(1.0, -g.t(j) * double(k) * k) * in[j]; };
    for (int j = o + 1; j < g.points(); ++j) m[j] = m[j - 1] + 0.5 * h * (f(j - 1) + f(j));
    for (int j = o - 1; j >= 0; --j) m[j] = m[j + 1] - 0.5 * h * (f(j) + f(j + 1));
  }
  return out;
}

ModeTrajectory direct_mild_solve(const ModeTrajectory& F, const std::vector<cplx>& lambda, const ModeTrajectory& sigma,
                                 const SolverConfig& cfg, bool quadratic) {
  require_same_shape(F, sigma, "direct_mild_solve");
  if (!(cfg.tau > 0.0 && cfg.tau <= 1.0)) throw ConfigError("tau must lie in (0, 1]");
  const int K = F.K(), W = F.modes();
  const TimeGrid g = F.grid();
  const int o = g.origin();
  const int span = static_cast<int>(std::floor(cfg.tau / g.step() + 1e-9));
  const double h = g.step();
  const cplx I{0.0, 1.0};

  auto rhs = [&](const std::vector<cplx>& v, int j) {
    std::vector<cplx> out(W);
    if (quadratic) out = twisted_product_at(v, v, K, g.t(j));
    for (int k = -K; k <= K; ++k) {
      out[k + K] += -lambda[j] * v[k + K] - std::polar(1.0, -g.t(j) * double(k) * k) * sigma(k, j);
      out[k + K] *= cfg.coupling;
    }
    return out;
  };
  auto norm = [](const std::vector<cplx>& v) {
    double s = 0.0;
    for (auto x : v) s += std::norm(x);
    return std::sqrt(s);
  };

  ModeTrajectory v(K, g.M);
  for (int dir : {1, -1}) {
    std::vector<cplx> cur(W), prev(W);
    for (int k = -K; k <= K; ++k) cur[k + K] = v(k, o);
    prev = cur;
    for (int step = 0; step < span; ++step) {
      const int j = o + dir * step;
      const int jn = j + dir;
      const auto gj = rhs(cur, j);
      std::vector<cplx> base(W);
      for (int i = 0; i < W; ++i) {
        const int k = i - K;
        base[i] = cur[i] - I * (F(k, jn) - F(k, j)) - I * (dir * h / 2.0) * gj[i];
      }
      std::vector<cplx> next(W);
      for (int i = 0; i < W; ++i) next[i] = 2.0 * cur[i] - prev[i];
      bool settled = false;
      for (int it = 0; it < 100; ++it) {
        const auto gn = rhs(next, jn);
        std::vector<cplx> upd(W);
        double diff = 0.0;
        for (int i = 0; i < W; ++i) {
          upd[i] = base[i] - I * (dir * h / 2.0) * gn[i];
          diff += std::norm(upd[i] - next[i]);
        }
        next = std::move(upd);
        if (std::sqrt(diff) <= 1e-14 * (1.0 + norm(next))) {
          settled = true;
          break;
        }
      }
      const double nn = norm(next);
      if (!settled || !std::isfinite(nn) || nn > 1e6) {
        throw NumericalError("direct solver step failed near t = " + std::to_string(g.t(jn)) +
                             "; use a finer grid or a smaller tau");
      }
      prev = cur;
      cur = next;
      for (int k = -K; k <= K; ++k) v(k, jn) = cur[k + K];
    }
  }
  ModeTrajectory u(K, g.M);
  for (int k = -K; k <= K; ++k) {
    for (int j = o - span; j <= o + span; ++j) u(k, j) = std::polar(1.0, g.t(j) * double(k) * k) * v(k, j);
  }
  return u;
}

double relative_window_distance(const ModeTrajectory& a, const ModeTrajectory& b, double tau) {
  require_same_shape(a, b, "relative_window_distance");
  const TimeGrid g = a.grid();
  double num = 0.0, den = 0.0;
  for (int j = 0; j < g.points(); ++j) {
    if (std::abs(g.t(j)) > tau + 1e-12) continue;
    double d = 0.0, r = 0.0;
    for (int k = -a.K(); k <= a.K(); ++k) {
      d += std::norm(a(k, j) - b(k, j));
      r += std::norm(b(k, j));
    }
    num = std::max(num, std::sqrt(d));
    den = std::max(den, std::sqrt(r));
  }
  return den > 0.0 ? num / den : num;
}

}  // namespace fracnls
