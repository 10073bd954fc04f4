#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "swda/error.hpp"
#include "swda/random.hpp"

namespace swda {

struct FilterConfig {
  int window_steps = 20;            // N_f
  double ess_threshold_frac = 0.5;  // tau
  int jitter_moves = 5;
  double jitter_rho = 0.9;          // probability of keeping each window draw
  int max_temper_stages = 50;

  void validate() const {
    if (window_steps < 1) throw InvalidArgument("window_steps must be >= 1");
    if (!(ess_threshold_frac > 0.0 && ess_threshold_frac < 1.0))
      throw InvalidArgument("ess_threshold_frac must lie in (0, 1)");
    if (jitter_moves < 0) throw InvalidArgument("jitter_moves must be >= 0");
    if (!(jitter_rho > 0.0 && jitter_rho < 1.0)) throw InvalidArgument("jitter_rho must lie in (0, 1)");
    if (max_temper_stages < 1) throw InvalidArgument("max_temper_stages must be >= 1");
  }
};

/// 1 / sum w^2; rejects weights that do not sum to one.
double ess(std::span<const double> weights);

/// Parent index for each of N offspring, from one uniform u in [0, 1).
std::vector<std::size_t> systematic_indices(std::span<const double> weights, double u);
std::vector<std::size_t> systematic_indices(std::span<const double> weights, RandomStream& rng);

/// Normalized exp(logw) computed stably; returns false if every entry is -inf
/// or any entry is NaN.
bool normalize_log_weights(std::span<const double> logw, std::vector<double>& out);

/// Window model for the tempering filter. A particle is the state at the
/// start of the window plus the noise draws used over the window.
template <class M>
concept WindowModel = requires(const M& m, const typename M::State& s,
                               std::span<const typename M::Draw> draws, RandomStream& rng) {
  typename M::State;
  typename M::Draw;
  { m.window_length() } -> std::convertible_to<int>;
  { m.draw_noise(rng) } -> std::convertible_to<typename M::Draw>;
  { m.run_window(s, draws) } -> std::convertible_to<typename M::State>;
};

template <WindowModel M>
struct Particle {
  typename M::State start;
  std::vector<typename M::Draw> draws;
  typename M::State end;
  double loglik = 0.0;
  RandomStream stream;
};

struct TemperReport {
  std::vector<double> exponents;  // delta phi per stage
  std::vector<double> ess;        // ESS after each reweighting
  int resamples = 0;
  std::uint64_t proposals = 0;
  std::uint64_t accepted = 0;
  bool success = true;

  int stages() const { return static_cast<int>(exponents.size()); }
  double ess_min() const {
    return ess.empty() ? std::numeric_limits<double>::quiet_NaN() : *std::min_element(ess.begin(), ess.end());
  }
  double acceptance() const { return proposals ? static_cast<double>(accepted) / proposals : 1.0; }
};

/// Fresh draws and run of the window for every particle.
template <WindowModel M>
void propagate_particles(const M& model, std::vector<Particle<M>>& ps) {
  for (auto& p : ps) {
    p.draws.resize(static_cast<std::size_t>(model.window_length()));
    for (auto& d : p.draws) d = model.draw_noise(p.stream);
    p.end = model.run_window(p.start, p.draws);
  }
}

/// Adaptive tempering with systematic resampling and pCN-in-noise jitter.
/// Particles must already hold their window end states. `weights` is
/// updated in place and stays normalized. loglik(state) -> double.
template <WindowModel M, class LogLik>
TemperReport adaptive_temper_jitter(const M& model, std::vector<Particle<M>>& ps, std::vector<double>& weights,
                                    const LogLik& loglik, const FilterConfig& cfg, RandomStream& rng) {
  cfg.validate();
  const std::size_t n = ps.size();
  if (n == 0 || weights.size() != n) throw InvalidArgument("adaptive_temper_jitter: weight count mismatch");
  for (auto& p : ps) {
    p.loglik = loglik(p.end);
    if (!std::isfinite(p.loglik)) throw NumericalError("non-finite log-likelihood");
  }

  const double target = cfg.ess_threshold_frac * static_cast<double>(n);
  std::vector<double> base_logw(n);
  std::vector<double> w(n);
  auto reweighted = [&](double dphi) {
    for (std::size_t i = 0; i < n; ++i) base_logw[i] = std::log(weights[i]) + dphi * ps[i].loglik;
    if (!normalize_log_weights(base_logw, w)) throw NumericalError("tempering weights collapsed");
    return ess(w);
  };

  TemperReport report;
  double phi = 0.0;
  while (phi < 1.0) {
    if (report.stages() >= cfg.max_temper_stages) {
      report.success = false;
      break;
    }
    const double room = 1.0 - phi;
    double dphi = room;
    if (reweighted(room) < target) {
      double lo = 0.0;
      double hi = room;
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (reweighted(mid) >= target) lo = mid;
        else hi = mid;
      }
      dphi = lo > 0.0 ? lo : hi;
    }
    const double stage_ess = reweighted(dphi);
    weights = w;
    // The last stage closes exactly at phi = 1.
    phi = dphi == room ? 1.0 : phi + dphi;
    report.exponents.push_back(dphi);
    report.ess.push_back(stage_ess);

    if (stage_ess >= static_cast<double>(n) * (1.0 - 1e-12)) continue;

    const auto parents = systematic_indices(weights, rng);
    std::vector<Particle<M>> next;
    next.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      next.push_back(ps[parents[i]]);
      next.back().stream = next.back().stream.fork(i);
    }
    ps = std::move(next);
    std::fill(weights.begin(), weights.end(), 1.0 / static_cast<double>(n));
    ++report.resamples;

    for (auto& p : ps) {
      std::vector<typename M::Draw> proposal(p.draws.size());
      for (int move = 0; move < cfg.jitter_moves; ++move) {
        for (std::size_t k = 0; k < proposal.size(); ++k)
          proposal[k] = p.stream.uniform() < cfg.jitter_rho ? p.draws[k] : model.draw_noise(p.stream);
        auto end = model.run_window(p.start, proposal);
        const double ll = loglik(end);
        ++report.proposals;
        if (!std::isfinite(ll)) continue;
        const double log_accept = phi * (ll - p.loglik);
        if (log_accept >= 0.0 || std::log(p.stream.uniform()) < log_accept) {
          p.draws = proposal;
          p.end = std::move(end);
          p.loglik = ll;
          ++report.accepted;
        }
      }
    }
  }
  return report;
}

}  // namespace swda
