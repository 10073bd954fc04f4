#include "swda/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <numeric>
#include <ostream>

#include "swda/error.hpp"
#include "swda/verification.hpp"

namespace swda {

double ess(std::span<const double> weights) {
  if (weights.empty()) throw InvalidArgument("ess: no weights");
  double sum = 0.0;
  double sq = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidArgument("ess: weights must be finite and non-negative");
    sum += w;
    sq += w * w;
  }
  if (std::abs(sum - 1.0) > 1e-10) throw InvalidArgument("ess: weights are not normalized");
  return 1.0 / sq;
}

std::vector<std::size_t> systematic_indices(std::span<const double> weights, double u) {
  const std::size_t n = weights.size();
  if (n == 0) throw InvalidArgument("systematic resampling of an empty set");
  if (!(u >= 0.0 && u < 1.0)) throw InvalidArgument("systematic resampling: u must lie in [0, 1)");
  std::vector<std::size_t> out(n);
  double cum = weights[0];
  std::size_t parent = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double pos = (static_cast<double>(i) + u) / static_cast<double>(n);
    while (pos >= cum && parent + 1 < n) cum += weights[++parent];
    out[i] = parent;
  }
  return out;
}

std::vector<std::size_t> systematic_indices(std::span<const double> weights, RandomStream& rng) {
  return systematic_indices(weights, rng.uniform());
}

bool normalize_log_weights(std::span<const double> logw, std::vector<double>& out) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : logw) {
    if (std::isnan(v)) return false;
    mx = std::max(mx, v);
  }
  if (!std::isfinite(mx)) return false;
  out.resize(logw.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logw.size(); ++i) {
    out[i] = std::exp(logw[i] - mx);
    sum += out[i];
  }
  for (double& w : out) w /= sum;
  return true;
}

void Ensemble::validate() const {
  if (members.empty()) throw InvalidArgument("ensemble has no members");
  if (weights.size() != members.size() || streams.size() != members.size())
    throw InvalidArgument("ensemble weights/streams do not match member count");
  const Grid& g = members.front().grid();
  for (const auto& m : members)
    if (!(m.grid() == g)) throw InvalidArgument("ensemble members on different grids");
  const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (std::abs(sum - 1.0) > 1e-12) throw InvalidArgument("ensemble weights are not normalized");
}

Ensemble Ensemble::replicate(const State& s, int n, std::uint64_t seed) {
  if (n < 1) throw InvalidArgument("ensemble size must be positive");
  Ensemble e;
  e.members.assign(static_cast<std::size_t>(n), s);
  e.weights.assign(static_cast<std::size_t>(n), 1.0 / n);
  for (int i = 0; i < n; ++i) e.streams.emplace_back(derive_seed(seed, static_cast<std::uint64_t>(i)));
  return e;
}

void Observation::validate(const Grid& grid) const {
  if (locations.empty()) throw InvalidArgument("observation has no locations");
  if (values.size() != locations.size()) throw InvalidArgument("observation values/locations mismatch");
  if (!(sigma > 0.0)) throw InvalidArgument("observation sigma must be positive");
  std::vector<std::pair<int, int>> sorted = locations;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw InvalidArgument("observation locations must be distinct");
  for (auto [i, j] : locations)
    if (i < 0 || j < 0 || i >= grid.nx() || j >= grid.ny()) throw InvalidArgument("observation outside grid");
}

std::vector<std::pair<int, int>> observation_lattice(const Grid& grid, int d_obs) {
  if (d_obs < 1) throw InvalidArgument("d_obs must be positive");
  const int m = static_cast<int>(std::lround(std::sqrt(static_cast<double>(d_obs))));
  if (m * m != d_obs) throw InvalidArgument("d_obs must be a perfect square");
  if (m > grid.nx() || m > grid.ny()) throw InvalidArgument("more observation rows than grid points");
  std::vector<std::pair<int, int>> out;
  for (int b = 0; b < m; ++b)
    for (int a = 0; a < m; ++a)
      out.emplace_back((2 * a + 1) * grid.nx() / (2 * m), (2 * b + 1) * grid.ny() / (2 * m));
  return out;
}

double log_likelihood(const State& s, const Observation& obs) {
  const double norm = std::log(obs.sigma * std::sqrt(2.0 * std::numbers::pi));
  double ll = 0.0;
  for (std::size_t k = 0; k < obs.locations.size(); ++k) {
    const auto [i, j] = obs.locations[k];
    const double r = s.eta(i, j) - obs.values[k];
    ll += -(r * r) / (2.0 * obs.sigma * obs.sigma) - norm;
  }
  return ll;
}

Ensemble systematic_resample(const Ensemble& e, RandomStream& rng) {
  e.validate();
  const auto parents = systematic_indices(e.weights, rng);
  Ensemble out;
  const std::size_t n = e.size();
  out.weights.assign(n, 1.0 / static_cast<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    out.members.push_back(e.members[parents[i]]);
    RandomStream parent = e.streams[parents[i]];
    out.streams.push_back(parent.fork(i));
  }
  return out;
}

Ensemble propagate_ensemble(Ensemble e, const NoiseDictionary& dict, const PhysParams& p, double dt,
                            int steps) {
  e.validate();
  if (steps < 0) throw InvalidArgument("negative step count");
  for (std::size_t m = 0; m < e.size(); ++m) {
    try {
      for (int n = 0; n < steps; ++n)
        e.members[m] = step_stochastic(e.members[m], dict.scaled(draw_index(dict, e.streams[m])), p, dt);
    } catch (const NumericalError& err) {
      throw NumericalError("ensemble member " + std::to_string(m) + ": " + err.what());
    }
  }
  return e;
}

State RswWindowModel::run_window(const State& start, std::span<const Draw> draws) const {
  State s = start;
  for (Draw d : draws) s = step_stochastic(s, dict_->scaled(d), *p_, dt_);
  return s;
}

const LocationSummary& DaMetrics::best_bias() const {
  if (locations.empty()) throw InvalidArgument("no assimilation metrics");
  return *std::min_element(locations.begin(), locations.end(), [](const auto& a, const auto& b) {
    return a.mean_abs_bias < b.mean_abs_bias;
  });
}

const LocationSummary& DaMetrics::best_rmse() const {
  if (locations.empty()) throw InvalidArgument("no assimilation metrics");
  return *std::min_element(locations.begin(), locations.end(),
                           [](const auto& a, const auto& b) { return a.mean_rmse < b.mean_rmse; });
}

void DaMetrics::summarize() {
  locations.clear();
  for (const auto& r : records) {
    auto it = std::find_if(locations.begin(), locations.end(), [&](const auto& l) {
      return l.location_i == r.location_i && l.location_j == r.location_j;
    });
    if (it == locations.end()) {
      locations.push_back(LocationSummary{r.location_i, r.location_j, 0.0, 0.0, 0.0});
      it = std::prev(locations.end());
    }
    it->mean_bias += r.bias;
    it->mean_abs_bias += std::abs(r.bias);
    it->mean_rmse += r.rmse;
  }
  const double inv = cycles > 0 ? 1.0 / cycles : 0.0;
  for (auto& l : locations) {
    l.mean_bias *= inv;
    l.mean_abs_bias *= inv;
    l.mean_rmse *= inv;
  }
}

DaMetrics assimilate_run(const TruthSource& truth, const Ensemble& e0, const NoiseDictionary& dict,
                         const AssimilationSetup& setup, RandomStream& rng, const EnsembleHook& hook) {
  e0.validate();
  setup.filter.validate();
  const int window = setup.filter.window_steps;
  if (setup.total_steps < window || setup.total_steps % window != 0)
    throw InvalidArgument("total_steps must be a positive multiple of the assimilation window");
  const Grid& grid = e0.members.front().grid();
  if (!(dict.grid == grid)) throw InvalidArgument("dictionary grid differs from ensemble grid");

  Observation obs;
  obs.locations = observation_lattice(grid, setup.obs.d_obs);
  obs.sigma = setup.obs.sigma;
  obs.values.resize(obs.locations.size());

  const RswWindowModel model(dict, setup.physics, setup.dt, window);
  std::vector<Particle<RswWindowModel>> ps;
  for (std::size_t i = 0; i < e0.size(); ++i)
    ps.push_back(Particle<RswWindowModel>{e0.members[i], {}, e0.members[i], 0.0, e0.streams[i]});
  std::vector<double> weights = e0.weights;

  DaMetrics metrics;
  metrics.cycles = setup.total_steps / window;
  double acceptance = 0.0;
  std::vector<double> values(ps.size());
  for (int c = 0; c < metrics.cycles; ++c) {
    const int step = (c + 1) * window;
    const double time = step * setup.dt;
    TemperReport report;
    Field eta_true;
    try {
      propagate_particles(model, ps);
      eta_true = truth(step);
      if (!(eta_true.grid() == grid)) throw InvalidArgument("truth source returned a field on another grid");
      for (std::size_t k = 0; k < obs.locations.size(); ++k) {
        const auto [i, j] = obs.locations[k];
        obs.values[k] = eta_true(i, j) + obs.sigma * rng.normal();
      }
      report = adaptive_temper_jitter(
          model, ps, weights, [&obs](const State& s) { return log_likelihood(s, obs); }, setup.filter, rng);
    } catch (const Error& err) {
      throw NumericalError("assimilation cycle " + std::to_string(c) + ": " + err.what());
    }
    if (!report.success) ++metrics.failed_cycles;
    acceptance += report.acceptance();

    for (const auto& [i, j] : obs.locations) {
      for (std::size_t p = 0; p < ps.size(); ++p) values[p] = ps[p].end.eta(i, j);
      const PointError e = point_error(values, eta_true(i, j));
      metrics.records.push_back(
          CycleRecord{time, i, j, eta_true(i, j), e.mean, e.bias, e.rmse, report.ess_min(), report.stages()});
    }
    for (auto& p : ps) {
      p.start = p.end;
      p.draws.clear();
    }
    if (hook) {
      Ensemble view;
      for (const auto& p : ps) {
        view.members.push_back(p.end);
        view.streams.push_back(p.stream);
      }
      view.weights = weights;
      hook(c, time, view);
    }
  }
  metrics.mean_acceptance = metrics.cycles ? acceptance / metrics.cycles : 0.0;
  metrics.summarize();
  return metrics;
}

void write_cycle_csv(std::ostream& out, std::span<const CycleRecord> records) {
  out << "time,location_i,location_j,ensemble_mean,bias,rmse,ess_min,temper_stages\n";
  out << std::setprecision(12);
  for (const auto& r : records)
    out << r.time << ',' << r.location_i << ',' << r.location_j << ',' << r.ensemble_mean << ',' << r.bias << ','
        << r.rmse << ',' << r.ess_min << ',' << r.temper_stages << '\n';
}

}  // namespace swda
