#include "swda/pipeline.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <map>
#include <nlohmann/json.hpp>
#include <numeric>
#include <ostream>
#include <sstream>

#include "meta_io.hpp"
#include "swda/calibration.hpp"
#include "swda/dsb.hpp"
#include "swda/ensemble.hpp"
#include "swda/error.hpp"
#include "swda/noise_dictionary.hpp"
#include "swda/random.hpp"
#include "swda/rsw.hpp"
#include "swda/snapshot_io.hpp"
#include "swda/verification.hpp"

#ifndef SWDA_VERSION
#define SWDA_VERSION "unknown"
#endif

namespace swda {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr std::string_view kNames[] = {"simulate", "calibrate", "train", "generate",
                                       "forecast", "assimilate", "metrics"};

// Files a stage must leave behind; later stages check for them.
std::vector<std::string> key_outputs(Stage s) {
  switch (s) {
    case Stage::simulate: return {"fine_eta.swda", "fine_state_final.swda"};
    case Stage::calibrate: return {"dataset.swda", "dataset.meta"};
    case Stage::train: return {"train.meta"};
    case Stage::generate: return {"dictionary.swda", "dictionary.meta"};
    case Stage::forecast: return {"forecast_crps.csv", "forecast_rank.csv"};
    case Stage::assimilate: return {"da_cycles.csv", "da_summary.csv"};
    case Stage::metrics: return {"metrics.json"};
  }
  return {};
}

std::ofstream open_csv(const fs::path& p) {
  std::ofstream out(p);
  if (!out) throw StageError("cannot write " + p.string());
  out << std::setprecision(12);
  return out;
}

State restrict_state(const State& s, const Grid& coarse) {
  return State{restrict_to_coarse(s.u, coarse), restrict_to_coarse(s.v, coarse),
               restrict_to_coarse(s.eta, coarse)};
}

// Deterministic fine run replayed forward on demand.
class FineTruth {
 public:
  FineTruth(const Grid& fine, const Grid& coarse, const PhysParams& p, double dt)
      : coarse_(coarse), p_(p), dt_(dt), state_(initial_state(fine, p)) {}

  State coarse_at(int step) {
    if (step < step_) throw InvalidArgument("truth replay cannot go backwards");
    while (step_ < step) {
      state_ = step_deterministic(state_, p_, dt_);
      ++step_;
    }
    return restrict_state(state_, coarse_);
  }

 private:
  Grid coarse_;
  PhysParams p_;
  double dt_;
  State state_;
  int step_ = 0;
};

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw StageError("cannot read " + p.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  return rows;
}

}  // namespace

std::string_view stage_name(Stage s) { return kNames[static_cast<int>(s)]; }

std::optional<Stage> parse_stage(std::string_view name) {
  for (Stage s : all_stages())
    if (stage_name(s) == name) return s;
  return std::nullopt;
}

const std::vector<Stage>& all_stages() {
  static const std::vector<Stage> stages{Stage::simulate, Stage::calibrate, Stage::train,    Stage::generate,
                                         Stage::forecast, Stage::assimilate, Stage::metrics};
  return stages;
}

std::vector<Stage> stage_prerequisites(Stage s) {
  switch (s) {
    case Stage::simulate: return {};
    case Stage::calibrate: return {Stage::simulate};
    case Stage::train: return {Stage::calibrate};
    case Stage::generate: return {Stage::calibrate, Stage::train};
    case Stage::forecast: return {Stage::generate};
    case Stage::assimilate: return {Stage::generate};
    case Stage::metrics: return {Stage::train, Stage::forecast, Stage::assimilate};
  }
  return {};
}

fs::path resolve_output_root(const std::optional<std::string>& cli_out) {
  if (cli_out && !cli_out->empty()) return *cli_out;
  if (const char* env = std::getenv("SWDA_OUT"); env && *env) return env;
  return "swda-out";
}

Pipeline::Pipeline(ExperimentConfig cfg, fs::path out_dir, std::ostream* log)
    : cfg_(std::move(cfg)), out_(std::move(out_dir)), log_(log) {
  cfg_.validate();
}

std::uint64_t Pipeline::stage_seed(Stage s) const { return derive_seed(cfg_.seed, stage_name(s)); }

template <class... Args>
void Pipeline::say(const Args&... args) const {
  if (!log_) return;
  *log_ << '[' << stage_name(current_) << "] ";
  (*log_ << ... << args) << std::endl;
}

void Pipeline::manifest(const std::string& json_line) const {
  std::ofstream out(out_ / "manifest.jsonl", std::ios::app);
  if (!out) throw StageError("cannot append to manifest.jsonl");
  out << json_line << '\n';
}

void Pipeline::require_inputs(Stage s) const {
  for (Stage pre : stage_prerequisites(s))
    for (const auto& f : key_outputs(pre))
      if (!fs::exists(out_ / f))
        throw StageError(std::string(stage_name(s)) + " needs " + f + " from stage '" +
                         std::string(stage_name(pre)) + "'; run it first");
}

StageResult Pipeline::run(Stage s) {
  current_ = s;
  std::error_code ec;
  fs::create_directories(out_, ec);
  if (ec) throw StageError("cannot create output directory " + out_.string() + ": " + ec.message());
  require_inputs(s);

  StageResult result{s, stage_seed(s), 0.0, {}};
  json start{{"event", "start"},
             {"stage", stage_name(s)},
             {"version", SWDA_VERSION},
             {"master_seed", cfg_.seed},
             {"seed", result.seed},
             {"seed_derivation", "derive_seed(master_seed, \"" + std::string(stage_name(s)) + "\")"},
             {"config", cfg_.flatten()}};
  manifest(start.dump());

  const auto t0 = std::chrono::steady_clock::now();
  json finish{{"event", "finish"}, {"stage", stage_name(s)}};
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };
  try {
    switch (s) {
      case Stage::simulate: result.outputs = simulate(); break;
      case Stage::calibrate: result.outputs = calibrate(); break;
      case Stage::train: result.outputs = train(); break;
      case Stage::generate: result.outputs = generate(); break;
      case Stage::forecast: result.outputs = forecast(); break;
      case Stage::assimilate: result.outputs = assimilate(); break;
      case Stage::metrics: result.outputs = metrics(); break;
    }
  } catch (const std::exception& e) {
    for (const auto& f : key_outputs(s)) fs::remove(out_ / f, ec);
    finish["status"] = "failed";
    finish["wall_seconds"] = elapsed();
    finish["error"] = e.what();
    manifest(finish.dump());
    throw;
  }
  result.wall_seconds = elapsed();
  std::vector<std::string> names;
  for (const auto& p : result.outputs) names.push_back(p.string());
  finish["status"] = "ok";
  finish["wall_seconds"] = result.wall_seconds;
  finish["outputs"] = names;
  manifest(finish.dump());
  say("done in ", result.wall_seconds, " s");
  return result;
}

std::vector<StageResult> Pipeline::run_all() {
  std::vector<StageResult> out;
  for (Stage s : all_stages()) out.push_back(run(s));
  return out;
}

namespace {

struct Grids {
  Grid fine;
  Grid coarse;
};

Grids make_grids(const ExperimentConfig& c) {
  return {Grid(c.grid.fine_nx, c.grid.fine_ny), Grid(c.grid.coarse_nx, c.grid.coarse_ny)};
}

PhysParams physics_on(const ExperimentConfig& c, const Grid& fine, const Grid& target) {
  PhysParams p = c.physics;
  p.bathymetry.reset();
  if (c.bathymetry_path.empty()) return p;
  std::vector<NamedField> fields;
  try {
    fields = read_snapshot(c.bathymetry_path);
  } catch (const Error& e) {
    throw ConfigError("bathymetry: " + std::string(e.what()));
  }
  if (fields.empty()) throw ConfigError("bathymetry file holds no fields");
  Field b = std::move(fields.front().field);
  if (!(b.grid() == fine)) throw ConfigError("bathymetry must be given on the fine grid");
  p.bathymetry = target == fine ? b : restrict_to_coarse(b, target);
  return p;
}

}  // namespace

std::vector<fs::path> Pipeline::simulate() {
  const auto [fine, coarse] = make_grids(cfg_);
  const PhysParams p = physics_on(cfg_, fine, fine);
  const int stride = cfg_.time.snapshot_stride;
  State s = initial_state(fine, p);
  const fs::path eta_path = path("fine_eta.swda");
  SnapshotWriter writer(eta_path, fine);
  writer.append("eta_0", s.eta);
  for (int n = 1; n <= cfg_.time.fine_steps; ++n) {
    s = step_deterministic(s, p, cfg_.time.dt);
    if (n % stride == 0) writer.append("eta_" + std::to_string(n), s.eta);
    if (log_ && n % 1000 == 0) say("step ", n, "/", cfg_.time.fine_steps);
  }
  writer.close();
  const fs::path final_path = path("fine_state_final.swda");
  const std::vector<NamedField> final_fields{{"u", s.u}, {"v", s.v}, {"eta", s.eta}};
  write_snapshot(final_path, final_fields);
  say(writer.count(), " eta snapshots");
  return {eta_path, names_sidecar(eta_path), final_path, names_sidecar(final_path)};
}

std::vector<fs::path> Pipeline::calibrate() {
  const auto [fine, coarse] = make_grids(cfg_);
  SnapshotReader reader(path("fine_eta.swda"));
  if (!(reader.grid() == fine)) throw StageError("fine_eta.swda grid does not match the configured fine grid");
  const int max_iter = cfg_.calibration.max_iter > 0 ? cfg_.calibration.max_iter : 10 * static_cast<int>(coarse.size());
  IncrementBuilder builder(CutoffSpec{cfg_.grid.f_max}, coarse);
  std::vector<CalibrationSolution> solutions;
  const fs::path csv_path = path("calibration.csv");
  auto csv = open_csv(csv_path);
  csv << "index,time,residual,iterations,converged\n";
  int unconverged = 0;
  while (auto nf = reader.next()) {
    const auto& name = nf->name;
    if (name.rfind("eta_", 0) != 0) throw StageError("unexpected field '" + name + "' in fine_eta.swda");
    const double time = std::stoi(name.substr(4)) * cfg_.time.dt;
    auto inc = builder.push(time, nf->field);
    if (!inc) continue;
    CalibrationSolution sol =
        solve_stream_function(inc->delta_eta, inc->grad_x, inc->grad_y, cfg_.calibration.tol, max_iter);
    if (!sol.converged) ++unconverged;
    csv << solutions.size() << ',' << inc->time << ',' << sol.residual << ',' << sol.iterations << ','
        << (sol.converged ? 1 : 0) << '\n';
    solutions.push_back(std::move(sol));
    if (log_ && solutions.size() % 1000 == 0) say(solutions.size(), " increments solved");
  }
  if (solutions.size() < 2) throw StageError("need at least three fine snapshots to calibrate");
  if (unconverged) say(unconverged, " of ", solutions.size(), " solves hit max_iter");
  const TrainingDataset d = build_training_dataset(solutions, cfg_.calibration.arcsinh_scale);
  save_dataset(d, path("dataset.swda"), path("dataset.meta"));
  return {path("dataset.swda"), names_sidecar(path("dataset.swda")), path("dataset.meta"), csv_path};
}

std::vector<fs::path> Pipeline::train() {
  const TrainingDataset d = load_dataset(path("dataset.swda"), path("dataset.meta"));
  const DiffusionSchedule schedule = make_schedule(cfg_.dsb.k_steps, cfg_.dsb.gamma_min, cfg_.dsb.gamma_max);
  TrainConfig tc = cfg_.dsb.train;
  tc.seed = stage_seed(Stage::train);

  RandomStream pick(derive_seed(tc.seed, "score-reference"));
  std::vector<Eigen::Index> cols(static_cast<std::size_t>(d.samples.cols()));
  std::iota(cols.begin(), cols.end(), Eigen::Index{0});
  std::shuffle(cols.begin(), cols.end(), pick.engine());
  cols.resize(std::min<std::size_t>(cols.size(), static_cast<std::size_t>(cfg_.dsb.score_samples)));
  Eigen::MatrixXd reference(d.samples.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) reference.col(static_cast<Eigen::Index>(c)) = d.samples.col(cols[c]);

  std::vector<fs::path> outputs;
  std::vector<double> scores;
  auto fid = open_csv(path("fid.csv"));
  fid << "round,score\n";
  auto loss_csv = open_csv(path("train_loss.csv"));
  loss_csv << "round,side,iteration,loss\n";
  const int loss_stride = std::max(1, tc.iters_per_step / 500);

  auto on_half = [&](int r, Side side, const std::vector<double>& losses) {
    for (std::size_t i = 0; i < losses.size(); i += static_cast<std::size_t>(loss_stride))
      loss_csv << r + 1 << ',' << (side == Side::forward ? "forward" : "backward") << ',' << i << ','
               << losses[i] << '\n';
    if (!losses.empty())
      say("round ", r + 1, side == Side::forward ? " forward" : " backward", " loss ", losses.back());
  };
  auto on_round = [&](const DsbModel& m) {
    const fs::path ck = path("dsb_round_" + std::to_string(m.round) + ".ckpt");
    save_checkpoint(m, ck);
    outputs.push_back(ck);
    RandomStream srng(derive_seed(tc.seed, "score-" + std::to_string(m.round)));
    const double score = frechet_score(sample(m, static_cast<int>(reference.cols()), srng), reference);
    scores.push_back(score);
    fid << m.round << ',' << score << '\n';
    fid.flush();
    say("round ", m.round, " score ", score);
  };
  train_dsb(d.samples, schedule, tc, on_round, on_half);

  int selected = 0;
  if (cfg_.dsb.select == "best") {
    selected = 1 + static_cast<int>(std::min_element(scores.begin(), scores.end()) - scores.begin());
  } else {
    selected = std::stoi(cfg_.dsb.select);
  }
  std::ofstream meta(path("train.meta"));
  meta << "selected_round = " << selected << "\n"
       << "rounds = " << scores.size() << "\n"
       << "selected_checkpoint = dsb_round_" << selected << ".ckpt\n";
  if (!meta) throw StageError("cannot write train.meta");
  say("selected round ", selected);
  outputs.insert(outputs.end(), {path("fid.csv"), path("train_loss.csv"), path("train.meta")});
  return outputs;
}

std::vector<fs::path> Pipeline::generate() {
  const auto meta = detail::read_meta(path("train.meta"));
  const int selected = static_cast<int>(detail::meta_double(meta, "selected_round"));
  const fs::path ck = path("dsb_round_" + std::to_string(selected) + ".ckpt");
  if (!fs::exists(ck)) throw StageError("selected checkpoint " + ck.string() + " is missing");
  const DsbModel model = load_checkpoint(ck);
  const TrainingDataset d = load_dataset(path("dataset.swda"), path("dataset.meta"));
  RandomStream rng(stage_seed(Stage::generate));
  const NoiseDictionary dict = build_dictionary(model, d, cfg_.dictionary.size, cfg_.dictionary.scale, rng);
  save_dictionary(dict, path("dictionary.swda"), path("dictionary.meta"));
  say(dict.size(), " dictionary samples from round ", selected);
  return {path("dictionary.swda"), names_sidecar(path("dictionary.swda")), path("dictionary.meta")};
}

std::vector<fs::path> Pipeline::forecast() {
  const auto [fine, coarse] = make_grids(cfg_);
  const NoiseDictionary dict = load_dictionary(path("dictionary.swda"), path("dictionary.meta"));
  if (!(dict.grid == coarse)) throw StageError("dictionary grid does not match the coarse grid");
  const PhysParams fine_p = physics_on(cfg_, fine, fine);
  const PhysParams coarse_p = physics_on(cfg_, fine, coarse);
  const auto& fc = cfg_.forecast;
  const double dt = cfg_.time.dt;
  const std::uint64_t seed = stage_seed(Stage::forecast);

  std::map<int, State> truth;
  {
    FineTruth replay(fine, coarse, fine_p, dt);
    for (int n = 0; n <= fc.total_steps; n += fc.record_stride) truth.emplace(n, replay.coarse_at(n));
  }

  std::vector<std::pair<int, int>> spots;
  if (fc.spaghetti_points > 0) {
    const int m = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(fc.spaghetti_points))));
    spots = observation_lattice(coarse, m * m);
    spots.resize(static_cast<std::size_t>(fc.spaghetti_points));
  }
  const int longest = *std::max_element(fc.horizons.begin(), fc.horizons.end());

  auto crps_csv = open_csv(path("forecast_crps.csv"));
  crps_csv << "horizon,variable,crps\n";
  auto rank_csv = open_csv(path("forecast_rank.csv"));
  rank_csv << "horizon,variable,rank,count\n";
  auto spag_csv = open_csv(path("forecast_spaghetti.csv"));
  spag_csv << "step,time,location_i,location_j,truth";
  for (int k = 0; k < fc.n_ens; ++k) spag_csv << ",member_" << k;
  spag_csv << '\n';

  const std::array<const char*, 3> var_names{"eta", "u", "v"};
  auto component = [](const State& s, int v) -> const Field& { return v == 0 ? s.eta : v == 1 ? s.u : s.v; };
  std::vector<double> values(static_cast<std::size_t>(fc.n_ens));

  for (int h : fc.horizons) {
    const int repeats = fc.total_steps / h;
    std::array<double, 3> crps_sum{};
    std::size_t crps_events = 0;
    std::vector<RankHistogram> ranks(3, RankHistogram(fc.n_ens));
    RandomStream rank_rng(derive_seed(seed, "rank-" + std::to_string(h)));
    for (int r = 0; r < repeats; ++r) {
      const int start = r * h;
      Ensemble e = Ensemble::replicate(truth.at(start), fc.n_ens,
                                       derive_seed(seed, "h" + std::to_string(h) + "-r" + std::to_string(r)));
      const bool spaghetti = h == longest && r == 0 && !spots.empty();
      for (int n = 0; n < h; n += fc.record_stride) {
        if (spaghetti) {
          for (const auto& [i, j] : spots) {
            spag_csv << n << ',' << n * dt << ',' << i << ',' << j << ',' << truth.at(start + n).eta(i, j);
            for (const auto& m : e.members) spag_csv << ',' << m.eta(i, j);
            spag_csv << '\n';
          }
        }
        try {
          e = propagate_ensemble(std::move(e), dict, coarse_p, dt, fc.record_stride);
        } catch (const NumericalError& err) {
          throw StageError("forecast horizon " + std::to_string(h) + " repeat " + std::to_string(r) + ": " +
                           err.what());
        }
      }
      const State& t = truth.at(start + h);
      if (spaghetti) {
        for (const auto& [i, j] : spots) {
          spag_csv << h << ',' << h * dt << ',' << i << ',' << j << ',' << t.eta(i, j);
          for (const auto& m : e.members) spag_csv << ',' << m.eta(i, j);
          spag_csv << '\n';
        }
      }
      for (std::size_t k = 0; k < coarse.size(); ++k) {
        for (int v = 0; v < 3; ++v) {
          for (std::size_t m = 0; m < e.size(); ++m) values[m] = component(e.members[m], v)[k];
          const double y = component(t, v)[k];
          crps_sum[static_cast<std::size_t>(v)] += crps(values, y);
          ranks[static_cast<std::size_t>(v)].add(values, y, rank_rng);
        }
      }
      crps_events += coarse.size();
    }
    for (int v = 0; v < 3; ++v) {
      crps_csv << h << ',' << var_names[static_cast<std::size_t>(v)] << ','
               << crps_sum[static_cast<std::size_t>(v)] / static_cast<double>(crps_events) << '\n';
      const auto& counts = ranks[static_cast<std::size_t>(v)].counts();
      for (std::size_t k = 0; k < counts.size(); ++k)
        rank_csv << h << ',' << var_names[static_cast<std::size_t>(v)] << ',' << k << ',' << counts[k] << '\n';
    }
    say("horizon ", h, " eta crps ", crps_sum[0] / static_cast<double>(crps_events));
  }
  return {path("forecast_crps.csv"), path("forecast_rank.csv"), path("forecast_spaghetti.csv")};
}

std::vector<fs::path> Pipeline::assimilate() {
  const auto [fine, coarse] = make_grids(cfg_);
  const NoiseDictionary dict = load_dictionary(path("dictionary.swda"), path("dictionary.meta"));
  if (!(dict.grid == coarse)) throw StageError("dictionary grid does not match the coarse grid");
  const PhysParams fine_p = physics_on(cfg_, fine, fine);
  const auto& dc = cfg_.da;
  const std::uint64_t seed = stage_seed(Stage::assimilate);

  AssimilationSetup setup;
  setup.physics = physics_on(cfg_, fine, coarse);
  setup.dt = cfg_.time.dt;
  setup.total_steps = dc.total_steps;
  setup.filter = dc.filter;
  setup.obs = ObsSpec{dc.d_obs, dc.sigma_obs};

  FineTruth replay(fine, coarse, fine_p, setup.dt);
  const State start = replay.coarse_at(0);
  TruthSource truth = [&replay](int step) { return replay.coarse_at(step).eta; };
  const Ensemble e0 = Ensemble::replicate(start, dc.n_ens, derive_seed(seed, "members"));
  RandomStream rng(derive_seed(seed, "filter"));

  std::vector<fs::path> outputs;
  EnsembleHook hook;
  if (dc.snapshot_stride > 0) {
    hook = [&](int cycle, double, const Ensemble& e) {
      if ((cycle + 1) % dc.snapshot_stride != 0) return;
      std::vector<NamedField> fields;
      fields.push_back({"truth_eta", truth((cycle + 1) * setup.filter.window_steps)});
      for (std::size_t m = 0; m < e.size(); ++m) fields.push_back({"eta_m" + std::to_string(m), e.members[m].eta});
      const fs::path p = path("da_ensemble_c" + std::to_string(cycle) + ".swda");
      write_snapshot(p, fields);
      outputs.push_back(p);
    };
  }
  DaMetrics metrics;
  try {
    metrics = assimilate_run(truth, e0, dict, setup, rng, hook);
  } catch (const NumericalError& err) {
    throw StageError(err.what());
  }

  {
    auto csv = open_csv(path("da_cycles.csv"));
    write_cycle_csv(csv, metrics.records);
  }
  auto sum = open_csv(path("da_summary.csv"));
  sum << "location_i,location_j,mean_bias,mean_abs_bias,mean_rmse\n";
  for (const auto& l : metrics.locations)
    sum << l.location_i << ',' << l.location_j << ',' << l.mean_bias << ',' << l.mean_abs_bias << ','
        << l.mean_rmse << '\n';
  std::ofstream meta(path("da.meta"));
  meta << std::setprecision(17) << "cycles = " << metrics.cycles << "\nfailed_cycles = " << metrics.failed_cycles
       << "\nmean_acceptance = " << metrics.mean_acceptance << '\n';
  say(metrics.cycles, " cycles, best |bias| ", metrics.best_bias().mean_abs_bias, ", best rmse ",
      metrics.best_rmse().mean_rmse, ", failed ", metrics.failed_cycles);
  outputs.insert(outputs.begin(), {path("da_cycles.csv"), path("da_summary.csv"), path("da.meta")});
  return outputs;
}

std::vector<fs::path> Pipeline::metrics() {
  json j;
  j["version"] = SWDA_VERSION;
  j["seed"] = cfg_.seed;

  const auto train_meta = detail::read_meta(path("train.meta"));
  j["dsb"]["selected_round"] = static_cast<int>(detail::meta_double(train_meta, "selected_round"));
  json scores = json::array();
  for (const auto& row : read_csv(path("fid.csv")))
    scores.push_back({{"round", std::stoi(row.at(0))}, {"score", std::stod(row.at(1))}});
  j["dsb"]["scores"] = scores;

  json fc = json::array();
  for (const auto& row : read_csv(path("forecast_crps.csv")))
    fc.push_back({{"horizon", std::stoi(row.at(0))}, {"variable", row.at(1)}, {"crps", std::stod(row.at(2))}});
  j["forecast"]["crps"] = fc;

  json locs = json::array();
  double best_bias = 0.0, best_rmse = 0.0, worst_bias = 0.0, worst_rmse = 0.0;
  bool first = true;
  for (const auto& row : read_csv(path("da_summary.csv"))) {
    const double ab = std::stod(row.at(3));
    const double rm = std::stod(row.at(4));
    locs.push_back({{"location_i", std::stoi(row.at(0))},
                    {"location_j", std::stoi(row.at(1))},
                    {"mean_bias", std::stod(row.at(2))},
                    {"mean_abs_bias", ab},
                    {"mean_rmse", rm}});
    if (first) {
      best_bias = worst_bias = ab;
      best_rmse = worst_rmse = rm;
      first = false;
    }
    best_bias = std::min(best_bias, ab);
    worst_bias = std::max(worst_bias, ab);
    best_rmse = std::min(best_rmse, rm);
    worst_rmse = std::max(worst_rmse, rm);
  }
  j["assimilation"]["locations"] = locs;
  j["assimilation"]["best_abs_bias"] = best_bias;
  j["assimilation"]["best_rmse"] = best_rmse;
  j["assimilation"]["worst_abs_bias"] = worst_bias;
  j["assimilation"]["worst_rmse"] = worst_rmse;
  if (fs::exists(path("da.meta"))) {
    const auto m = detail::read_meta(path("da.meta"));
    j["assimilation"]["cycles"] = static_cast<int>(detail::meta_double(m, "cycles"));
    j["assimilation"]["failed_cycles"] = static_cast<int>(detail::meta_double(m, "failed_cycles"));
    j["assimilation"]["mean_acceptance"] = detail::meta_double(m, "mean_acceptance");
  }

  std::ofstream out(path("metrics.json"));
  out << j.dump(2) << '\n';
  if (!out) throw StageError("cannot write metrics.json");
  return {path("metrics.json")};
}

}  // namespace swda
