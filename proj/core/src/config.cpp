#include "swda/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

#include "meta_io.hpp"
#include "swda/error.hpp"

namespace swda {

namespace {

namespace pt = boost::property_tree;

struct Binding {
  std::function<void(const std::string&)> set;
  std::function<std::string()> get;
};

int to_int(const std::string& s) {
  std::size_t pos = 0;
  const long long v = std::stoll(s, &pos);
  if (pos != s.size()) throw std::invalid_argument("trailing characters");
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) throw std::out_of_range("int");
  return static_cast<int>(v);
}

double to_double(const std::string& s) {
  std::size_t pos = 0;
  const double v = std::stod(s, &pos);
  if (pos != s.size()) throw std::invalid_argument("trailing characters");
  return v;
}

bool to_bool(const std::string& s) {
  if (s == "true" || s == "1" || s == "on" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "off" || s == "no") return false;
  throw std::invalid_argument("not a boolean");
}

std::vector<int> to_int_list(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) out.push_back(to_int(detail::trim(item)));
  if (out.empty()) throw std::invalid_argument("empty list");
  return out;
}

Binding bind(int& v) {
  return {[&v](const std::string& s) { v = to_int(s); }, [&v] { return std::to_string(v); }};
}
Binding bind(double& v) {
  return {[&v](const std::string& s) { v = to_double(s); }, [&v] { return detail::fmt_exact(v); }};
}
Binding bind(bool& v) {
  return {[&v](const std::string& s) { v = to_bool(s); }, [&v] { return std::string(v ? "true" : "false"); }};
}
Binding bind(std::string& v) {
  return {[&v](const std::string& s) { v = s; }, [&v] { return v; }};
}
Binding bind(std::uint64_t& v) {
  return {[&v](const std::string& s) {
            std::size_t pos = 0;
            if (!s.empty() && s[0] == '-') throw std::invalid_argument("negative");
            v = std::stoull(s, &pos);
            if (pos != s.size()) throw std::invalid_argument("trailing characters");
          },
          [&v] { return std::to_string(v); }};
}
Binding bind(std::vector<int>& v) {
  return {[&v](const std::string& s) { v = to_int_list(s); },
          [&v] {
            std::string out;
            for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
            return out;
          }};
}
Binding bind(OptimizerKind& v) {
  return {[&v](const std::string& s) {
            if (s == "sgd") v = OptimizerKind::sgd_momentum;
            else if (s == "adam") v = OptimizerKind::adam;
            else throw std::invalid_argument("expected sgd or adam");
          },
          [&v] { return std::string(v == OptimizerKind::adam ? "adam" : "sgd"); }};
}

using Table = std::map<std::string, std::map<std::string, Binding>>;

Table bindings(ExperimentConfig& c) {
  Table t;
  auto& g = t["grid"];
  g["fine_nx"] = bind(c.grid.fine_nx);
  g["fine_ny"] = bind(c.grid.fine_ny);
  g["coarse_nx"] = bind(c.grid.coarse_nx);
  g["coarse_ny"] = bind(c.grid.coarse_ny);
  g["f_max"] = bind(c.grid.f_max);

  auto& p = t["physics"];
  p["fr"] = bind(c.physics.fr);
  p["ro"] = bind(c.physics.ro);
  p["f_cor"] = bind(c.physics.f_cor);
  p["nu"] = bind(c.physics.nu);
  p["c_d"] = bind(c.physics.c_d);
  p["a_init"] = bind(c.physics.a_init);
  p["wind"] = bind(c.physics.wind_on);
  p["bathymetry"] = bind(c.bathymetry_path);

  auto& tm = t["time"];
  tm["dt"] = bind(c.time.dt);
  tm["fine_steps"] = bind(c.time.fine_steps);
  tm["snapshot_stride"] = bind(c.time.snapshot_stride);

  auto& cal = t["calibration"];
  cal["tol"] = bind(c.calibration.tol);
  cal["max_iter"] = bind(c.calibration.max_iter);
  cal["arcsinh_scale"] = bind(c.calibration.arcsinh_scale);

  auto& d = t["dsb"];
  d["k_steps"] = bind(c.dsb.k_steps);
  d["gamma_min"] = bind(c.dsb.gamma_min);
  d["gamma_max"] = bind(c.dsb.gamma_max);
  d["rounds"] = bind(c.dsb.train.n_dsb_steps);
  d["iters"] = bind(c.dsb.train.iters_per_step);
  d["batch"] = bind(c.dsb.train.batch_size);
  d["lr"] = bind(c.dsb.train.learning_rate);
  d["optimizer"] = bind(c.dsb.train.optimizer);
  d["momentum"] = bind(c.dsb.train.momentum);
  d["cache_size"] = bind(c.dsb.train.cache_size);
  d["cache_refresh"] = bind(c.dsb.train.cache_refresh);
  d["loss_weight_power"] = bind(c.dsb.train.loss_weight_power);
  d["ema_decay"] = bind(c.dsb.train.ema_decay);
  d["standardize"] = bind(c.dsb.train.standardize);
  d["hidden"] = bind(c.dsb.train.net.hidden);
  d["hidden_layers"] = bind(c.dsb.train.net.hidden_layers);
  d["embed_freqs"] = bind(c.dsb.train.net.embed_freqs);
  d["select"] = bind(c.dsb.select);
  d["score_samples"] = bind(c.dsb.score_samples);

  auto& n = t["dictionary"];
  n["size"] = bind(c.dictionary.size);
  n["scale"] = bind(c.dictionary.scale);

  auto& f = t["forecast"];
  f["n_ens"] = bind(c.forecast.n_ens);
  f["total_steps"] = bind(c.forecast.total_steps);
  f["horizons"] = bind(c.forecast.horizons);
  f["record_stride"] = bind(c.forecast.record_stride);
  f["spaghetti_points"] = bind(c.forecast.spaghetti_points);

  auto& a = t["filter"];
  a["n_ens"] = bind(c.da.n_ens);
  a["total_steps"] = bind(c.da.total_steps);
  a["window"] = bind(c.da.filter.window_steps);
  a["d_obs"] = bind(c.da.d_obs);
  a["sigma_obs"] = bind(c.da.sigma_obs);
  a["ess_threshold"] = bind(c.da.filter.ess_threshold_frac);
  a["jitter_moves"] = bind(c.da.filter.jitter_moves);
  a["jitter_rho"] = bind(c.da.filter.jitter_rho);
  a["max_stages"] = bind(c.da.filter.max_temper_stages);
  a["snapshot_stride"] = bind(c.da.snapshot_stride);

  t["run"]["seed"] = bind(c.seed);
  return t;
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

}  // namespace

void ExperimentConfig::validate() const {
  const auto& g = grid;
  require(g.fine_nx >= 4 && g.fine_ny >= 4 && g.fine_nx % 2 == 0 && g.fine_ny % 2 == 0,
          "fine grid must be even and at least 4 points per side");
  require(g.coarse_nx >= 4 && g.coarse_ny >= 4 && g.coarse_nx % 2 == 0 && g.coarse_ny % 2 == 0,
          "coarse grid must be even and at least 4 points per side");
  require(g.fine_nx % g.coarse_nx == 0 && g.fine_ny % g.coarse_ny == 0,
          "fine grid must be an integer multiple of the coarse grid");
  require(g.f_max > 0, "f_max must be positive");
  require(g.f_max <= g.coarse_nx / 2 && g.f_max <= g.coarse_ny / 2, "f_max exceeds the coarse-grid Nyquist wavenumber");
  try {
    physics.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  require(physics.f_cor != 0.0, "f_cor must be nonzero for the geostrophic initial state");
  require(time.dt > 0.0, "dt must be positive");
  require(time.fine_steps >= 2, "fine_steps must be at least 2");
  require(time.snapshot_stride >= 1 && time.snapshot_stride <= time.fine_steps, "snapshot_stride out of range");
  require(calibration.tol > 0.0 && calibration.max_iter >= 0, "calibration tol/max_iter invalid");
  require(calibration.arcsinh_scale > 0.0, "arcsinh_scale must be positive");
  require(dsb.k_steps >= 2 && dsb.gamma_min > 0.0 && dsb.gamma_max >= dsb.gamma_min, "invalid diffusion schedule");
  try {
    dsb.train.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  require(dsb.train.net.hidden > 0 && dsb.train.net.hidden_layers > 0 && dsb.train.net.embed_freqs >= 0,
          "invalid network shape");
  if (dsb.select != "best") {
    int r = 0;
    try {
      r = to_int(dsb.select);
    } catch (const std::exception&) {
      throw ConfigError("dsb.select must be 'best' or a round number");
    }
    require(r >= 1 && r <= dsb.train.n_dsb_steps, "dsb.select round out of range");
  }
  require(dsb.score_samples >= 2, "score_samples must be at least 2");
  require(dictionary.size >= 2 && dictionary.scale >= 0.0, "dictionary size must be >= 2 and scale >= 0");
  require(forecast.n_ens >= 1 && forecast.total_steps >= 1, "forecast n_ens/total_steps must be positive");
  require(forecast.record_stride >= 1, "record_stride must be positive");
  for (int h : forecast.horizons)
    require(h >= 1 && forecast.total_steps % h == 0 && h % forecast.record_stride == 0,
            "each horizon must divide total_steps and be a multiple of record_stride");
  require(forecast.spaghetti_points >= 0, "spaghetti_points must be >= 0");
  require(da.n_ens >= 1 && da.sigma_obs > 0.0 && da.d_obs >= 1, "invalid filter sizes");
  try {
    da.filter.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  require(da.total_steps >= da.filter.window_steps && da.total_steps % da.filter.window_steps == 0,
          "filter total_steps must be a multiple of the window");
  const int m = static_cast<int>(std::lround(std::sqrt(static_cast<double>(da.d_obs))));
  require(m * m == da.d_obs && m <= g.coarse_nx && m <= g.coarse_ny, "d_obs must be a square that fits the coarse grid");
  require(da.snapshot_stride >= 0, "filter snapshot_stride must be >= 0");
}

std::map<std::string, std::string> ExperimentConfig::flatten() const {
  ExperimentConfig copy = *this;
  std::map<std::string, std::string> out;
  for (const auto& [section, keys] : bindings(copy))
    for (const auto& [key, b] : keys) out[section + "." + key] = b.get();
  return out;
}

ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config syntax: ") + e.what());
  }
  ExperimentConfig cfg;
  auto table = bindings(cfg);
  for (const auto& [section, node] : tree) {
    if (node.empty() && !node.data().empty())
      throw ConfigError("key '" + section + "' outside any section");
    const auto sit = table.find(section);
    if (sit == table.end()) throw ConfigError("unknown config section [" + section + "]");
    for (const auto& [key, leaf] : node) {
      const auto kit = sit->second.find(key);
      if (kit == sit->second.end()) throw ConfigError("unknown config key " + section + "." + key);
      try {
        kit->second.set(detail::trim(leaf.data()));
      } catch (const std::exception&) {
        throw ConfigError("invalid value for " + section + "." + key + ": '" + leaf.data() + "'");
      }
    }
  }
  if (!cfg.bathymetry_path.empty() && !base_dir.empty()) {
    const std::filesystem::path b(cfg.bathymetry_path);
    if (b.is_relative()) cfg.bathymetry_path = (base_dir / b).string();
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

}  // namespace swda
