#include "swda/noise_dictionary.hpp"

#include <algorithm>
#include <cmath>

#include "meta_io.hpp"
#include "swda/error.hpp"
#include "swda/snapshot_io.hpp"

namespace swda {

Field NoiseDictionary::scaled(std::size_t index) const {
  if (index >= samples.size()) throw InvalidArgument("dictionary index out of range");
  return samples[index] * scale;
}

NoiseDictionary make_dictionary(std::vector<Field> samples, double scale) {
  if (samples.size() < 2) throw InvalidArgument("noise dictionary needs at least 2 samples");
  if (!(scale >= 0.0) || !std::isfinite(scale)) throw InvalidArgument("noise scale must be finite and >= 0");
  const Grid g = samples.front().grid();
  for (const auto& s : samples) {
    if (!(s.grid() == g)) throw InvalidArgument("noise samples on different grids");
    if (!s.all_finite()) throw NumericalError("non-finite generated noise sample");
  }

  NoiseDictionary d;
  d.grid = g;
  d.scale = scale;
  d.local_mean = Field(g);
  d.local_std = Field(g);
  const double inv_n = 1.0 / static_cast<double>(samples.size());
  for (const auto& s : samples) d.local_mean += s;
  d.local_mean *= inv_n;
  for (const auto& s : samples)
    for (std::size_t k = 0; k < s.size(); ++k) {
      const double e = s[k] - d.local_mean[k];
      d.local_std[k] += e * e;
    }
  for (double& v : d.local_std.data()) v = std::sqrt(v * inv_n);

  for (auto& s : samples)
    for (std::size_t k = 0; k < s.size(); ++k)
      s[k] = std::clamp(s[k], d.local_mean[k] - d.local_std[k], d.local_mean[k] + d.local_std[k]);
  d.samples = std::move(samples);
  return d;
}

NoiseDictionary build_dictionary(const DsbModel& model, const TrainingDataset& data, int n, double scale,
                                 RandomStream& rng, int batch) {
  if (n < 2) throw InvalidArgument("build_dictionary: n must be at least 2");
  if (batch < 1) throw InvalidArgument("build_dictionary: batch must be positive");
  if (static_cast<std::size_t>(model.dim()) != data.grid.size())
    throw InvalidArgument("build_dictionary: model dimension does not match the dataset grid");
  std::vector<Field> fields;
  fields.reserve(static_cast<std::size_t>(n));
  while (static_cast<int>(fields.size()) < n) {
    const int m = std::min(batch, n - static_cast<int>(fields.size()));
    const Eigen::MatrixXd x = sample(model, m, rng);
    for (Eigen::Index c = 0; c < x.cols(); ++c)
      fields.push_back(invert_transform(data, std::span<const double>(x.col(c).data(), static_cast<std::size_t>(x.rows()))));
  }
  return make_dictionary(std::move(fields), scale);
}

std::uint32_t draw_index(const NoiseDictionary& dict, RandomStream& rng) {
  if (dict.samples.empty()) throw InvalidArgument("draw from an empty dictionary");
  return static_cast<std::uint32_t>(rng.index(dict.samples.size()));
}

Field draw(const NoiseDictionary& dict, RandomStream& rng) { return dict.scaled(draw_index(dict, rng)); }

StateIncrement state_increment(const State& s, const Field& psi, const PhysParams& p) {
  validate_state(s);
  if (!(psi.grid() == s.grid())) throw InvalidArgument("state_increment: grid mismatch");
  const Grid& g = s.grid();
  const Spectrum sp(psi);
  const Field psi_x = sp.derivative(Axis::x, 1);
  const Field psi_y = sp.derivative(Axis::y, 1);
  const Field psi_xx = sp.derivative(Axis::x, 2);
  const Field psi_yy = sp.derivative(Axis::y, 2);
  const Field psi_xy = sp.dxdy();
  const Spectrum su(s.u);
  const Spectrum sv(s.v);
  const Spectrum se(s.eta);
  const Field ux = su.derivative(Axis::x, 1), uy = su.derivative(Axis::y, 1);
  const Field vx = sv.derivative(Axis::x, 1), vy = sv.derivative(Axis::y, 1);
  const Field ex = se.derivative(Axis::x, 1), ey = se.derivative(Axis::y, 1);
  const double rot = p.f_cor / p.ro;

  StateIncrement out{Field(g), Field(g), Field(g)};
  for (std::size_t k = 0; k < g.size(); ++k) {
    // zeta = (-psi_y, psi_x)
    const double zu = -psi_y[k];
    const double zv = psi_x[k];
    const double zu_x = -psi_xy[k], zu_y = -psi_yy[k];
    const double zv_x = psi_xx[k], zv_y = psi_xy[k];
    const double u = s.u[k];
    const double v = s.v[k];
    out.eta[k] = -(ex[k] * zu + ey[k] * zv);
    out.u[k] = -(zu * ux[k] + zv * uy[k]) - (u * zu_x + v * zv_x) + rot * zv;
    out.v[k] = -(zu * vx[k] + zv * vy[k]) - (u * zu_y + v * zv_y) - rot * zu;
  }
  return out;
}

void save_dictionary(const NoiseDictionary& d, const std::filesystem::path& swda_path,
                     const std::filesystem::path& meta_path) {
  SnapshotWriter w(swda_path, d.grid);
  w.append("local_mean", d.local_mean);
  w.append("local_std", d.local_std);
  for (std::size_t i = 0; i < d.samples.size(); ++i) w.append("psi_" + std::to_string(i), d.samples[i]);
  w.close();

  std::ofstream meta(meta_path, std::ios::trunc);
  if (!meta) throw FormatError("cannot write " + meta_path.string());
  meta << "# swda noise dictionary\n"
       << "fields = " << swda_path.filename().string() << "\n"
       << "count = " << d.samples.size() << "\n"
       << "nx = " << d.grid.nx() << "\n"
       << "ny = " << d.grid.ny() << "\n"
       << "scale = " << detail::fmt_exact(d.scale) << "\n";
}

NoiseDictionary load_dictionary(const std::filesystem::path& swda_path,
                                const std::filesystem::path& meta_path) {
  const auto kv = detail::read_meta(meta_path);
  SnapshotReader reader(swda_path);
  const auto count = static_cast<std::size_t>(detail::meta_double(kv, "count"));
  if (reader.count() != count + 2 || reader.names()[0] != "local_mean" || reader.names()[1] != "local_std")
    throw FormatError(swda_path.string() + ": field layout does not match dictionary metadata");
  NoiseDictionary d;
  d.grid = reader.grid();
  d.scale = detail::meta_double(kv, "scale");
  d.local_mean = reader.read(0);
  d.local_std = reader.read(1);
  d.samples.reserve(count);
  for (std::size_t i = 0; i < count; ++i) d.samples.push_back(reader.read(i + 2));
  return d;
}

}  // namespace swda
