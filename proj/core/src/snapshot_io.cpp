#include "swda/snapshot_io.hpp"

#include <array>
#include <bit>

#include "binary_io.hpp"
#include "swda/error.hpp"

namespace swda {

namespace fs = std::filesystem;

namespace {

constexpr std::array<char, 4> kMagic = {'S', 'W', 'D', 'A'};

using detail::get;
using detail::put;
using detail::to_little;

void write_payload(std::ostream& out, const Field& f) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(f.data().data()),
              static_cast<std::streamsize>(f.size() * sizeof(double)));
  } else {
    for (double v : f.data()) put(out, std::bit_cast<std::uint64_t>(v));
  }
}

void write_names(const fs::path& path, const std::vector<std::string>& names) {
  std::ofstream out(names_sidecar(path), std::ios::trunc);
  if (!out) throw FormatError("cannot write " + names_sidecar(path).string());
  for (const auto& n : names) {
    if (n.find('\n') != std::string::npos) throw InvalidArgument("field name contains newline");
    out << n << '\n';
  }
}

}  // namespace

fs::path names_sidecar(const fs::path& path) { return fs::path(path.string() + ".names"); }

void write_snapshot(const fs::path& path, std::span<const NamedField> fields) {
  if (fields.empty()) throw InvalidArgument("write_snapshot: no fields");
  SnapshotWriter writer(path, fields.front().field.grid());
  for (const auto& nf : fields) writer.append(nf.name, nf.field);
  writer.close();
}

std::vector<NamedField> read_snapshot(const fs::path& path) {
  SnapshotReader reader(path);
  std::vector<NamedField> out;
  out.reserve(reader.count());
  while (auto nf = reader.next()) out.push_back(std::move(*nf));
  return out;
}

SnapshotWriter::SnapshotWriter(const fs::path& path, const Grid& grid)
    : path_(path), grid_(grid), out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) throw FormatError("cannot open " + path.string() + " for writing");
  out_.write(kMagic.data(), kMagic.size());
  put<std::uint16_t>(out_, kSnapshotVersion);
  put<std::uint32_t>(out_, static_cast<std::uint32_t>(grid.nx()));
  put<std::uint32_t>(out_, static_cast<std::uint32_t>(grid.ny()));
  put<std::uint32_t>(out_, 0);
}

SnapshotWriter::~SnapshotWriter() {
  try {
    close();
  } catch (...) {
  }
}

void SnapshotWriter::append(const std::string& name, const Field& field) {
  if (closed_) throw Error("SnapshotWriter: append after close");
  if (!(field.grid() == grid_))
    throw InvalidArgument("SnapshotWriter: field '" + name + "' has a different grid");
  write_payload(out_, field);
  names_.push_back(name);
  if (!out_) throw FormatError("write failed for " + path_.string());
}

void SnapshotWriter::close() {
  if (closed_) return;
  closed_ = true;
  out_.seekp(static_cast<std::streamoff>(kSnapshotHeaderBytes - 4));
  put<std::uint32_t>(out_, static_cast<std::uint32_t>(names_.size()));
  out_.close();
  if (!out_) throw FormatError("write failed for " + path_.string());
  write_names(path_, names_);
}

SnapshotReader::SnapshotReader(const fs::path& path) : path_(path), in_(path, std::ios::binary) {
  if (!in_) throw FormatError("cannot open " + path.string());
  std::array<char, 4> magic{};
  in_.read(magic.data(), magic.size());
  if (!in_ || magic != kMagic) throw FormatError(path.string() + ": bad magic bytes");
  const auto version = get<std::uint16_t>(in_);
  const auto nx = get<std::uint32_t>(in_);
  const auto ny = get<std::uint32_t>(in_);
  const auto count = get<std::uint32_t>(in_);
  if (!in_) throw FormatError(path.string() + ": truncated header");
  if (version != kSnapshotVersion)
    throw FormatError(path.string() + ": unsupported version " + std::to_string(version));
  try {
    grid_ = Grid(static_cast<int>(nx), static_cast<int>(ny));
  } catch (const InvalidArgument& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  const auto expected = kSnapshotHeaderBytes + std::uintmax_t{count} * grid_.size() * sizeof(double);
  const auto actual = fs::file_size(path);
  if (actual < expected)
    throw FormatError(path.string() + ": truncated payload (" + std::to_string(actual) + " of " +
                      std::to_string(expected) + " bytes)");

  std::ifstream names(names_sidecar(path));
  if (!names) throw FormatError(path.string() + ": missing sidecar " + names_sidecar(path).string());
  for (std::string line; std::getline(names, line);) names_.push_back(line);
  if (names_.size() != count)
    throw FormatError(path.string() + ": sidecar lists " + std::to_string(names_.size()) +
                      " names for " + std::to_string(count) + " fields");
}

Field SnapshotReader::read(std::size_t index) {
  if (index >= names_.size()) throw InvalidArgument("snapshot index out of range");
  const auto offset = kSnapshotHeaderBytes + index * grid_.size() * sizeof(double);
  in_.clear();
  in_.seekg(static_cast<std::streamoff>(offset));
  Field f(grid_);
  in_.read(reinterpret_cast<char*>(f.data().data()),
           static_cast<std::streamsize>(f.size() * sizeof(double)));
  if (!in_) throw FormatError(path_.string() + ": short read");
  if constexpr (std::endian::native != std::endian::little) {
    for (double& v : f.data()) v = std::bit_cast<double>(to_little(std::bit_cast<std::uint64_t>(v)));
  }
  cursor_ = index + 1;
  return f;
}

std::optional<NamedField> SnapshotReader::next() {
  if (cursor_ >= names_.size()) return std::nullopt;
  const std::size_t index = cursor_;
  return NamedField{names_[index], read(index)};
}

}  // namespace swda
