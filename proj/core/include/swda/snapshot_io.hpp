#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "swda/field_grid.hpp"

namespace swda {

// SWDA snapshot file:
//   "SWDA" | u16 version | u32 nx | u32 ny | u32 field count
//   then field count blocks of nx*ny little-endian f64, row-major.
// Field names live in a sidecar text file (<path>.names), one per line.
inline constexpr std::uint16_t kSnapshotVersion = 1;
inline constexpr std::size_t kSnapshotHeaderBytes = 4 + 2 + 4 + 4 + 4;

struct NamedField {
  std::string name;
  Field field;
};

std::filesystem::path names_sidecar(const std::filesystem::path& path);

void write_snapshot(const std::filesystem::path& path, std::span<const NamedField> fields);
std::vector<NamedField> read_snapshot(const std::filesystem::path& path);

/// Appends fields one at a time; the header count and sidecar are written on
/// close(). Destruction without close() still finalizes.
class SnapshotWriter {
 public:
  SnapshotWriter(const std::filesystem::path& path, const Grid& grid);
  SnapshotWriter(const SnapshotWriter&) = delete;
  SnapshotWriter& operator=(const SnapshotWriter&) = delete;
  ~SnapshotWriter();

  void append(const std::string& name, const Field& field);
  void close();
  std::size_t count() const { return names_.size(); }

 private:
  std::filesystem::path path_;
  Grid grid_;
  std::ofstream out_;
  std::vector<std::string> names_;
  bool closed_ = false;
};

/// Validates the header, file length, and sidecar on open; fields are then
/// read sequentially or by index.
class SnapshotReader {
 public:
  explicit SnapshotReader(const std::filesystem::path& path);

  const Grid& grid() const { return grid_; }
  std::size_t count() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }

  /// Random access; next() continues after the last field read.
  Field read(std::size_t index);
  std::optional<NamedField> next();

 private:
  std::filesystem::path path_;
  std::ifstream in_;
  Grid grid_;
  std::vector<std::string> names_;
  std::size_t cursor_ = 0;
};

}  // namespace swda
