#pragma once

// Snapshot files and the CSV ledger.
//
// Snapshot: one text line "CHDF1 nx ny Lx Ly time name checksum\n" followed
// by nx*ny little-endian IEEE-754 doubles, y outer and x inner. The checksum
// is the 64-bit FNV-1a hash of the payload bytes, written as 16 hex digits.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "chdf/diagnostics.hpp"
#include "chdf/grid.hpp"

namespace chdf {

struct SnapshotHeader {
  int nx = 0;
  int ny = 0;
  double Lx = 0.0;
  double Ly = 0.0;
  double time = 0.0;
  std::string name;
  std::uint64_t checksum = 0;

  std::string format() const;
  static SnapshotHeader parse(const std::string& line);
  bool operator==(const SnapshotHeader&) const = default;
};

std::uint64_t fnv1a(const unsigned char* data, std::size_t size);

struct Snapshot {
  SnapshotHeader header;
  std::vector<double> values;
};

/// Field names must be a single token.
void write_snapshot(const std::string& path, const ScalarField& field, double time, const std::string& name);
Snapshot read_snapshot(const std::string& path);
/// Reads a snapshot and checks that it lives on `grid`.
ScalarField read_snapshot_field(const std::string& path, const GridPtr& grid, double* time = nullptr);

void write_ledger_header(std::ostream& out);
void write_ledger_row(std::ostream& out, const LedgerRow& row);

}  // namespace chdf
