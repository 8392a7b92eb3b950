#include "chdf/io.hpp"

#include <bit>
#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "chdf/errors.hpp"

namespace chdf {

namespace {

std::string real17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<unsigned char> to_little_endian(const std::vector<double>& values) {
  std::vector<unsigned char> bytes(values.size() * 8);
  for (std::size_t n = 0; n < values.size(); ++n) {
    const auto bits = std::bit_cast<std::uint64_t>(values[n]);
    for (int b = 0; b < 8; ++b) bytes[8 * n + b] = static_cast<unsigned char>(bits >> (8 * b));
  }
  return bytes;
}

std::vector<double> from_little_endian(const std::vector<unsigned char>& bytes) {
  std::vector<double> values(bytes.size() / 8);
  for (std::size_t n = 0; n < values.size(); ++n) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[8 * n + b]) << (8 * b);
    values[n] = std::bit_cast<double>(bits);
  }
  return values;
}

[[noreturn]] void bad_format(const std::string& what) { throw Error(ErrorKind::SnapshotFormatError, what); }

}  // namespace

std::uint64_t fnv1a(const unsigned char* data, std::size_t size) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t n = 0; n < size; ++n) {
    h ^= data[n];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string SnapshotHeader::format() const {
  char sum[17];
  std::snprintf(sum, sizeof sum, "%016" PRIx64, checksum);
  return "CHDF1 " + std::to_string(nx) + " " + std::to_string(ny) + " " + real17(Lx) + " " + real17(Ly) + " " +
         real17(time) + " " + name + " " + sum;
}

SnapshotHeader SnapshotHeader::parse(const std::string& line) {
  std::istringstream in(line);
  std::string magic, sum, extra;
  SnapshotHeader h;
  if (!(in >> magic) || magic != "CHDF1") bad_format("missing CHDF1 magic");
  if (!(in >> h.nx >> h.ny >> h.Lx >> h.Ly >> h.time >> h.name >> sum)) bad_format("truncated header");
  if (in >> extra) bad_format("trailing header tokens");
  if (sum.size() != 16 || sum.find_first_not_of("0123456789abcdef") != std::string::npos)
    bad_format("checksum must be 16 lowercase hex digits");
  h.checksum = std::stoull(sum, nullptr, 16);
  if (h.nx <= 0 || h.ny <= 0) bad_format("non-positive dimensions");
  return h;
}

void write_snapshot(const std::string& path, const ScalarField& field, double time, const std::string& name) {
  if (name.empty() || name.find_first_of(" \t\n") != std::string::npos)
    throw Error(ErrorKind::ValidationError, "snapshot field name must be one token");
  const Grid2D& g = field.grid();
  const std::vector<unsigned char> bytes = to_little_endian(field.data());
  SnapshotHeader h{g.nx(), g.ny(), g.Lx(), g.Ly(), time, name, fnv1a(bytes.data(), bytes.size())};
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, "cannot write snapshot '" + path + "'");
  out << h.format() << '\n';
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw Error(ErrorKind::IoError, "failed writing snapshot '" + path + "'");
}

Snapshot read_snapshot(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open snapshot '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) bad_format("empty snapshot '" + path + "'");
  Snapshot s{SnapshotHeader::parse(line), {}};
  const std::size_t want = static_cast<std::size_t>(s.header.nx) * s.header.ny * 8;
  std::vector<unsigned char> bytes(want);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(want));
  if (static_cast<std::size_t>(in.gcount()) != want) bad_format("payload shorter than header claims in '" + path + "'");
  if (in.peek() != std::char_traits<char>::eof()) bad_format("payload longer than header claims in '" + path + "'");
  if (fnv1a(bytes.data(), bytes.size()) != s.header.checksum) bad_format("checksum mismatch in '" + path + "'");
  s.values = from_little_endian(bytes);
  return s;
}

ScalarField read_snapshot_field(const std::string& path, const GridPtr& grid, double* time) {
  Snapshot s = read_snapshot(path);
  const SnapshotHeader& h = s.header;
  if (h.nx != grid->nx() || h.ny != grid->ny() || h.Lx != grid->Lx() || h.Ly != grid->Ly())
    bad_format("snapshot '" + path + "' does not match the configured grid");
  if (time) *time = h.time;
  return ScalarField(grid, std::move(s.values));
}

void write_ledger_header(std::ostream& out) {
  const auto& names = LedgerRow::column_names();
  for (std::size_t k = 0; k < names.size(); ++k) out << (k ? "," : "") << names[k];
  out << '\n';
}

void write_ledger_row(std::ostream& out, const LedgerRow& row) {
  const auto v = row.values();
  for (std::size_t k = 0; k < v.size(); ++k) out << (k ? "," : "") << real17(v[k]);
  out << '\n';
}

}  // namespace chdf
