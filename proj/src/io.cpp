#include "rshom/io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include "rshom/errors.hpp"

namespace rshom {

namespace {

constexpr char kMagic[4] = {'R', 'S', 'H', 'F'};

void write_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = (v >> (8 * i)) & 0xff;
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t(b[i]) << (8 * i);
  return v;
}

void write_f64(std::ostream& os, double v) {
  std::uint64_t u;
  std::memcpy(&u, &v, 8);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = (u >> (8 * i)) & 0xff;
  os.write(reinterpret_cast<const char*>(b), 8);
}

double read_f64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t u = 0;
  for (int i = 0; i < 8; ++i) u |= std::uint64_t(b[i]) << (8 * i);
  double v;
  std::memcpy(&v, &u, 8);
  return v;
}

}  // namespace

void dump_field(const Field& f, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open for write: " + path);
  os.write(kMagic, 4);
  write_u32(os, 1);
  write_u32(os, static_cast<std::uint32_t>(f.grid().dim));
  write_u32(os, static_cast<std::uint32_t>(f.grid().n));
  write_u32(os, static_cast<std::uint32_t>(f.ncomp()));
  for (std::size_t node = 0; node < f.nodes(); ++node)
    for (int c = 0; c < f.ncomp(); ++c) write_f64(os, f.at(c, node));
  if (!os) throw IoError("write failed: " + path);
}

Field load_field(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open for read: " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw IoError("bad magic in " + path);
  std::uint32_t version = read_u32(is);
  if (version != 1) throw IoError("unsupported version in " + path);
  int dim = static_cast<int>(read_u32(is));
  int n = static_cast<int>(read_u32(is));
  int ncomp = static_cast<int>(read_u32(is));
  Field f(PeriodicGrid(dim, n), ncomp);
  for (std::size_t node = 0; node < f.nodes(); ++node)
    for (int c = 0; c < ncomp; ++c) f.at(c, node) = read_f64(is);
  if (!is) throw IoError("truncated file: " + path);
  return f;
}

void dump_two_scale(const TwoScaleField& f, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open for write: " + path);
  os.write(kMagic, 4);
  write_u32(os, 1);
  write_u32(os, static_cast<std::uint32_t>(f.gridZ().dim));
  write_u32(os, static_cast<std::uint32_t>(f.gridZ().n));
  std::uint32_t stacked =
      static_cast<std::uint32_t>(f.ncomp() * f.ny());
  write_u32(os, stacked);
  for (std::size_t zn = 0; zn < f.nz(); ++zn)
    for (int c = 0; c < f.ncomp(); ++c)
      for (std::size_t yn = 0; yn < f.ny(); ++yn)
        write_f64(os, f.at(c, yn, zn));
  if (!os) throw IoError("write failed: " + path);

  std::ofstream txt(path + ".txt");
  txt << "two-scale family dump\n"
      << "base file: stack of Z-fields in the RSHF format\n"
      << "stacked component index = base_component * ny_nodes + y_node\n"
      << "base_components = " << f.ncomp() << "\n"
      << "y_grid dim = " << f.gridY().dim << ", points_per_dim = "
      << f.gridY().n << " (row-major y nodes)\n"
      << "z_grid dim = " << f.gridZ().dim << ", points_per_dim = "
      << f.gridZ().n << "\n";
}

TwoScaleField load_two_scale(const std::string& path) {
  std::ifstream txt(path + ".txt");
  if (!txt) throw IoError("missing sidecar header: " + path + ".txt");
  int base_comp = -1, yn = -1, ydim = -1;
  std::string line;
  while (std::getline(txt, line)) {
    if (line.rfind("base_components = ", 0) == 0)
      base_comp = std::stoi(line.substr(18));
    if (line.rfind("y_grid dim = ", 0) == 0) {
      ydim = std::stoi(line.substr(13));
      auto pos = line.find("points_per_dim = ");
      if (pos != std::string::npos) yn = std::stoi(line.substr(pos + 17));
    }
  }
  if (base_comp <= 0 || yn <= 0 || ydim <= 0)
    throw IoError("bad sidecar header: " + path + ".txt");
  Field flat = load_field(path);
  PeriodicGrid gy(ydim, yn);
  TwoScaleField out(gy, flat.grid(), base_comp);
  if (flat.ncomp() != static_cast<int>(base_comp * out.ny()))
    throw IoError("component count mismatch in " + path);
  for (std::size_t zn = 0; zn < out.nz(); ++zn)
    for (int c = 0; c < base_comp; ++c)
      for (std::size_t y = 0; y < out.ny(); ++y)
        out.at(c, y, zn) = flat.at(static_cast<int>(c * out.ny() + y), zn);
  return out;
}

}  // namespace rshom
