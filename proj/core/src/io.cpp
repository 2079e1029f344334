#include "fracnls/io.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace fracnls {

static_assert(std::endian::native == std::endian::little, "binary files assume a little-endian host");

namespace {

constexpr char kMagic[4] = {'F', 'N', 'L', 'T'};
constexpr std::uint32_t kVersion = 1;

void put(std::ostream& out, std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); }

std::uint32_t get(std::istream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw ConfigError("truncated trajectory header");
  return v;
}

}  // namespace

void write_trajectory(const ModeTrajectory& traj, std::ostream& out) {
  out.write(kMagic, 4);
  put(out, kVersion);
  put(out, std::uint32_t(traj.K()));
  put(out, std::uint32_t(traj.M()));
  out.write(reinterpret_cast<const char*>(traj.raw().data()), std::streamsize(traj.raw().size() * sizeof(cplx)));
  if (!out) throw NumericalError("failed to write trajectory");
}

void write_trajectory(const ModeTrajectory& traj, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open " + path);
  write_trajectory(traj, f);
}

ModeTrajectory read_trajectory(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) throw ConfigError("not a trajectory file");
  if (get(in) != kVersion) throw ConfigError("unsupported trajectory file version");
  const int K = int(get(in));
  const int M = int(get(in));
  ModeTrajectory traj(K, M);
  in.read(reinterpret_cast<char*>(traj.raw().data()), std::streamsize(traj.raw().size() * sizeof(cplx)));
  if (!in) throw ConfigError("truncated trajectory payload");
  return traj;
}

ModeTrajectory read_trajectory(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open " + path);
  return read_trajectory(f);
}

void write_series(const std::vector<cplx>& series, const std::string& path) {
  if (series.size() < 2) throw ConfigError("series needs at least two grid points");
  ModeTrajectory t(0, int(series.size()) - 1);
  std::copy(series.begin(), series.end(), t.raw().begin());
  write_trajectory(t, path);
}

std::vector<cplx> read_series(const std::string& path) {
  auto t = read_trajectory(path);
  if (t.K() != 0) throw ConfigError(path + " holds a multi-mode trajectory, not a series");
  return t.raw();
}

}  // namespace fracnls
