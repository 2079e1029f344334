#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "fracnls/types.hpp"

namespace fracnls {

// Binary trajectory file: "FNLT", u32 version, u32 K, u32 M, then (2K+1)(M+1)
// little-endian complex128 values, mode-major. A scalar series is stored with K = 0.
void write_trajectory(const ModeTrajectory& traj, std::ostream& out);
void write_trajectory(const ModeTrajectory& traj, const std::string& path);
ModeTrajectory read_trajectory(std::istream& in);
ModeTrajectory read_trajectory(const std::string& path);

void write_series(const std::vector<cplx>& series, const std::string& path);
std::vector<cplx> read_series(const std::string& path);

}  // namespace fracnls
