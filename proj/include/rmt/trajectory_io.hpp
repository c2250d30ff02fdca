#pragma once

#include <string>

#include "rmt/dbm.hpp"

namespace rmt {

// Binary layout documented in docs/trajectory_format.md.
void write_trajectory(const std::string& path, const DbmTrajectory& tr);
DbmTrajectory read_trajectory(const std::string& path);

}  // namespace rmt
