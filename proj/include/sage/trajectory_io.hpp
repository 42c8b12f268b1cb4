#pragma once

#include <string>

#include "sage/system_model.hpp"

namespace sage {

// Layout: one metadata line "# seed=<n>", then "t,<inputs...>,<outputs...>",
// then one row per step with >= 12 significant digits.
void write_trajectory_csv(const std::string& path, const Trajectory& traj);
Trajectory read_trajectory_csv(const std::string& path);

// Generic numeric table with the same formatting rules; used for figure series
// and solver iterate logs.
void write_csv(const std::string& path,
               const std::vector<std::string>& columns,
               const Matrix& rows,
               const std::vector<std::string>& metadata = {});

std::string format_value(double v);

}  // namespace sage
