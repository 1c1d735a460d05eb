#pragma once

#include <string>

#include "ddstab/datamat.hpp"

namespace ddstab {

/// Trajectory CSV: header `k,u_1..u_m,x_1..x_n`, rows k = 0..T, the u
/// fields empty on the final row. NaN/Inf and malformed numbers are
/// rejected. Pass n/m <= 0 to infer them from the header.
Trajectory read_trajectory_csv(const std::string& path, int n = 0, int m = 0);
Trajectory parse_trajectory_csv(const std::string& text, int n = 0, int m = 0);
std::string trajectory_to_csv(const Trajectory& traj);

/// Input-signal CSV: a header with an optional leading `k` column followed
/// by the signal components; returns dim x T. A trailing row whose signal
/// fields are all empty (as in trajectory files) is ignored, so columns
/// named u_* can be read straight out of a trajectory CSV.
Matrix read_signal_csv(const std::string& path);
Matrix parse_signal_csv(const std::string& text);

/// Writes via a temporary file and rename, so readers never observe a
/// partial file. Throws Error(kIo) on failure.
void write_file_atomic(const std::string& path, const std::string& contents);

std::string read_file(const std::string& path);

}  // namespace ddstab
