#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace accelmc {

// A discretized path on an equidistant grid. values is row-major with
// state_dim entries per grid point, grid point 0 holding the initial state.
struct SchemePath {
  std::vector<double> grid_times;  // n_steps + 1 entries
  std::vector<double> values;      // (n_steps + 1) * state_dim entries
  int state_dim = 1;
  std::string scheme_label;
  double eps = 0.0;

  std::int64_t n_steps() const noexcept {
    return static_cast<std::int64_t>(grid_times.size()) - 1;
  }
  std::span<const double> at(std::int64_t i) const noexcept {
    return {values.data() + static_cast<std::size_t>(i) * state_dim,
            static_cast<std::size_t>(state_dim)};
  }
  std::span<const double> terminal() const noexcept {
    return at(n_steps());
  }
  double value(std::int64_t i, int component = 0) const noexcept {
    return values[static_cast<std::size_t>(i) * state_dim + component];
  }
};

// Keeps every stride-th grid point (coarse grid contained in the fine one).
// n must divide path.n_steps(); shared points carry identical values.
SchemePath restrict_to_grid(const SchemePath& path, std::int64_t n);

}  // namespace accelmc
