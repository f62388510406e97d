#include "accelmc/path.hpp"

#include <stdexcept>
#include <string>

namespace accelmc {

SchemePath restrict_to_grid(const SchemePath& path, std::int64_t n) {
  const std::int64_t m = path.n_steps();
  if (n <= 0 || m % n != 0)
    throw std::invalid_argument("restrict_to_grid: " + std::to_string(n) +
                                " does not divide " + std::to_string(m));
  if (n == m) return path;

  const std::int64_t stride = m / n;
  SchemePath out;
  out.state_dim = path.state_dim;
  out.scheme_label = path.scheme_label;
  out.eps = path.eps;
  out.grid_times.resize(static_cast<std::size_t>(n) + 1);
  out.values.resize((static_cast<std::size_t>(n) + 1) * path.state_dim);
  for (std::int64_t i = 0; i <= n; ++i) {
    const std::int64_t src = i * stride;
    out.grid_times[static_cast<std::size_t>(i)] =
        path.grid_times[static_cast<std::size_t>(src)];
    for (int c = 0; c < path.state_dim; ++c)
      out.values[static_cast<std::size_t>(i) * path.state_dim + c] =
          path.values[static_cast<std::size_t>(src) * path.state_dim + c];
  }
  return out;
}

}  // namespace accelmc
