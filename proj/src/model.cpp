#include "model.hpp"

#include <cmath>
#include <string>

#include "error.hpp"

namespace mblw {

void ModelSpec::validate() const {
  require(n_sites >= 2, ErrorKind::InvalidArgument,
          "n_sites must be at least 2, got " + std::to_string(n_sites));
  require(std::isfinite(coupling), ErrorKind::InvalidArgument, "coupling must be finite");
  require(disorder_strength >= 0.0 && std::isfinite(disorder_strength),
          ErrorKind::InvalidArgument, "disorder strength must be finite and non-negative");
  require(fields.size() == static_cast<std::size_t>(n_sites), ErrorKind::SizeMismatch,
          "expected " + std::to_string(n_sites) + " fields, got " +
              std::to_string(fields.size()));
  for (double f : fields)
    require(std::abs(f) <= disorder_strength, ErrorKind::InvalidArgument,
            "field " + std::to_string(f) + " outside [-h, h]");
}

ModelSpec make_model(int n_sites, double coupling, double disorder_strength,
                     std::vector<double> fields) {
  ModelSpec spec{n_sites, coupling, disorder_strength, std::move(fields)};
  spec.validate();
  return spec;
}

TimeGrid::TimeGrid(std::vector<double> points) : points_(std::move(points)) {
  require(!points_.empty(), ErrorKind::InvalidArgument, "time grid is empty");
  require(points_.front() == 0.0, ErrorKind::InvalidArgument, "time grid must start at 0");
  for (std::size_t k = 1; k < points_.size(); ++k)
    require(points_[k] > points_[k - 1] && std::isfinite(points_[k]),
            ErrorKind::InvalidArgument, "time grid must be strictly increasing");
}

TimeGrid make_time_grid(double t_max, int m_points, Spacing spacing) {
  require(t_max > 0.0 && std::isfinite(t_max), ErrorKind::InvalidArgument,
          "t_max must be positive");
  require(m_points >= 2, ErrorKind::InvalidArgument, "a time grid needs at least 2 points");

  std::vector<double> pts(static_cast<std::size_t>(m_points));
  pts.front() = 0.0;
  if (spacing == Spacing::Linear) {
    for (int k = 1; k < m_points; ++k) pts[k] = t_max * k / (m_points - 1);
  } else {
    require(t_max > kLogGridTmin, ErrorKind::InvalidArgument,
            "log grid requires t_max > 0.1");
    const int n_log = m_points - 1;
    if (n_log == 1) {
      pts[1] = t_max;
    } else {
      const double a = std::log(kLogGridTmin);
      const double b = std::log(t_max);
      for (int k = 0; k < n_log; ++k) pts[k + 1] = std::exp(a + (b - a) * k / (n_log - 1));
      pts[1] = kLogGridTmin;
    }
  }
  pts.back() = t_max;
  return TimeGrid(std::move(pts));
}

std::vector<double> sample_disorder(double h, int n_sites, Stream stream) {
  require(n_sites > 0, ErrorKind::InvalidArgument, "n_sites must be positive");
  require(h >= 0.0 && std::isfinite(h), ErrorKind::InvalidArgument,
          "disorder strength must be non-negative");
  std::vector<double> out(static_cast<std::size_t>(n_sites));
  for (auto& v : out) {
    // u in [0,1): h * (2u - 1) lies in [-h, h).
    v = h * (2.0 * stream.next_unit() - 1.0);
  }
  return out;
}

}  // namespace mblw
