#pragma once

#include "ns2d/cylinder.hpp"
#include "ns2d/solver.hpp"

namespace ns2d {

/// Velocity sampler over an in-memory trajectory.
struct TrajectoryVelocity {
  static constexpr bool thread_safe = true;
  const Trajectory* traj;
  std::vector<double> snapshot_times;

  explicit TrajectoryVelocity(const Trajectory& t) : traj(&t) {
    for (const auto& s : t.snapshots) snapshot_times.push_back(s.t);
  }
  const Grid& grid() const { return traj->config.grid; }
  const std::vector<double>& times() const { return snapshot_times; }
  Vec2 value(std::size_t level, std::size_t node) const {
    const Snapshot& s = traj->snapshots[level];
    return {s.u.comp[0].values[node], s.u.comp[1].values[node]};
  }
};

struct TrajectoryPressure {
  static constexpr bool thread_safe = true;
  const Trajectory* traj;
  std::vector<double> snapshot_times;

  explicit TrajectoryPressure(const Trajectory& t) : traj(&t) {
    for (const auto& s : t.snapshots) snapshot_times.push_back(s.t);
  }
  const Grid& grid() const { return traj->config.grid; }
  const std::vector<double>& times() const { return snapshot_times; }
  double value(std::size_t level, std::size_t node) const {
    return traj->snapshots[level].p.values[node];
  }
};

/// Stress samples aligned with a snapshot ladder. The static case is one
/// cached field; a modulated spec is rescaled per level.
struct ForcingSeries {
  static constexpr bool thread_safe = true;
  Grid grid_;
  std::vector<double> times_;
  ForcingSpec spec_;
  TensorField base_;

  ForcingSeries(const ForcingSpec& spec, const Grid& g, std::vector<double> times)
      : grid_(g), times_(std::move(times)), spec_(spec) {
    ForcingSpec base_spec = spec;
    base_spec.time_dependence = TimeDependence::Static;
    base_ = generate_forcing(base_spec, g, 0.0);
  }

  const Grid& grid() const { return grid_; }
  const std::vector<double>& times() const { return times_; }
  Mat2 value(std::size_t level, std::size_t node) const {
    Mat2 m{base_.comp[0].values[node], base_.comp[1].values[node], base_.comp[2].values[node],
           base_.comp[3].values[node]};
    if (spec_.time_dependence == TimeDependence::Modulated)
      m = m * std::cos(spec_.frequency * times_[level]);
    return m;
  }
};

}  // namespace ns2d
