// Copyright 2026 The MotionMap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

namespace motionmap {

// J x 3 joint positions in meters, one joint per row.
using Pose = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;

struct PoseSequence {
  std::vector<Pose> frames;
  double fps = 25.0;

  int frame_count() const { return static_cast<int>(frames.size()); }
  int joint_count() const { return frames.empty() ? 0 : static_cast<int>(frames.front().rows()); }

  // Frames [begin, begin + count).
  PoseSequence slice(int begin, int count) const;
  // The last `count` frames.
  PoseSequence tail(int count) const { return slice(frame_count() - count, count); }

  // Frame-major, joint-major, xyz-minor flattening (frame f occupies
  // entries [3Jf, 3J(f+1))).
  Eigen::VectorXd flatten() const;
  static PoseSequence unflatten(const Eigen::VectorXd& flat, int joints, double fps);

  bool operator==(const PoseSequence& other) const;
};

PoseSequence concat(const PoseSequence& a, const PoseSequence& b);

class SkeletonTopology {
 public:
  static constexpr int kRoot = -1;

  SkeletonTopology() = default;
  // Throws DomainError unless `parents` describes a single tree rooted at the
  // unique kRoot entry.
  SkeletonTopology(std::vector<int> parents, std::vector<std::string> names);

  // The 17-joint pelvis-rooted layout used by the Human3.6M protocol.
  static SkeletonTopology human17();

  int joint_count() const { return static_cast<int>(parents_.size()); }
  int root() const { return root_; }
  int parent(int joint) const { return parents_[joint]; }
  const std::vector<int>& parents() const { return parents_; }
  const std::vector<std::string>& names() const { return names_; }
  // Joints ordered so that every parent precedes its children.
  const std::vector<int>& topological_order() const { return order_; }

  bool operator==(const SkeletonTopology& other) const {
    return parents_ == other.parents_ && names_ == other.names_;
  }

 private:
  std::vector<int> parents_;
  std::vector<std::string> names_;
  std::vector<int> order_;
  int root_ = 0;
};

// Per-link spherical coordinates relative to the parent joint. Entries at the
// root index are zero; the root keeps its absolute position.
struct SphericalPose {
  Eigen::Vector3d root = Eigen::Vector3d::Zero();
  Eigen::VectorXd rho;    // link length, >= 0
  Eigen::VectorXd theta;  // polar angle from +z, [0, pi]
  Eigen::VectorXd phi;    // azimuth atan2(y, x), (-pi, pi]
};

// Offsets d are converted with rho = |d|, theta = acos(d_z / rho),
// phi = atan2(d_y, d_x). Zero-length links give (0, 0, 0) and phi is 0 on
// the poles.
SphericalPose cartesian_to_spherical(const Pose& pose, const SkeletonTopology& topo);
std::vector<SphericalPose> cartesian_to_spherical(const PoseSequence& seq,
                                                  const SkeletonTopology& topo);

Pose spherical_to_cartesian(const SphericalPose& sph, const SkeletonTopology& topo);
PoseSequence spherical_to_cartesian(std::span<const SphericalPose> sph,
                                    const SkeletonTopology& topo, double fps = 25.0);

// Motion of `y` re-expressed on the skeleton of the last frame of `x`: every
// output frame keeps y's link angles and takes x's last-frame link lengths.
// The root trajectory of y is kept.
PoseSequence motion_transfer(const PoseSequence& x, const PoseSequence& y,
                             const SkeletonTopology& topo);

// Same as above with the link lengths supplied directly.
PoseSequence motion_transfer_lengths(const Eigen::VectorXd& link_lengths,
                                     const PoseSequence& y, const SkeletonTopology& topo);

// Link lengths of a single pose (root entry 0).
Eigen::VectorXd link_lengths(const Pose& pose, const SkeletonTopology& topo);

// Translate every frame so that the root joint sits at the origin.
PoseSequence zero_center(const PoseSequence& seq, const SkeletonTopology& topo);

// Throws ShapeError/DomainError when the sequence is empty, disagrees with
// the topology, or contains a non-finite coordinate.
void validate(const PoseSequence& seq, const SkeletonTopology& topo);

}  // namespace motionmap
