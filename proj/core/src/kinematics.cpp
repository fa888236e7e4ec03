// Copyright 2026 The MotionMap Authors
// SPDX-License-Identifier: Apache-2.0

#include "motionmap/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "motionmap/error.hpp"

namespace motionmap {

PoseSequence PoseSequence::slice(int begin, int count) const {
  if (begin < 0 || count < 0 || begin + count > frame_count()) {
    throw ShapeError("PoseSequence::slice: range [" + std::to_string(begin) + ", " +
                     std::to_string(begin + count) + ") outside " +
                     std::to_string(frame_count()) + " frames");
  }
  PoseSequence out;
  out.fps = fps;
  out.frames.assign(frames.begin() + begin, frames.begin() + begin + count);
  return out;
}

Eigen::VectorXd PoseSequence::flatten() const {
  const int j = joint_count();
  Eigen::VectorXd flat(static_cast<Eigen::Index>(frame_count()) * 3 * j);
  for (int f = 0; f < frame_count(); ++f) {
    flat.segment(static_cast<Eigen::Index>(f) * 3 * j, 3 * j) =
        Eigen::Map<const Eigen::VectorXd>(frames[f].data(), 3 * j);
  }
  return flat;
}

PoseSequence PoseSequence::unflatten(const Eigen::VectorXd& flat, int joints, double fps) {
  if (joints <= 0 || flat.size() % (3 * joints) != 0) {
    throw ShapeError("PoseSequence::unflatten: length " + std::to_string(flat.size()) +
                     " is not a multiple of 3*" + std::to_string(joints));
  }
  PoseSequence out;
  out.fps = fps;
  const Eigen::Index frames = flat.size() / (3 * joints);
  out.frames.reserve(frames);
  for (Eigen::Index f = 0; f < frames; ++f) {
    Pose p(joints, 3);
    Eigen::Map<Eigen::VectorXd>(p.data(), 3 * joints) = flat.segment(f * 3 * joints, 3 * joints);
    out.frames.push_back(std::move(p));
  }
  return out;
}

bool PoseSequence::operator==(const PoseSequence& other) const {
  if (fps != other.fps || frames.size() != other.frames.size()) return false;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (frames[i].rows() != other.frames[i].rows() || frames[i] != other.frames[i]) return false;
  }
  return true;
}

PoseSequence concat(const PoseSequence& a, const PoseSequence& b) {
  if (!a.frames.empty() && !b.frames.empty() && a.joint_count() != b.joint_count()) {
    throw ShapeError("concat: joint counts differ");
  }
  PoseSequence out = a;
  out.frames.insert(out.frames.end(), b.frames.begin(), b.frames.end());
  return out;
}

SkeletonTopology::SkeletonTopology(std::vector<int> parents, std::vector<std::string> names)
    : parents_(std::move(parents)), names_(std::move(names)) {
  const int j = static_cast<int>(parents_.size());
  if (j == 0) throw DomainError("SkeletonTopology: no joints");
  if (names_.empty()) {
    for (int i = 0; i < j; ++i) names_.push_back("joint" + std::to_string(i));
  }
  if (static_cast<int>(names_.size()) != j) {
    throw ShapeError("SkeletonTopology: " + std::to_string(names_.size()) + " names for " +
                     std::to_string(j) + " joints");
  }
  int roots = 0;
  for (int i = 0; i < j; ++i) {
    if (parents_[i] == kRoot) {
      root_ = i;
      ++roots;
    } else if (parents_[i] < 0 || parents_[i] >= j || parents_[i] == i) {
      throw DomainError("SkeletonTopology: joint " + std::to_string(i) + " has invalid parent " +
                        std::to_string(parents_[i]));
    }
  }
  if (roots != 1) {
    throw DomainError("SkeletonTopology: expected exactly one root, found " +
                      std::to_string(roots));
  }
  // Breadth-first from the root; a joint never reached sits on a cycle.
  std::vector<std::vector<int>> children(j);
  for (int i = 0; i < j; ++i) {
    if (parents_[i] != kRoot) children[parents_[i]].push_back(i);
  }
  order_.push_back(root_);
  for (std::size_t head = 0; head < order_.size(); ++head) {
    for (int c : children[order_[head]]) order_.push_back(c);
  }
  if (static_cast<int>(order_.size()) != j) {
    throw DomainError("SkeletonTopology: parent relation contains a cycle");
  }
}

SkeletonTopology SkeletonTopology::human17() {
  return SkeletonTopology(
      {kRoot, 0, 1, 2, 0, 4, 5, 0, 7, 8, 9, 8, 11, 12, 8, 14, 15},
      {"pelvis", "r_hip", "r_knee", "r_ankle", "l_hip", "l_knee", "l_ankle", "spine", "thorax",
       "neck", "head", "l_shoulder", "l_elbow", "l_wrist", "r_shoulder", "r_elbow", "r_wrist"});
}

namespace {

void check_pose(const Pose& pose, const SkeletonTopology& topo) {
  if (pose.rows() != topo.joint_count()) {
    throw ShapeError("pose has " + std::to_string(pose.rows()) + " joints, topology has " +
                     std::to_string(topo.joint_count()));
  }
  if (!pose.allFinite()) throw DomainError("pose contains a non-finite coordinate");
}

void check_spherical(const SphericalPose& sph, const SkeletonTopology& topo) {
  const auto j = topo.joint_count();
  if (sph.rho.size() != j || sph.theta.size() != j || sph.phi.size() != j) {
    throw ShapeError("spherical pose does not match topology with " + std::to_string(j) +
                     " joints");
  }
}

}  // namespace

SphericalPose cartesian_to_spherical(const Pose& pose, const SkeletonTopology& topo) {
  check_pose(pose, topo);
  const int j = topo.joint_count();
  SphericalPose out;
  out.root = pose.row(topo.root()).transpose();
  out.rho = Eigen::VectorXd::Zero(j);
  out.theta = Eigen::VectorXd::Zero(j);
  out.phi = Eigen::VectorXd::Zero(j);
  for (int i = 0; i < j; ++i) {
    const int p = topo.parent(i);
    if (p == SkeletonTopology::kRoot) continue;
    const Eigen::Vector3d d = (pose.row(i) - pose.row(p)).transpose();
    const double rho = d.norm();
    if (rho == 0.0) continue;
    out.rho[i] = rho;
    out.theta[i] = std::acos(std::clamp(d.z() / rho, -1.0, 1.0));
    // Poles get phi = 0 whatever the signs of the zero components.
    double phi = d.x() == 0.0 && d.y() == 0.0 ? 0.0 : std::atan2(d.y(), d.x());
    if (phi == -std::numbers::pi) phi = std::numbers::pi;
    out.phi[i] = phi;
  }
  return out;
}

std::vector<SphericalPose> cartesian_to_spherical(const PoseSequence& seq,
                                                  const SkeletonTopology& topo) {
  validate(seq, topo);
  std::vector<SphericalPose> out;
  out.reserve(seq.frames.size());
  for (const auto& frame : seq.frames) out.push_back(cartesian_to_spherical(frame, topo));
  return out;
}

Pose spherical_to_cartesian(const SphericalPose& sph, const SkeletonTopology& topo) {
  check_spherical(sph, topo);
  const int j = topo.joint_count();
  Pose pose(j, 3);
  for (int i : topo.topological_order()) {
    const int p = topo.parent(i);
    if (p == SkeletonTopology::kRoot) {
      pose.row(i) = sph.root.transpose();
      continue;
    }
    const double rho = sph.rho[i];
    const double st = std::sin(sph.theta[i]);
    pose(i, 0) = pose(p, 0) + rho * st * std::cos(sph.phi[i]);
    pose(i, 1) = pose(p, 1) + rho * st * std::sin(sph.phi[i]);
    pose(i, 2) = pose(p, 2) + rho * std::cos(sph.theta[i]);
  }
  return pose;
}

PoseSequence spherical_to_cartesian(std::span<const SphericalPose> sph,
                                    const SkeletonTopology& topo, double fps) {
  PoseSequence out;
  out.fps = fps;
  out.frames.reserve(sph.size());
  for (const auto& s : sph) out.frames.push_back(spherical_to_cartesian(s, topo));
  return out;
}

Eigen::VectorXd link_lengths(const Pose& pose, const SkeletonTopology& topo) {
  return cartesian_to_spherical(pose, topo).rho;
}

PoseSequence motion_transfer_lengths(const Eigen::VectorXd& lengths, const PoseSequence& y,
                                     const SkeletonTopology& topo) {
  validate(y, topo);
  if (lengths.size() != topo.joint_count()) throw ShapeError("motion_transfer: length vector size");
  PoseSequence out;
  out.fps = y.fps;
  out.frames.reserve(y.frames.size());
  for (const auto& frame : y.frames) {
    SphericalPose s = cartesian_to_spherical(frame, topo);
    s.rho = lengths;
    out.frames.push_back(spherical_to_cartesian(s, topo));
  }
  return out;
}

PoseSequence motion_transfer(const PoseSequence& x, const PoseSequence& y,
                             const SkeletonTopology& topo) {
  if (x.frames.empty()) throw ShapeError("motion_transfer: skeleton reference is empty");
  validate(x, topo);
  return motion_transfer_lengths(link_lengths(x.frames.back(), topo), y, topo);
}

PoseSequence zero_center(const PoseSequence& seq, const SkeletonTopology& topo) {
  validate(seq, topo);
  PoseSequence out = seq;
  for (auto& frame : out.frames) {
    const Eigen::RowVector3d root = frame.row(topo.root());
    frame.rowwise() -= root;
  }
  return out;
}

void validate(const PoseSequence& seq, const SkeletonTopology& topo) {
  if (seq.frames.empty()) throw ShapeError("pose sequence is empty");
  if (!(seq.fps > 0.0)) throw DomainError("pose sequence fps must be positive");
  for (const auto& frame : seq.frames) check_pose(frame, topo);
}

}  // namespace motionmap
