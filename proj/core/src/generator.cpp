// Copyright 2026 The MotionMap Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "motionmap/data.hpp"
#include "motionmap/error.hpp"
#include "motionmap/rng.hpp"

namespace motionmap {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kRight = 0;
constexpr int kLeft = 1;

// Joint angles driving the forward kinematics of the 17-joint skeleton.
// Index 0 of the paired arrays is the right side, 1 the left side.
struct JointAngles {
  double yaw = 0.0;
  double lean = 0.0;
  std::array<double, 2> hip{};
  std::array<double, 2> knee{};
  std::array<double, 2> shoulder_flex{};
  std::array<double, 2> shoulder_abd{};
  std::array<double, 2> elbow{};
  Eigen::Vector3d root_offset = Eigen::Vector3d::Zero();
};

// Rest offsets of every joint from its parent for a 1.75 m adult, with
// x pointing to the subject's right, y forward and z up.
const std::array<Eigen::Vector3d, 17>& rest_offsets() {
  static const std::array<Eigen::Vector3d, 17> offsets = {
      Eigen::Vector3d(0, 0, 0),        Eigen::Vector3d(0.13, 0, 0),
      Eigen::Vector3d(0, 0, -0.45),    Eigen::Vector3d(0, 0, -0.44),
      Eigen::Vector3d(-0.13, 0, 0),    Eigen::Vector3d(0, 0, -0.45),
      Eigen::Vector3d(0, 0, -0.44),    Eigen::Vector3d(0, 0, 0.23),
      Eigen::Vector3d(0, 0, 0.25),     Eigen::Vector3d(0, 0.02, 0.12),
      Eigen::Vector3d(0, 0.06, 0.11),  Eigen::Vector3d(-0.17, 0, 0),
      Eigen::Vector3d(0, 0, -0.28),    Eigen::Vector3d(0, 0, -0.25),
      Eigen::Vector3d(0.17, 0, 0),     Eigen::Vector3d(0, 0, -0.28),
      Eigen::Vector3d(0, 0, -0.25),
  };
  return offsets;
}

Eigen::Matrix3d rot_x(double a) { return Eigen::AngleAxisd(a, Eigen::Vector3d::UnitX()).matrix(); }
Eigen::Matrix3d rot_y(double a) { return Eigen::AngleAxisd(a, Eigen::Vector3d::UnitY()).matrix(); }
Eigen::Matrix3d rot_z(double a) { return Eigen::AngleAxisd(a, Eigen::Vector3d::UnitZ()).matrix(); }

Pose forward_kinematics(const JointAngles& q, const SkeletonTopology& topo,
                        const std::array<double, 17>& bone_scale, const Eigen::Vector3d& root) {
  std::array<Eigen::Matrix3d, 17> local;
  local.fill(Eigen::Matrix3d::Identity());
  local[0] = rot_z(q.yaw);
  local[7] = rot_x(-q.lean);
  local[1] = rot_x(q.hip[kRight]);
  local[4] = rot_x(q.hip[kLeft]);
  local[2] = rot_x(-q.knee[kRight]);
  local[5] = rot_x(-q.knee[kLeft]);
  local[14] = rot_x(q.shoulder_flex[kRight]) * rot_y(-q.shoulder_abd[kRight]);
  local[11] = rot_x(q.shoulder_flex[kLeft]) * rot_y(q.shoulder_abd[kLeft]);
  local[15] = rot_x(q.elbow[kRight]);
  local[12] = rot_x(q.elbow[kLeft]);

  const auto& offsets = rest_offsets();
  std::array<Eigen::Matrix3d, 17> global;
  Pose pose(17, 3);
  for (int j : topo.topological_order()) {
    const int p = topo.parent(j);
    if (p == SkeletonTopology::kRoot) {
      global[j] = local[j];
      pose.row(j) = (root + q.root_offset).transpose();
      continue;
    }
    global[j] = global[p] * local[j];
    pose.row(j) = pose.row(p) + (global[p] * offsets[j] * bone_scale[j]).transpose();
  }
  return pose;
}

double smoothstep(double x) {
  x = std::clamp(x, 0.0, 1.0);
  return x * x * (3.0 - 2.0 * x);
}

struct Variation {
  double amplitude = 1.0;
  double speed = 1.0;
  double sway_phase_a = 0.0;
  double sway_phase_b = 0.0;
  double preparation = 0.0;       // strength of the preparatory movement
  double preparation_time = 0.4;  // seconds before the branch point
};

// Small family-specific shift of the prefix posture that ramps in just
// before the motion starts.
void add_preparation(const std::string& family, double tau, const Variation& v, JointAngles& q) {
  if (v.preparation <= 0.0 || v.preparation_time <= 0.0) return;
  const double k = v.preparation * smoothstep((tau + v.preparation_time) / v.preparation_time);
  if (k <= 0.0) return;
  if (family == "arm_raise") {
    for (int s : {kRight, kLeft}) q.shoulder_abd[s] += 0.35 * k;
  } else if (family == "squat") {
    for (int s : {kRight, kLeft}) {
      q.hip[s] += 0.3 * k;
      q.knee[s] += 0.4 * k;
    }
  } else if (family == "wave") {
    q.shoulder_abd[kRight] += 0.5 * k;
    q.elbow[kRight] += 0.3 * k;
  } else if (family == "idle") {
    q.lean -= 0.12 * k;
  } else if (family == "walk") {
    q.hip[kRight] += 0.3 * k;
    q.knee[kRight] += 0.3 * k;
  } else if (family == "turn") {
    q.yaw += 0.12 * k;
  }
}

JointAngles prefix_posture(const std::string& prefix, double t, const Variation& v) {
  JointAngles q;
  const double w = 2.0 * kPi * 0.4;
  if (prefix == "stand") {
    q.shoulder_abd = {0.12, 0.12};
    q.elbow = {0.15, 0.15};
  } else {
    q.shoulder_flex = {1.3, 1.3};
    q.elbow = {0.35, 0.35};
    q.hip = {0.35, 0.35};
    q.knee = {0.6, 0.6};
    q.lean = 0.2;
  }
  q.lean += 0.03 * std::sin(w * t + v.sway_phase_a);
  q.shoulder_abd[kRight] += 0.04 * std::sin(w * t + v.sway_phase_b);
  q.shoulder_abd[kLeft] += 0.04 * std::sin(w * t + v.sway_phase_b + 0.5);
  return q;
}

// `tau` is the time since the branch point in seconds (negative before it).
JointAngles family_pose(const std::string& family, double t, double tau, const Variation& v) {
  JointAngles q = prefix_posture(motion_family_prefix(family), t, v);
  add_preparation(family, tau, v, q);
  if (tau <= 0.0) return q;
  const double a = v.amplitude;
  const double ts = tau * v.speed;
  auto toward = [](double from, double to, double r) { return from + (to - from) * r; };

  if (family == "arm_raise") {
    const double r = smoothstep(ts / 1.2);
    for (int s : {kRight, kLeft}) q.shoulder_abd[s] = toward(q.shoulder_abd[s], 2.7 * a, r);
  } else if (family == "squat") {
    const double r = smoothstep(ts / 1.4);
    for (int s : {kRight, kLeft}) {
      q.hip[s] = toward(q.hip[s], 1.5 * a, r);
      q.knee[s] = toward(q.knee[s], 2.0 * a, r);
      q.shoulder_flex[s] = toward(q.shoulder_flex[s], 1.3 * a, r);
    }
    q.lean = toward(q.lean, 0.45 * a, r);
    q.root_offset.z() = -0.45 * r;
  } else if (family == "wave") {
    const double r = smoothstep(ts / 0.8);
    q.shoulder_abd[kRight] = toward(q.shoulder_abd[kRight], 2.5 * a, r);
    q.elbow[kRight] = toward(q.elbow[kRight], 0.9 + 0.6 * std::sin(2.0 * kPi * 1.3 * ts), r);
  } else if (family == "walk") {
    const double r = smoothstep(ts / 0.6);
    const double phase = 2.0 * kPi * 0.9 * ts;
    const std::array<double, 2> swing = {std::sin(phase), -std::sin(phase)};
    for (int s : {kRight, kLeft}) {
      q.hip[s] = toward(q.hip[s], 0.1 + 0.55 * a * swing[s], r);
      q.knee[s] = toward(q.knee[s], 0.2 + 0.9 * a * std::max(0.0, swing[s]), r);
      q.shoulder_flex[s] = toward(q.shoulder_flex[s], 0.2 - 0.4 * a * swing[s], r);
    }
    q.lean = toward(q.lean, 0.05, r);
    q.root_offset.y() = 1.1 * ts * r;
  } else if (family == "turn") {
    const double r = smoothstep(ts / 2.0);
    q.yaw = kPi * a * r;
    const double phase = 2.0 * kPi * 1.2 * ts;
    q.knee[kRight] += 0.3 * r * std::max(0.0, std::sin(phase));
    q.knee[kLeft] += 0.3 * r * std::max(0.0, -std::sin(phase));
  } else if (family == "idle") {
    // The prefix sway simply continues.
  } else {
    throw ConfigError("unknown motion family '" + family + "'");
  }
  return q;
}

double quantize_micrometer(double x) { return std::round(x * 1e6) / 1e6; }

}  // namespace

void GeneratorConfig::validate() const {
  const int catalog = static_cast<int>(motion_family_names().size());
  if (joints != 17) {
    throw ConfigError("generator: only the 17-joint skeleton is supported (joints=" +
                      std::to_string(joints) + ")");
  }
  if (families < 2 || families > catalog) {
    throw ConfigError("generator: families must be in [2, " + std::to_string(catalog) + "]");
  }
  if (!(fps > 0.0) || sequences_per_family < 1 || prefix_frames < 1 || motion_frames < 1) {
    throw ConfigError("generator: fps, sequence count and frame counts must be positive");
  }
  if (!(actor_scale_min > 0.0) || actor_scale_max < actor_scale_min) {
    throw ConfigError("generator: actor scale range must be positive and ordered");
  }
  if (proportion_jitter < 0.0 || proportion_jitter >= 1.0 || speed_jitter < 0.0 ||
      speed_jitter >= 1.0 || amplitude_jitter < 0.0 || amplitude_jitter >= 1.0 || noise < 0.0 ||
      preparation < 0.0 || preparation_frames < 0 || preparation_frames > prefix_frames) {
    throw ConfigError(
        "generator: jitters must be in [0, 1), noise and preparation non-negative, "
        "preparation_frames <= prefix_frames");
  }
}

const std::vector<std::string>& motion_family_names() {
  // Interleaved so that any prefix of length >= 2 shares an observation posture.
  static const std::vector<std::string> names = {"arm_raise", "squat", "walk",
                                                 "turn",      "wave",  "idle"};
  return names;
}

std::string motion_family_prefix(const std::string& family) {
  if (family == "walk" || family == "turn") return "ready";
  return "stand";
}

MotionCorpus generate_synthetic_corpus(const GeneratorConfig& config, std::uint64_t seed) {
  config.validate();
  MotionCorpus corpus;
  corpus.topology = SkeletonTopology::human17();
  Rng rng(seed);
  const int frames = config.prefix_frames + config.motion_frames;

  for (int k = 0; k < config.families; ++k) {
    const std::string& family = motion_family_names()[k];
    for (int s = 0; s < config.sequences_per_family; ++s) {
      CorpusSequence seq;
      seq.action_label = family;
      seq.actor_scale = quantize_micrometer(rng.uniform(config.actor_scale_min, config.actor_scale_max));
      std::array<double, 17> bone_scale{};
      for (int j = 0; j < 17; ++j) {
        bone_scale[j] = seq.actor_scale * (1.0 + rng.uniform(-1.0, 1.0) * config.proportion_jitter);
      }
      Variation v;
      v.amplitude = 1.0 + rng.uniform(-1.0, 1.0) * config.amplitude_jitter;
      v.speed = 1.0 + rng.uniform(-1.0, 1.0) * config.speed_jitter;
      v.sway_phase_a = rng.uniform(0.0, 2.0 * kPi);
      v.sway_phase_b = rng.uniform(0.0, 2.0 * kPi);
      const Eigen::Vector3d root(rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0),
                                 0.95 * seq.actor_scale);
      const double heading = rng.uniform(-0.05, 0.05);
      v.preparation = config.preparation * rng.uniform();
      v.preparation_time = config.preparation_frames / config.fps;

      seq.motion.fps = config.fps;
      seq.motion.frames.reserve(frames);
      for (int f = 0; f < frames; ++f) {
        const double t = f / config.fps;
        const double tau = (f - config.prefix_frames) / config.fps;
        JointAngles q = family_pose(family, t, tau, v);
        q.yaw += heading;
        Pose pose = forward_kinematics(q, corpus.topology, bone_scale, root);
        for (Eigen::Index i = 0; i < pose.size(); ++i) {
          pose.data()[i] = quantize_micrometer(pose.data()[i] + rng.normal() * config.noise);
        }
        seq.motion.frames.push_back(std::move(pose));
      }
      corpus.sequences.push_back(std::move(seq));
    }
  }
  return corpus;
}

}  // namespace motionmap
