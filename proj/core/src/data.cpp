// Copyright 2026 The MotionMap Authors
// SPDX-License-Identifier: Apache-2.0

#include "motionmap/data.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "motionmap/error.hpp"
#include "motionmap/rng.hpp"

namespace motionmap {

bool MotionCorpus::operator==(const MotionCorpus& other) const {
  if (!(topology == other.topology) || sequences.size() != other.sequences.size()) return false;
  for (std::size_t i = 0; i < sequences.size(); ++i) {
    const auto& a = sequences[i];
    const auto& b = other.sequences[i];
    if (a.action_label != b.action_label || a.actor_scale != b.actor_scale ||
        !(a.motion == b.motion)) {
      return false;
    }
  }
  return true;
}

int window_count(int length, int obs_frames, int future_frames, int stride) {
  const int span = obs_frames + future_frames;
  if (length < span) return 0;
  return (length - span) / stride + 1;
}

std::vector<Sample> window_corpus(const MotionCorpus& corpus, int obs_frames, int future_frames,
                                  int stride) {
  if (obs_frames < 1 || future_frames < 1 || stride < 1) {
    throw DomainError("window_corpus: window lengths and stride must be >= 1");
  }
  std::vector<Sample> samples;
  int next_id = 0;
  for (std::size_t s = 0; s < corpus.sequences.size(); ++s) {
    const auto& seq = corpus.sequences[s];
    const int count = window_count(seq.motion.frame_count(), obs_frames, future_frames, stride);
    for (int w = 0; w < count; ++w) {
      const PoseSequence window =
          zero_center(seq.motion.slice(w * stride, obs_frames + future_frames), corpus.topology);
      Sample sample;
      sample.id = next_id++;
      sample.observation = window.slice(0, obs_frames);
      sample.future = window.slice(obs_frames, future_frames);
      sample.action_label = seq.action_label;
      sample.source_sequence = static_cast<int>(s);
      samples.push_back(std::move(sample));
    }
  }
  return samples;
}

const std::vector<int>& MultimodalGTIndex::members_of(int sample_id) const {
  const auto it = std::lower_bound(sample_ids.begin(), sample_ids.end(), sample_id);
  if (it == sample_ids.end() || *it != sample_id) {
    throw DomainError("MultimodalGTIndex: unknown sample id " + std::to_string(sample_id));
  }
  return members[it - sample_ids.begin()];
}

namespace {

// Per-sample quantities the pairwise predicate needs: the skeleton of the
// last observed frame and the link angles of the last three frames.
struct MiningFeatures {
  Eigen::VectorXd lengths;
  std::vector<SphericalPose> angles;
  std::vector<Pose> frames;
};

MiningFeatures mining_features(const Sample& s, const SkeletonTopology& topo) {
  if (s.observation.frame_count() < kMiningFrames) {
    throw ShapeError("mining needs at least " + std::to_string(kMiningFrames) +
                     " observed frames, sample " + std::to_string(s.id) + " has " +
                     std::to_string(s.observation.frame_count()));
  }
  const PoseSequence tail = s.observation.tail(kMiningFrames);
  MiningFeatures f;
  f.lengths = link_lengths(tail.frames.back(), topo);
  f.angles = cartesian_to_spherical(tail, topo);
  f.frames = tail.frames;
  return f;
}

double feature_distance(const MiningFeatures& a, const MiningFeatures& b,
                        const SkeletonTopology& topo) {
  double total = 0.0;
  for (int f = 0; f < kMiningFrames; ++f) {
    SphericalPose s = b.angles[f];
    s.rho = a.lengths;
    const Pose moved = spherical_to_cartesian(s, topo);
    total += (a.frames[f] - moved).rowwise().norm().sum();
  }
  return total / (kMiningFrames * topo.joint_count());
}

void check_tau(double tau) {
  if (!(tau >= 0.0)) throw DomainError("mining threshold must be >= 0");
}

}  // namespace

double observation_distance(const Sample& a, const Sample& b, const SkeletonTopology& topo) {
  return feature_distance(mining_features(a, topo), mining_features(b, topo), topo);
}

MultimodalGTIndex mine_against_pool(const std::vector<Sample>& queries,
                                    const std::vector<Sample>& pool,
                                    const SkeletonTopology& topo, double tau) {
  check_tau(tau);
  std::vector<MiningFeatures> qf;
  std::vector<MiningFeatures> pf;
  qf.reserve(queries.size());
  pf.reserve(pool.size());
  for (const auto& s : queries) qf.push_back(mining_features(s, topo));
  for (const auto& s : pool) pf.push_back(mining_features(s, topo));

  std::vector<std::size_t> order(queries.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return queries[a].id < queries[b].id; });

  MultimodalGTIndex index;
  index.tau = tau;
  for (std::size_t qi : order) {
    std::vector<int> members;
    for (std::size_t pi = 0; pi < pool.size(); ++pi) {
      if (feature_distance(qf[qi], pf[pi], topo) <= tau) members.push_back(pool[pi].id);
    }
    std::sort(members.begin(), members.end());
    index.sample_ids.push_back(queries[qi].id);
    index.members.push_back(std::move(members));
  }
  return index;
}

MultimodalGTIndex mine_multimodal_gt(const std::vector<Sample>& samples,
                                     const SkeletonTopology& topo, double tau) {
  MultimodalGTIndex index = mine_against_pool(samples, samples, topo, tau);
  for (std::size_t i = 0; i < index.size(); ++i) {
    auto& m = index.members[i];
    const int self = index.sample_ids[i];
    if (!std::binary_search(m.begin(), m.end(), self)) {
      m.insert(std::lower_bound(m.begin(), m.end(), self), self);
    }
  }
  return index;
}

std::vector<int> choose_test_sequences(const MotionCorpus& corpus, double test_fraction,
                                       std::uint64_t seed) {
  if (test_fraction < 0.0 || test_fraction >= 1.0) {
    throw DomainError("test fraction must be in [0, 1)");
  }
  std::map<std::string, std::vector<int>> by_label;
  for (std::size_t i = 0; i < corpus.sequences.size(); ++i) {
    by_label[corpus.sequences[i].action_label].push_back(static_cast<int>(i));
  }
  Rng rng(seed);
  std::vector<int> test;
  for (auto& [label, ids] : by_label) {
    // Fisher-Yates with the portable generator.
    for (std::size_t i = ids.size(); i > 1; --i) {
      std::swap(ids[i - 1], ids[rng.below(i)]);
    }
    const auto take = static_cast<std::size_t>(std::lround(test_fraction * ids.size()));
    test.insert(test.end(), ids.begin(), ids.begin() + std::min(take, ids.size()));
  }
  std::sort(test.begin(), test.end());
  return test;
}

// ---------------------------------------------------------------- corpus I/O

namespace {

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

[[noreturn]] void malformed(int line, const std::string& what) {
  throw FormatError("corpus line " + std::to_string(line) + ": " + what);
}

double parse_double(const std::string& tok, int line) {
  double v = 0.0;
  const char* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, v);
  if (ec != std::errc() || ptr != end) malformed(line, "bad number '" + tok + "'");
  return v;
}

int parse_int(const std::string& tok, int line) {
  int v = 0;
  const char* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, v);
  if (ec != std::errc() || ptr != end) malformed(line, "bad integer '" + tok + "'");
  return v;
}

}  // namespace

void write_corpus(const MotionCorpus& corpus, std::ostream& os) {
  const auto& topo = corpus.topology;
  const double fps = corpus.sequences.empty() ? 25.0 : corpus.sequences.front().motion.fps;
  os << kCorpusMagic << '\t' << kCorpusVersion << '\t' << fixed6(fps) << '\t'
     << topo.joint_count() << '\t';
  for (int j = 0; j < topo.joint_count(); ++j) os << (j ? "," : "") << topo.parent(j);
  os << '\t';
  for (int j = 0; j < topo.joint_count(); ++j) os << (j ? "," : "") << topo.names()[j];
  os << '\t' << corpus.sequences.size() << '\n';

  for (const auto& seq : corpus.sequences) {
    if (seq.action_label.empty() ||
        seq.action_label.find_first_of(" \t\n") != std::string::npos) {
      throw FormatError("action label '" + seq.action_label + "' must be a non-empty token");
    }
    if (seq.motion.fps != fps) throw FormatError("corpus sequences must share one fps");
    os << seq.action_label << '\t' << fixed6(seq.actor_scale) << '\t' << seq.motion.frame_count()
       << '\t';
    bool first = true;
    for (const auto& frame : seq.motion.frames) {
      for (Eigen::Index i = 0; i < frame.size(); ++i) {
        if (!first) os << ' ';
        os << fixed6(frame.data()[i]);
        first = false;
      }
    }
    os << '\n';
  }
}

MotionCorpus read_corpus(std::istream& is) {
  std::string line;
  int line_no = 1;
  if (!std::getline(is, line)) malformed(line_no, "missing header");
  const auto header = split(line, '\t');
  if (header.empty() || header[0] != kCorpusMagic) {
    throw VersionError("not a motion corpus file (expected magic '" + std::string(kCorpusMagic) +
                       "')");
  }
  if (header.size() != 7) malformed(line_no, "header has " + std::to_string(header.size()) +
                                                 " fields, expected 7");
  if (parse_int(header[1], line_no) != kCorpusVersion) {
    throw VersionError("unsupported corpus version " + header[1]);
  }
  const double fps = parse_double(header[2], line_no);
  const int joints = parse_int(header[3], line_no);
  std::vector<int> parents;
  for (const auto& tok : split(header[4], ',')) parents.push_back(parse_int(tok, line_no));
  std::vector<std::string> names = split(header[5], ',');
  const int count = parse_int(header[6], line_no);
  if (static_cast<int>(parents.size()) != joints || static_cast<int>(names.size()) != joints) {
    malformed(line_no, "parent/name lists do not match joint count");
  }
  MotionCorpus corpus;
  try {
    corpus.topology = SkeletonTopology(parents, names);
  } catch (const Error& e) {
    malformed(line_no, e.what());
  }

  for (int s = 0; s < count; ++s) {
    ++line_no;
    if (!std::getline(is, line)) malformed(line_no, "expected sequence record, found end of file");
    const auto fields = split(line, '\t');
    if (fields.size() != 4) malformed(line_no, "expected 4 tab-separated fields");
    CorpusSequence seq;
    seq.action_label = fields[0];
    seq.actor_scale = parse_double(fields[1], line_no);
    const int frames = parse_int(fields[2], line_no);
    if (frames < 1) malformed(line_no, "frame count must be positive");
    const std::size_t expected = static_cast<std::size_t>(frames) * joints * 3;
    std::vector<double> values;
    values.reserve(expected);
    const std::string& data = fields[3];
    std::size_t pos = 0;
    while (pos < data.size()) {
      const std::size_t next = std::min(data.find(' ', pos), data.size());
      values.push_back(parse_double(data.substr(pos, next - pos), line_no));
      pos = next + 1;
    }
    if (values.size() != expected) {
      malformed(line_no, "expected " + std::to_string(expected) + " coordinates, found " +
                             std::to_string(values.size()));
    }
    seq.motion = PoseSequence::unflatten(Eigen::Map<Eigen::VectorXd>(values.data(), values.size()),
                                         joints, fps);
    corpus.sequences.push_back(std::move(seq));
  }
  return corpus;
}

void save_corpus(const MotionCorpus& corpus, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  write_corpus(corpus, os);
  if (!os) throw IoError("write failed for '" + path.string() + "'");
}

MotionCorpus load_corpus(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open '" + path.string() + "'");
  return read_corpus(is);
}

// ------------------------------------------------------------- mining sidecar

namespace {

void write_index(std::ostream& os, const std::string& name, const MultimodalGTIndex& index) {
  os << "index\t" << name << '\t' << index.size() << '\n';
  for (std::size_t i = 0; i < index.size(); ++i) {
    os << index.sample_ids[i] << '\t';
    for (std::size_t k = 0; k < index.members[i].size(); ++k) {
      os << (k ? " " : "") << index.members[i][k];
    }
    os << '\n';
  }
}

MultimodalGTIndex read_index(std::istream& is, const std::string& name, double tau,
                             int& line_no) {
  std::string line;
  ++line_no;
  if (!std::getline(is, line)) malformed(line_no, "missing index '" + name + "'");
  const auto head = split(line, '\t');
  if (head.size() != 3 || head[0] != "index" || head[1] != name) {
    malformed(line_no, "expected index header for '" + name + "'");
  }
  const int rows = parse_int(head[2], line_no);
  MultimodalGTIndex index;
  index.tau = tau;
  for (int r = 0; r < rows; ++r) {
    ++line_no;
    if (!std::getline(is, line)) malformed(line_no, "truncated index '" + name + "'");
    const auto fields = split(line, '\t');
    if (fields.size() != 2) malformed(line_no, "expected id and member list");
    index.sample_ids.push_back(parse_int(fields[0], line_no));
    std::vector<int> members;
    if (!fields[1].empty()) {
      for (const auto& tok : split(fields[1], ' ')) members.push_back(parse_int(tok, line_no));
    }
    index.members.push_back(std::move(members));
  }
  return index;
}

}  // namespace

void save_sidecar(const MiningSidecar& sc, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  char tau[64];
  std::snprintf(tau, sizeof tau, "%.17g", sc.tau);
  os << "MMGT\t1\t" << sc.obs_frames << '\t' << sc.future_frames << '\t' << sc.stride << '\t'
     << tau << '\n';
  os << "test";
  for (int id : sc.test_ids) os << '\t' << id;
  os << '\n';
  write_index(os, "train", sc.train);
  write_index(os, "test_train", sc.test_train);
  write_index(os, "test_test", sc.test_test);
  if (!os) throw IoError("write failed for '" + path.string() + "'");
}

MiningSidecar load_sidecar(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open '" + path.string() + "'");
  std::string line;
  int line_no = 1;
  if (!std::getline(is, line)) malformed(line_no, "empty sidecar");
  const auto head = split(line, '\t');
  if (head.empty() || head[0] != "MMGT") throw VersionError("not a mining sidecar");
  if (head.size() != 6 || head[1] != "1") throw VersionError("unsupported sidecar version");
  MiningSidecar sc;
  sc.obs_frames = parse_int(head[2], line_no);
  sc.future_frames = parse_int(head[3], line_no);
  sc.stride = parse_int(head[4], line_no);
  sc.tau = parse_double(head[5], line_no);
  ++line_no;
  if (!std::getline(is, line)) malformed(line_no, "missing test split");
  const auto test = split(line, '\t');
  if (test.empty() || test[0] != "test") malformed(line_no, "expected test split record");
  for (std::size_t i = 1; i < test.size(); ++i) sc.test_ids.push_back(parse_int(test[i], line_no));
  sc.train = read_index(is, "train", sc.tau, line_no);
  sc.test_train = read_index(is, "test_train", sc.tau, line_no);
  sc.test_test = read_index(is, "test_test", sc.tau, line_no);
  return sc;
}

}  // namespace motionmap
