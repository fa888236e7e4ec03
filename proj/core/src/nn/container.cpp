// Copyright 2026 The MotionMap Authors
// SPDX-License-Identifier: Apache-2.0

#include "motionmap/nn/container.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "motionmap/error.hpp"

namespace motionmap::nn {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t fnv1a(const std::string& s) { return fnv1a(s.data(), s.size()); }

const Matrix& Container::matrix(const std::string& name) const {
  auto it = matrices.find(name);
  if (it == matrices.end()) throw FormatError("checkpoint has no matrix '" + name + "'");
  return it->second;
}

const std::string& Container::text(const std::string& name) const {
  auto it = texts.find(name);
  if (it == texts.end()) throw FormatError("checkpoint has no entry '" + name + "'");
  return it->second;
}

void Container::put_params(const std::string& prefix, const ParameterStore& store) {
  for (const auto& [name, m] : store.values()) put(prefix + "/" + name, m);
  put_text(prefix + "#seed", std::to_string(store.seed()));
}

ParameterStore Container::get_params(const std::string& prefix) const {
  ParameterStore store(std::stoull(text(prefix + "#seed")));
  const std::string lead = prefix + "/";
  for (auto it = matrices.lower_bound(lead); it != matrices.end(); ++it) {
    if (it->first.compare(0, lead.size(), lead) != 0) break;
    store.add(it->first.substr(lead.size()), it->second);
  }
  if (store.values().empty()) throw FormatError("checkpoint has no parameters under '" + prefix + "'");
  return store;
}

void Container::put_adam(const std::string& prefix, const AdamState& state) {
  for (const auto& [name, m] : state.first_moment) put(prefix + "/m/" + name, m);
  for (const auto& [name, v] : state.second_moment) put(prefix + "/v/" + name, v);
  put_text(prefix + "#step", std::to_string(state.step));
}

AdamState Container::get_adam(const std::string& prefix) const {
  AdamState state;
  state.step = std::stoll(text(prefix + "#step"));
  for (const auto& [sub, target] :
       {std::pair{"/m/", &state.first_moment}, std::pair{"/v/", &state.second_moment}}) {
    const std::string lead = prefix + sub;
    for (auto it = matrices.lower_bound(lead); it != matrices.end(); ++it) {
      if (it->first.compare(0, lead.size(), lead) != 0) break;
      target->emplace(it->first.substr(lead.size()), it->second);
    }
  }
  return state;
}

namespace {

class Writer {
 public:
  void u32(std::uint32_t v) { raw(&v, sizeof v); }
  void u64(std::uint64_t v) { raw(&v, sizeof v); }
  void bytes(const std::string& s) { raw(s.data(), s.size()); }
  void raw(const void* p, std::size_t n) { buf_.append(static_cast<const char*>(p), n); }
  const std::string& buffer() const { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(std::string buf) : buf_(std::move(buf)) {}
  void raw(void* p, std::size_t n) {
    if (pos_ + n > buf_.size()) throw FormatError("checkpoint truncated");
    std::memcpy(p, buf_.data() + pos_, n);
    pos_ += n;
  }
  std::uint32_t u32() { std::uint32_t v; raw(&v, sizeof v); return v; }
  std::uint64_t u64() { std::uint64_t v; raw(&v, sizeof v); return v; }
  std::string bytes(std::size_t n) {
    if (pos_ + n > buf_.size()) throw FormatError("checkpoint truncated");
    std::string s = buf_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t pos() const { return pos_; }
  std::size_t size() const { return buf_.size(); }
  const std::string& buffer() const { return buf_; }

 private:
  std::string buf_;
  std::size_t pos_ = 0;
};

}  // namespace

void Container::write(std::ostream& os) const {
  Writer w;
  w.raw(kContainerMagic, 5);
  w.u64(spec_hash);
  w.u64(matrices.size());
  for (const auto& [name, m] : matrices) {
    w.u32(static_cast<std::uint32_t>(name.size()));
    w.bytes(name);
    w.u64(static_cast<std::uint64_t>(m.rows()));
    w.u64(static_cast<std::uint64_t>(m.cols()));
    w.raw(m.data(), sizeof(double) * static_cast<std::size_t>(m.size()));
  }
  w.u64(texts.size());
  for (const auto& [name, t] : texts) {
    w.u32(static_cast<std::uint32_t>(name.size()));
    w.bytes(name);
    w.u64(t.size());
    w.bytes(t);
  }
  const std::uint64_t sum = fnv1a(w.buffer().data(), w.buffer().size());
  os.write(w.buffer().data(), static_cast<std::streamsize>(w.buffer().size()));
  os.write(reinterpret_cast<const char*>(&sum), sizeof sum);
}

Container Container::read(std::istream& is) {
  std::ostringstream ss;
  ss << is.rdbuf();
  Reader r(ss.str());
  char magic[5];
  if (r.size() < 5) throw VersionError("not a checkpoint (file too short)");
  r.raw(magic, 5);
  if (std::memcmp(magic, kContainerMagic, 5) != 0) {
    throw VersionError("not a checkpoint (bad magic, expected MMAP1)");
  }
  if (r.size() < 5 + 8 + 8) throw FormatError("checkpoint truncated");
  std::uint64_t stored = 0;
  std::memcpy(&stored, r.buffer().data() + r.size() - 8, 8);
  if (fnv1a(r.buffer().data(), r.size() - 8) != stored) {
    throw FormatError("checkpoint checksum mismatch (corrupt or truncated file)");
  }
  Container c;
  c.spec_hash = r.u64();
  const std::uint64_t nm = r.u64();
  for (std::uint64_t i = 0; i < nm; ++i) {
    std::string name = r.bytes(r.u32());
    const std::uint64_t rows = r.u64();
    const std::uint64_t cols = r.u64();
    if (rows * cols * sizeof(double) > r.size()) throw FormatError("checkpoint matrix too large");
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    r.raw(m.data(), sizeof(double) * rows * cols);
    c.matrices.emplace(std::move(name), std::move(m));
  }
  const std::uint64_t nt = r.u64();
  for (std::uint64_t i = 0; i < nt; ++i) {
    std::string name = r.bytes(r.u32());
    c.texts.emplace(std::move(name), r.bytes(r.u64()));
  }
  if (r.pos() != r.size() - 8) throw FormatError("checkpoint has trailing data");
  return c;
}

void Container::save(const std::filesystem::path& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  write(os);
  if (!os) throw IoError("write failed for '" + path.string() + "'");
}

Container Container::load(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open '" + path.string() + "'");
  return read(is);
}

}  // namespace motionmap::nn
