// Copyright 2026 The MotionMap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "motionmap/data.hpp"
#include "motionmap/pipeline.hpp"

namespace motionmap {

struct HttpRequest {
  std::string method = "GET";
  std::string path;
  std::map<std::string, std::string> query;
};

struct HttpResponse {
  int status = 200;
  std::string body;  // JSON
};

// Read-only JSON facade over loaded models and samples. Every response is a
// pure function of the loaded state and the request, so `handle` may be
// called concurrently.
//
//   GET /healthz
//   GET /api/samples
//   GET /api/motionmap?sample=ID
//   GET /api/forecast?sample=ID&row=R&col=C
//   GET /api/actionmap?sample=ID
//
// Errors are {"code": status, "message": text} with 400 (bad parameters or
// out-of-range cell), 404 (unknown route or sample) and 422 (no populated
// codebook cell near the requested one).
class Explorer {
 public:
  Explorer(Models models, std::vector<Sample> samples, std::uint64_t checkpoint_hash);

  HttpResponse handle(const HttpRequest& request) const;

  const Models& models() const { return models_; }
  const std::vector<Sample>& samples() const { return samples_; }

 private:
  const Sample* find(const HttpRequest& request) const;

  Models models_;
  std::vector<Sample> samples_;  // sorted by id
  std::uint64_t checkpoint_hash_ = 0;
};

// JSON body of a forecast at a cell, shared by the explorer and exports so
// both emit identical bytes.
std::string forecast_json(const RankedForecast& forecast);

// Loads the checkpoint and corpus named by the config into an Explorer.
Explorer load_explorer(const std::filesystem::path& checkpoint, const std::vector<Sample>& samples);

// Blocks serving HTTP on host:port. Port 0 binds a free port. `on_ready`
// receives the bound port and a function that stops the server.
using ServeReadyFn = std::function<void(int port, std::function<void()> stop)>;
void serve(const Explorer& explorer, const std::string& host, int port,
           const ServeReadyFn& on_ready = {});

}  // namespace motionmap
