// Copyright 2026 The MotionMap Authors
// SPDX-License-Identifier: Apache-2.0

// Eigen must precede httplib: resolv.h defines a `_res` macro.
#include "motionmap/error.hpp"
#include "motionmap/explorer.hpp"

#include <httplib.h>

namespace motionmap {

void serve(const Explorer& explorer, const std::string& host, int port,
           const ServeReadyFn& on_ready) {
  httplib::Server server;
  server.Get(".*", [&explorer](const httplib::Request& req, httplib::Response& res) {
    HttpRequest r;
    r.path = req.path;
    for (const auto& [k, v] : req.params) r.query[k] = v;
    const HttpResponse out = explorer.handle(r);
    res.status = out.status;
    res.set_content(out.body, "application/json");
  });
  int bound = port;
  if (port == 0) {
    bound = server.bind_to_any_port(host);
  } else if (!server.bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) throw IoError("cannot bind " + host + ":" + std::to_string(port));
  if (on_ready) on_ready(bound, [&server] { server.stop(); });
  server.listen_after_bind();
}

}  // namespace motionmap
