#pragma once

#include <string>

#include <httplib.h>

#include "ghsim/opsvc/service.hpp"

namespace ghsim::ops {

/// Binds every API route of `svc` onto an httplib server.
inline void mount(httplib::Server& server, Service& svc) {
  auto handler = [&svc](const httplib::Request& req, httplib::Response& res) {
    Request r;
    r.method = req.method;
    r.path = req.path;
    for (const auto& [k, v] : req.params) r.query[k] = v;
    r.body = req.body;
    r.authorization = req.get_header_value("Authorization");
    const Response out = svc.dispatch(r);
    res.status = out.status;
    res.set_content(out.body, out.content_type.c_str());
  };
  const std::string pattern = R"(/api/.*)";
  server.Get(pattern, handler);
  server.Post(pattern, handler);
  server.Put(pattern, handler);
  server.Delete(pattern, handler);
}

}  // namespace ghsim::ops
