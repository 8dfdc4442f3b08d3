// HTTP front end for the Gamma-Poisson explorer.

// Eigen must come before httplib: <resolv.h> defines a `_res` macro that
// collides with Eigen parameter names.
#include "mfvi/explorer/service.hpp"

#include <CLI11.hpp>
#include <httplib.h>

#include <iostream>
#include <string>

int main(int argc, char** argv) {
  CLI::App app{"Gamma-Poisson variational inference explorer service"};
  int port = 8080;
  std::string bind = "127.0.0.1";
  app.add_option("--port", port, "TCP port")->check(CLI::Range(1, 65535))->capture_default_str();
  app.add_option("--bind", bind, "Address to listen on")->capture_default_str();
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  mfvi::explorer::Service service;
  httplib::Server server;
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                              {"Access-Control-Allow-Headers", "Content-Type"}});

  auto route = [&](const std::string& method) {
    return [&service, method](const httplib::Request& req, httplib::Response& res) {
      const auto r = service.handle(method, req.path, req.body);
      res.status = r.status;
      res.set_content(r.body.dump(), "application/json");
    };
  };
  server.Post(R"(/api/.*)", route("POST"));
  server.Get(R"(/api/.*)", route("GET"));
  server.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  std::cerr << "listening on http://" << bind << ':' << port << '\n';
  if (!server.listen(bind, port)) {
    std::cerr << "error: cannot listen on " << bind << ':' << port << '\n';
    return 1;
  }
  return 0;
}
