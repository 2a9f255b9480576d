// ceckd_serve: HTTP ingestion and alerting service.
// Listen address comes from CECKD_LISTEN (default 127.0.0.1:8080) unless --listen is given.

#include <cstdlib>
#include <iostream>

#include "CLI11.hpp"
#include "ceckd/ingest/http_api.hpp"
#include "ceckd/ingest/service.hpp"

using namespace ceckd;

int main(int argc, char** argv)
{
    CLI::App app{"CEC-kd monitoring service"};
    std::string config_path, listen, log_dir;
    app.add_option("--config,-c", config_path, "JSON config {log_dir, default_window, default_suppress_window}");
    app.add_option("--listen", listen, "host:port (overrides CECKD_LISTEN)");
    app.add_option("--log-dir", log_dir, "narrative log directory (overrides the config)");
    CLI11_PARSE(app, argc, argv);

    try {
        auto cfg = config_path.empty() ? ingest::ServiceConfig{} : ingest::ServiceConfig::load(config_path);
        if (!log_dir.empty())
            cfg.log_dir = log_dir;
        if (listen.empty()) {
            const char* env = std::getenv("CECKD_LISTEN");
            listen = env && *env ? env : "127.0.0.1:8080";
        }
        const auto [host, port] = ingest::parse_listen(listen);

        ingest::Service svc(cfg);
        httplib::Server server;
        ingest::install_routes(server, svc);
        std::cerr << "ceckd_serve: " << svc.patients().size() << " patients, " << svc.rules().size()
                  << " rules, listening on " << host << ':' << port << '\n';
        if (!server.listen(host, port)) {
            std::cerr << "error: cannot listen on " << listen << '\n';
            return 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
