#pragma once

#include "kgrx/kg_store.hpp"
#include "kgrx/recommender.hpp"
#include "kgrx/retrieval.hpp"
#include "kgrx/safety.hpp"

#include <json.hpp>

#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>

namespace kgrx {

struct ServiceConfig {
    std::string kg_path;
    std::string classifier_path; ///< empty: train the default classifier at startup
    SafetyWeights weights;
    double alpha = 0.5;
    std::size_t top_k = 10;
    std::size_t guidelines_m = 3;
    std::size_t candidates_per_round = 5;
    std::size_t max_rounds = 3;
    std::string host = "127.0.0.1";
    int port = 8080;
    std::size_t max_body_bytes = 1 << 20;

    /// Throws ConfigError.
    void validate() const;
    RecommendConfig recommend_config() const;
    nlohmann::json echo() const;
};

/// Reads an optional JSON config file, then applies environment overrides:
/// KGRX_KG_PATH, KGRX_CLASSIFIER_PATH, KGRX_WEIGHTS ("w_dose,w_allergy,w_interaction"),
/// KGRX_TAU, KGRX_ALPHA, KGRX_TOPK, KGRX_GUIDELINES_M, KGRX_CANDIDATES,
/// KGRX_ROUNDS, KGRX_HOST, KGRX_PORT, KGRX_MAX_BODY_BYTES.
/// Throws ConfigError.
ServiceConfig load_service_config(const std::string& path, const std::map<std::string, std::string>& env);

/// Snapshot of the process environment restricted to KGRX_* names.
std::map<std::string, std::string> kgrx_environment();

struct HttpResponse {
    int status = 200;
    std::string body;
};

/// Request handling without sockets. State is the loaded graph and classifier
/// only; every request is computed from scratch.
class Service {
public:
    explicit Service(ServiceConfig config);

    /// Loads the graph and the classifier named by the config.
    void load();
    /// Installs an already built graph and classifier.
    void attach(KnowledgeGraph graph, SafetyClassifier classifier);
    bool ready() const;
    const ServiceConfig& config() const { return config_; }

    HttpResponse handle(std::string_view method, std::string_view path, std::string_view body) const;

private:
    struct Engine {
        KnowledgeGraph graph;
        std::unique_ptr<Retriever> retriever;
        SafetyClassifier classifier;
    };

    std::shared_ptr<const Engine> engine() const;

    HttpResponse health() const;
    HttpResponse parse(const Engine& e, std::string_view body) const;
    HttpResponse recommend(const Engine& e, std::string_view body) const;
    HttpResponse whatif(const Engine& e, std::string_view body) const;
    HttpResponse node(const Engine& e, std::string_view id) const;

    ServiceConfig config_;
    mutable std::mutex mutex_;
    std::shared_ptr<const Engine> engine_;
};

/// HTTP front end for a Service. The listener runs on a background thread.
class HttpServer {
public:
    /// `log` receives one JSON line per request; null disables logging.
    explicit HttpServer(Service& service, std::ostream* log = nullptr);
    ~HttpServer();
    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;
    /// Binds and starts listening. Port 0 picks a free port. Returns the bound port.
    int start(const std::string& host, int port);
    void stop();
    /// Blocks until the listener exits.
    void wait();
    void log(const nlohmann::json& line);
private:
    struct Impl;
    Service* service_;
    std::unique_ptr<Impl> impl_;
};

/// Binds the HTTP server, loads the service in the background of the running
/// listener (health reports "loading" meanwhile) and blocks until stopped.
/// Each request is logged as one JSON line on stdout.
void run_server(Service& service);

} // namespace kgrx
