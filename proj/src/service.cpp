#include "kgrx/service.hpp"

#include "kgrx/errors.hpp"
#include "kgrx/harness.hpp"
#include "kgrx/json_io.hpp"

#include <httplib.h>

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

extern char** environ;

namespace kgrx {

namespace {

/// Thrown inside handlers and turned into an error response.
struct HttpError {
    int status;
    std::string code;
    std::string message;
    std::string field;
};

HttpResponse error_response(int status, const std::string& code, const std::string& message,
                            const std::string& field = {}) {
    json err = {{"code", code}, {"message", message}};
    if (!field.empty()) err["field"] = field;
    return {status, json{{"error", err}}.dump()};
}

HttpResponse ok(const json& body) { return {200, body.dump()}; }

json parse_body(std::string_view body) {
    try {
        return json::parse(body);
    } catch (const json::parse_error& e) {
        throw HttpError{400, "malformed_json", e.what(), {}};
    }
}

/// Shape errors are 400, invariant violations 422.
ClinicalRecord request_record(const json& j, const KnowledgeGraph& graph, const std::string& prefix = {}) {
    auto with_prefix = [&](const std::string& f) { return prefix.empty() ? f : prefix + "." + f; };
    ClinicalRecord r;
    try {
        r = record_from_json(j);
    } catch (const SchemaError& e) {
        throw HttpError{400, "schema_error", e.what(), with_prefix(e.field())};
    }
    try {
        validate_record(r);
        validate_profile_ids(r.profile, graph);
    } catch (const InvalidRecord& e) {
        throw HttpError{422, "invalid_record", e.what(), with_prefix(e.field())};
    }
    return r;
}

double env_number(const std::string& name, const std::string& value) {
    try {
        std::size_t used = 0;
        const double d = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return d;
    } catch (const std::exception&) {
        throw ConfigError(name + ": expected a number, got '" + value + "'");
    }
}

std::size_t env_count(const std::string& name, const std::string& value) {
    const double d = env_number(name, value);
    if (d < 0.0 || d != std::floor(d)) throw ConfigError(name + ": expected a nonnegative integer");
    return static_cast<std::size_t>(d);
}

SafetyWeights weights_from_list(const std::vector<double>& w, double tau) {
    if (w.size() != 3) throw ConfigError("weights need three values");
    return SafetyWeights(w[0], w[1], w[2], tau);
}

std::vector<double> parse_weight_list(const std::string& name, const std::string& s) {
    std::vector<double> out;
    std::stringstream in(s);
    for (std::string part; std::getline(in, part, ',');) out.push_back(env_number(name, part));
    return out;
}

json report_scores(const SafetyReport& r) {
    json violations = json::array();
    for (auto v : r.hard_violations) violations.push_back(to_string(v));
    return {{"s_dose", r.s_dose},
            {"s_allergy", r.s_allergy},
            {"s_interaction", r.s_interaction},
            {"s_safety", r.s_safety},
            {"classifier_unsafe_prob", r.classifier_unsafe_prob},
            {"hard_violations", violations},
            {"verdict", r.verdict ? json(to_string(*r.verdict)) : json(nullptr)}};
}

std::map<std::string, const SafetyReport*> reports_by_drug(const Recommendation& r) {
    std::map<std::string, const SafetyReport*> out;
    if (r.emitted) out.emplace(r.emitted->candidate.drug, &r.emitted->report);
    for (const auto& v : r.rejected) out.emplace(v.candidate.drug, &v.report);
    for (const auto& v : r.alternatives) out.emplace(v.candidate.drug, &v.report);
    return out;
}

json whatif_deltas(const Recommendation& base, const Recommendation& mod) {
    auto drug_of = [](const Recommendation& r) { return r.emitted ? json(r.emitted->candidate.drug) : json(nullptr); };
    json candidates = json::array();
    const auto a = reports_by_drug(base);
    const auto b = reports_by_drug(mod);
    for (const auto& [drug, ra] : a) {
        auto it = b.find(drug);
        if (it == b.end()) continue;
        const SafetyReport* rb = it->second;
        candidates.push_back({{"drug", drug},
                              {"baseline", report_scores(*ra)},
                              {"modified", report_scores(*rb)},
                              {"delta",
                               {{"s_dose", rb->s_dose - ra->s_dose},
                                {"s_allergy", rb->s_allergy - ra->s_allergy},
                                {"s_interaction", rb->s_interaction - ra->s_interaction},
                                {"s_safety", rb->s_safety - ra->s_safety},
                                {"classifier_unsafe_prob", rb->classifier_unsafe_prob - ra->classifier_unsafe_prob}}}});
    }
    const json da = drug_of(base);
    const json db = drug_of(mod);
    return {{"emitted_drug", {{"baseline", da}, {"modified", db}, {"changed", da != db}}},
            {"outcome_changed", base.abstained() != mod.abstained()},
            {"attempts", {{"baseline", base.attempts}, {"modified", mod.attempts}}},
            {"candidates", candidates}};
}

json recommendation_payload(const ClinicalRecord& record, const Recommendation& rec, const RecommendConfig& rc) {
    json j = rec;
    j["record_id"] = record.record_id;
    j["config"] = {{"weights", rc.weights},
                   {"tau", rc.weights.tau()},
                   {"alpha", rc.gate.alpha()},
                   {"top_k", rc.top_k},
                   {"guidelines_m", rc.guidelines_m},
                   {"candidates_per_round", rc.candidates_per_round},
                   {"max_rounds", rc.max_rounds}};
    return j;
}

} // namespace

void ServiceConfig::validate() const {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
    if (top_k < 1) throw ConfigError("top_k must be at least 1");
    if (candidates_per_round < 1) throw ConfigError("candidates_per_round must be at least 1");
    if (max_rounds < 1) throw ConfigError("max_rounds must be at least 1");
    if (port < 0 || port > 65535) throw ConfigError("port out of range");
    if (max_body_bytes < 1) throw ConfigError("max_body_bytes must be positive");
}

RecommendConfig ServiceConfig::recommend_config() const {
    RecommendConfig rc;
    rc.weights = weights;
    rc.gate = FusionGate(alpha);
    rc.top_k = top_k;
    rc.guidelines_m = guidelines_m;
    rc.candidates_per_round = candidates_per_round;
    rc.max_rounds = max_rounds;
    return rc;
}

json ServiceConfig::echo() const {
    return {{"kg_path", kg_path},
            {"classifier_path", classifier_path},
            {"weights", weights},
            {"tau", weights.tau()},
            {"alpha", alpha},
            {"top_k", top_k},
            {"guidelines_m", guidelines_m},
            {"candidates_per_round", candidates_per_round},
            {"max_rounds", max_rounds},
            {"host", host},
            {"port", port},
            {"max_body_bytes", max_body_bytes}};
}

std::map<std::string, std::string> kgrx_environment() {
    std::map<std::string, std::string> out;
    for (char** e = environ; e != nullptr && *e != nullptr; ++e) {
        std::string_view kv(*e);
        if (!kv.starts_with("KGRX_")) continue;
        const auto eq = kv.find('=');
        if (eq == std::string_view::npos) continue;
        out.emplace(std::string(kv.substr(0, eq)), std::string(kv.substr(eq + 1)));
    }
    return out;
}

ServiceConfig load_service_config(const std::string& path, const std::map<std::string, std::string>& env) {
    ServiceConfig c;
    std::vector<double> w{c.weights.w_dose(), c.weights.w_allergy(), c.weights.w_interaction()};
    double tau = c.weights.tau();
    if (!path.empty()) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config file " + path);
        json j;
        try {
            j = json::parse(in);
        } catch (const json::parse_error& e) {
            throw ConfigError("config file " + path + ": " + e.what());
        }
        if (!j.is_object()) throw ConfigError("config file must hold an object");
        try {
            for (auto it = j.begin(); it != j.end(); ++it) {
                const std::string& k = it.key();
                const json& v = it.value();
                if (k == "kg_path") c.kg_path = v.get<std::string>();
                else if (k == "classifier_path") c.classifier_path = v.get<std::string>();
                else if (k == "weights") w = v.get<std::vector<double>>();
                else if (k == "tau") tau = v.get<double>();
                else if (k == "alpha") c.alpha = v.get<double>();
                else if (k == "top_k") c.top_k = v.get<std::size_t>();
                else if (k == "guidelines_m") c.guidelines_m = v.get<std::size_t>();
                else if (k == "candidates_per_round") c.candidates_per_round = v.get<std::size_t>();
                else if (k == "max_rounds") c.max_rounds = v.get<std::size_t>();
                else if (k == "host") c.host = v.get<std::string>();
                else if (k == "port") c.port = v.get<int>();
                else if (k == "max_body_bytes") c.max_body_bytes = v.get<std::size_t>();
                else throw ConfigError("config file: unknown key " + k);
            }
        } catch (const json::exception& e) {
            throw ConfigError("config file " + path + ": " + e.what());
        }
    }
    auto get = [&](const char* name) -> const std::string* {
        auto it = env.find(name);
        return it == env.end() ? nullptr : &it->second;
    };
    if (auto v = get("KGRX_KG_PATH")) c.kg_path = *v;
    if (auto v = get("KGRX_CLASSIFIER_PATH")) c.classifier_path = *v;
    if (auto v = get("KGRX_WEIGHTS")) w = parse_weight_list("KGRX_WEIGHTS", *v);
    if (auto v = get("KGRX_TAU")) tau = env_number("KGRX_TAU", *v);
    if (auto v = get("KGRX_ALPHA")) c.alpha = env_number("KGRX_ALPHA", *v);
    if (auto v = get("KGRX_TOPK")) c.top_k = env_count("KGRX_TOPK", *v);
    if (auto v = get("KGRX_GUIDELINES_M")) c.guidelines_m = env_count("KGRX_GUIDELINES_M", *v);
    if (auto v = get("KGRX_CANDIDATES")) c.candidates_per_round = env_count("KGRX_CANDIDATES", *v);
    if (auto v = get("KGRX_ROUNDS")) c.max_rounds = env_count("KGRX_ROUNDS", *v);
    if (auto v = get("KGRX_HOST")) c.host = *v;
    if (auto v = get("KGRX_PORT")) c.port = static_cast<int>(env_count("KGRX_PORT", *v));
    if (auto v = get("KGRX_MAX_BODY_BYTES")) c.max_body_bytes = env_count("KGRX_MAX_BODY_BYTES", *v);
    c.weights = weights_from_list(w, tau);
    c.validate();
    return c;
}

Service::Service(ServiceConfig config) : config_(std::move(config)) { config_.validate(); }

void Service::load() {
    if (config_.kg_path.empty()) throw ConfigError("no knowledge graph path configured");
    KnowledgeGraph graph = load_graph(config_.kg_path);
    SafetyClassifier classifier =
        config_.classifier_path.empty() ? default_classifier(graph) : load_classifier(config_.classifier_path);
    attach(std::move(graph), classifier);
}

void Service::attach(KnowledgeGraph graph, SafetyClassifier classifier) {
    auto e = std::make_shared<Engine>();
    e->graph = std::move(graph);
    e->retriever = std::make_unique<Retriever>(e->graph);
    e->classifier = classifier;
    std::lock_guard lock(mutex_);
    engine_ = std::move(e);
}

bool Service::ready() const { return engine() != nullptr; }

std::shared_ptr<const Service::Engine> Service::engine() const {
    std::lock_guard lock(mutex_);
    return engine_;
}

HttpResponse Service::handle(std::string_view method, std::string_view path, std::string_view body) const {
    try {
        if (body.size() > config_.max_body_bytes) {
            return error_response(413, "payload_too_large",
                                  "body of " + std::to_string(body.size()) + " bytes exceeds the limit of " +
                                      std::to_string(config_.max_body_bytes));
        }
        static constexpr std::string_view kNodePrefix = "/v1/kg/nodes/";
        const bool is_post = path == "/v1/parse" || path == "/v1/recommend" || path == "/v1/whatif";
        const bool is_get = path == "/v1/health" || (path.starts_with(kNodePrefix) && path.size() > kNodePrefix.size());
        if (!is_post && !is_get) return error_response(404, "not_found", "no route for " + std::string(path));
        if ((is_post && method != "POST") || (is_get && method != "GET")) {
            return error_response(405, "method_not_allowed", std::string(method) + " not allowed on " + std::string(path));
        }
        if (path == "/v1/health") return health();
        const auto e = engine();
        if (!e) return error_response(503, "not_ready", "graph and classifier are still loading");
        if (path == "/v1/parse") return parse(*e, body);
        if (path == "/v1/recommend") return recommend(*e, body);
        if (path == "/v1/whatif") return whatif(*e, body);
        return node(*e, path.substr(kNodePrefix.size()));
    } catch (const HttpError& err) {
        return error_response(err.status, err.code, err.message, err.field);
    } catch (const std::exception& ex) {
        return error_response(500, "internal", ex.what());
    }
}

HttpResponse Service::health() const {
    const auto e = engine();
    json j = {{"status", e ? "ready" : "loading"}, {"config", config_.echo()}};
    if (e) j["graph"] = {{"nodes", e->graph.node_count()}, {"edges", e->graph.edge_count()}};
    return ok(j);
}

HttpResponse Service::parse(const Engine& e, std::string_view body) const {
    const ClinicalRecord record = request_record(parse_body(body), e.graph);
    const auto findings = extract(record, e.graph);
    const auto rc = config_.recommend_config();
    const auto context = e.retriever->build_context(record, rc.gate, rc.top_k, rc.guidelines_m);
    return ok({{"record_id", record.record_id}, {"findings", findings}, {"context", context_json(context, e.graph)}});
}

HttpResponse Service::recommend(const Engine& e, std::string_view body) const {
    const ClinicalRecord record = request_record(parse_body(body), e.graph);
    const auto rc = config_.recommend_config();
    const KgTemplateGenerator generator(*e.retriever);
    const auto rec = kgrx::recommend(record, *e.retriever, rc, e.classifier, generator);
    return ok(recommendation_payload(record, rec, rc));
}

HttpResponse Service::whatif(const Engine& e, std::string_view body) const {
    const json j = parse_body(body);
    if (!j.is_object()) throw HttpError{400, "schema_error", "expected an object", ""};
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (it.key() != "record" && it.key() != "profile_overrides" && it.key() != "config_overrides") {
            throw HttpError{400, "schema_error", "unknown field", it.key()};
        }
    }
    if (!j.contains("record")) throw HttpError{400, "schema_error", "missing field", "record"};
    const ClinicalRecord base = request_record(j.at("record"), e.graph, "record");

    ClinicalRecord modified = base;
    if (auto it = j.find("profile_overrides"); it != j.end() && !it->is_null()) {
        if (!it->is_object()) throw HttpError{422, "invalid_override", "expected an object", "profile_overrides"};
        json merged = base.profile;
        for (auto o = it->begin(); o != it->end(); ++o) {
            if (!merged.contains(o.key())) {
                throw HttpError{422, "invalid_override", "unknown profile field", "profile_overrides." + o.key()};
            }
            merged[o.key()] = o.value();
        }
        try {
            modified.profile = profile_from_json(merged, "profile_overrides");
            validate_profile(modified.profile);
            validate_profile_ids(modified.profile, e.graph);
        } catch (const SchemaError& err) {
            throw HttpError{422, "invalid_override", err.what(), err.field()};
        } catch (const InvalidRecord& err) {
            std::string field = err.field();
            if (field.starts_with("profile.")) field = "profile_overrides." + field.substr(8);
            throw HttpError{422, "invalid_override", err.what(), field};
        }
    }

    const RecommendConfig base_rc = config_.recommend_config();
    RecommendConfig mod_rc = base_rc;
    if (auto it = j.find("config_overrides"); it != j.end() && !it->is_null()) {
        const json& o = *it;
        if (!o.is_object()) throw HttpError{422, "invalid_override", "expected an object", "config_overrides"};
        double tau = base_rc.weights.tau();
        std::vector<double> w{base_rc.weights.w_dose(), base_rc.weights.w_allergy(), base_rc.weights.w_interaction()};
        for (auto k = o.begin(); k != o.end(); ++k) {
            const std::string field = "config_overrides." + k.key();
            const json& v = k.value();
            if (k.key() == "tau") {
                if (!v.is_number()) throw HttpError{422, "invalid_override", "expected a number", field};
                tau = v.get<double>();
                if (!(tau >= 0.0 && tau <= 1.0)) throw HttpError{422, "invalid_override", "tau must lie in [0, 1]", field};
            } else if (k.key() == "weights") {
                if (!v.is_array() || v.size() != 3 || !std::all_of(v.begin(), v.end(), [](const json& x) { return x.is_number(); })) {
                    throw HttpError{422, "invalid_override", "expected three numbers", field};
                }
                w = v.get<std::vector<double>>();
            } else if (k.key() == "alpha") {
                if (!v.is_number()) throw HttpError{422, "invalid_override", "expected a number", field};
                try {
                    mod_rc.gate = FusionGate(v.get<double>());
                } catch (const ConfigError& err) {
                    throw HttpError{422, "invalid_override", err.what(), field};
                }
            } else {
                throw HttpError{422, "invalid_override", "unknown config field", field};
            }
        }
        try {
            mod_rc.weights = weights_from_list(w, tau);
        } catch (const ConfigError& err) {
            throw HttpError{422, "invalid_override", err.what(), "config_overrides.weights"};
        }
    }

    const KgTemplateGenerator generator(*e.retriever);
    const auto baseline = kgrx::recommend(base, *e.retriever, base_rc, e.classifier, generator);
    const auto changed = kgrx::recommend(modified, *e.retriever, mod_rc, e.classifier, generator);
    return ok({{"record_id", base.record_id},
               {"baseline", recommendation_payload(base, baseline, base_rc)},
               {"modified", recommendation_payload(modified, changed, mod_rc)},
               {"deltas", whatif_deltas(baseline, changed)}});
}

HttpResponse Service::node(const Engine& e, std::string_view id) const {
    const KGNode* n = e.graph.find(id);
    if (n == nullptr) return error_response(404, "not_found", "unknown node " + std::string(id));
    json edges = json::array();
    for (const auto& edge : e.graph.edges()) {
        if (edge.src == n->id || edge.dst == n->id) edges.push_back(edge);
    }
    return ok({{"node", *n}, {"edges", edges}});
}

struct HttpServer::Impl {
    httplib::Server server;
    std::thread listener;
    std::mutex log_mutex;
    std::ostream* log_stream = nullptr;

    void log(const json& line) {
        if (log_stream == nullptr) return;
        std::lock_guard lock(log_mutex);
        *log_stream << line.dump() << std::endl;
    }
};

HttpServer::HttpServer(Service& service, std::ostream* log) : service_(&service), impl_(std::make_unique<Impl>()) {
    impl_->log_stream = log;
    auto& server = impl_->server;
    server.set_payload_max_length(service.config().max_body_bytes);
    Impl* impl = impl_.get();
    Service* svc = service_;
    auto handler = [impl, svc](const httplib::Request& req, httplib::Response& res) {
        const auto t0 = std::chrono::steady_clock::now();
        const HttpResponse r = svc->handle(req.method, req.path, req.body);
        res.status = r.status;
        res.set_content(r.body, "application/json");
        const auto us = std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::steady_clock::now() - t0);
        impl->log({{"event", "request"},
                   {"method", req.method},
                   {"path", req.path},
                   {"status", r.status},
                   {"bytes_in", req.body.size()},
                   {"bytes_out", r.body.size()},
                   {"micros", us.count()}});
    };
    server.Get(R"(/.*)", handler);
    server.Post(R"(/.*)", handler);
    server.set_error_handler([impl](const httplib::Request& req, httplib::Response& res) {
        if (!res.body.empty()) return;
        const auto r = res.status == 413 ? error_response(413, "payload_too_large", "request body exceeds the limit")
                                         : error_response(res.status, "http_error", "request failed");
        res.set_content(r.body, "application/json");
        impl->log({{"event", "request"}, {"method", req.method}, {"path", req.path}, {"status", res.status}});
    });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::start(const std::string& host, int port) {
    auto& server = impl_->server;
    int bound = port;
    if (port == 0) {
        bound = server.bind_to_any_port(host);
        if (bound < 0) throw ConfigError("cannot bind " + host + " to a free port");
    } else if (!server.bind_to_port(host, port)) {
        throw ConfigError("cannot bind " + host + ":" + std::to_string(port));
    }
    impl_->listener = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->log({{"event", "listening"}, {"host", host}, {"port", bound}});
    return bound;
}

void HttpServer::stop() {
    if (!impl_ || !impl_->listener.joinable()) return;
    impl_->server.stop();
    impl_->listener.join();
}

void HttpServer::wait() {
    if (impl_->listener.joinable()) impl_->listener.join();
}

void HttpServer::log(const nlohmann::json& line) { impl_->log(line); }

void run_server(Service& service) {
    const auto& cfg = service.config();
    HttpServer server(service, &std::cout);
    server.start(cfg.host, cfg.port);
    try {
        service.load();
    } catch (const std::exception& ex) {
        server.log({{"event", "load_failed"}, {"error", ex.what()}});
        server.stop();
        throw;
    }
    server.log({{"event", "ready"}});
    server.wait();
}

} // namespace kgrx
