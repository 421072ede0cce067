#include <httplib.h>

#include "pedaco/json_forms.hpp"
#include "pedaco/studio.hpp"

namespace pedaco::studio {

using nlohmann::json;

int http_status_for(const std::string& code) {
    if (code == "not_found" || code == "route_not_found") return 404;
    if (code == "method_not_allowed") return 405;
    if (code == "illegal_transition" || code == "stale_revision" || code == "config_locked") return 409;
    if (code == "gateway_error" || code == "render_failed") return 502;
    if (code == "io_error" || code == "corrupt_file" || code == "internal_error") return 500;
    return 422;
}

json ok_envelope(const json& data) { return json{{"ok", true}, {"data", data}}; }

json error_envelope(const std::string& code, const std::string& message, const json& detail) {
    return json{{"ok", false}, {"error", {{"code", code}, {"message", message}, {"detail", detail}}}};
}

namespace {

std::vector<std::string> segments(const std::string& path) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start < path.size()) {
        std::size_t end = path.find('/', start);
        if (end == std::string::npos) end = path.size();
        if (end > start) out.push_back(path.substr(start, end - start));
        start = end + 1;
    }
    return out;
}

json parse_body(const ApiRequest& req) {
    if (req.body.find_first_not_of(" \t\r\n") == std::string::npos) return json::object();
    json body = json::parse(req.body, nullptr, false);
    if (body.is_discarded()) throw Error("invalid_json", "request body is not valid JSON");
    return body;
}

// CSV uploads arrive raw, or as {"csv": "..."} when sent as JSON.
std::string csv_body(const ApiRequest& req) {
    if (req.content_type.find("json") == std::string::npos) return req.body;
    const json body = parse_body(req);
    if (!body.is_object() || !body.contains("csv") || !body["csv"].is_string()) {
        throw Error("invalid_json", "JSON uploads need a 'csv' string");
    }
    return body["csv"].get<std::string>();
}

ApiResponse ok(int status, const json& data) { return ApiResponse{status, ok_envelope(data)}; }

ApiResponse failure(const std::string& code, const std::string& message, const json& detail = json::object()) {
    return ApiResponse{http_status_for(code), error_envelope(code, message, detail)};
}

[[noreturn]] void no_route(const ApiRequest& req) {
    throw Error("route_not_found", "no route for " + req.method + " " + req.path,
                {{"method", req.method}, {"path", req.path}});
}

[[noreturn]] void wrong_method(const ApiRequest& req) {
    throw Error("method_not_allowed", req.method + " is not supported on " + req.path,
                {{"method", req.method}, {"path", req.path}});
}

ApiResponse dispatch(StudioService& svc, const ApiRequest& req) {
    const auto seg = segments(req.path);
    const std::string& m = req.method;

    if (seg.size() == 1 && seg[0] == "health") return ok(200, {{"status", "ok"}});
    if (seg.size() == 1 && seg[0] == "principles") {
        if (m != "GET") wrong_method(req);
        return ok(200, {{"principles", prompt::principle_registry()}});
    }
    if (seg.size() == 2 && seg[0] == "prompts" && seg[1] == "defaults") {
        if (m != "GET") wrong_method(req);
        return ok(200, {{"gen_config", prompt::default_generation_config()},
                        {"review_config", prompt::default_review_config()}});
    }

    if (!seg.empty() && seg[0] == "projects") {
        if (seg.size() == 1) {
            if (m == "GET") return ok(200, {{"projects", svc.list_projects()}});
            if (m == "POST") {
                const Reply r = svc.create_project(parse_body(req));
                return ok(r.status, r.data);
            }
            wrong_method(req);
        }
        const std::string& id = seg[1];
        if (seg.size() == 2) {
            if (m != "GET") wrong_method(req);
            return ok(200, workflow::project_to_json(svc.get_project(id)));
        }
        if (seg.size() == 3) {
            const std::string& action = seg[2];
            Reply r;
            if (action == "progress") {
                if (m != "GET") wrong_method(req);
                return ok(200, svc.progress(id));
            }
            if (action == "render" && m == "GET") return ok(200, svc.render_status(id));
            if (action == "script" || action == "config") {
                if (m != "PATCH") wrong_method(req);
                r = action == "script" ? svc.edit_script(id, parse_body(req)) : svc.update_config(id, parse_body(req));
                return ok(r.status, r.data);
            }
            if (action == "generate" || action == "review" || action == "apply" || action == "finalize" ||
                action == "render" || action == "reopen") {
                if (m != "POST") wrong_method(req);
                const json body = parse_body(req);
                if (action == "generate") r = svc.generate(id);
                if (action == "review") r = svc.review(id, body);
                if (action == "apply") r = svc.apply(id, body);
                if (action == "finalize") r = svc.finalize(id);
                if (action == "render") r = svc.render(id, body);
                if (action == "reopen") r = svc.reopen(id);
                return ok(r.status, r.data);
            }
        }
        no_route(req);
    }

    if (seg.size() == 2 && seg[0] == "eval") {
        if (seg[1] == "report") {
            if (m != "GET") wrong_method(req);
            auto it = req.query.find("kind");
            const std::string kind = it == req.query.end() ? std::string("improvement") : it->second;
            return ok(200, svc.eval_report(kind, req.query));
        }
        if (seg[1] == "ratings" || seg[1] == "usability" || seg[1] == "demographics") {
            if (m != "POST") wrong_method(req);
            const std::string csv = csv_body(req);
            if (seg[1] == "ratings") return ok(201, svc.upload_ratings(csv));
            if (seg[1] == "usability") return ok(201, svc.upload_usability(csv));
            return ok(201, svc.upload_demographics(csv));
        }
    }
    no_route(req);
}

} // namespace

ApiResponse route(StudioService& service, const ApiRequest& request) {
    try {
        return dispatch(service, request);
    } catch (const Error& e) {
        return failure(e.code(), e.what(), e.detail());
    } catch (const json::exception& e) {
        return failure("invalid_json", e.what());
    } catch (const std::exception& e) {
        return failure("internal_error", e.what());
    }
}

struct HttpServer::Impl {
    Impl(StudioService& s, std::string origin) : service(s), cors_origin(std::move(origin)) {}

    StudioService& service;
    std::string cors_origin;
    httplib::Server server;
};

HttpServer::HttpServer(StudioService& service, std::string cors_origin)
    : impl_(std::make_unique<Impl>(service, std::move(cors_origin))) {
    Impl* impl = impl_.get();
    auto handle = [impl](const httplib::Request& req, httplib::Response& res) {
        ApiRequest api;
        api.method = req.method;
        api.path = req.path;
        for (const auto& [k, v] : req.params) api.query.emplace(k, v);
        api.body = req.body;
        api.content_type = req.get_header_value("Content-Type");
        const ApiResponse out = route(impl->service, api);
        res.status = out.status;
        res.set_content(out.body.dump(), "application/json");
    };
    auto& s = impl_->server;
    s.Get(".*", handle);
    s.Post(".*", handle);
    s.Patch(".*", handle);
    s.Put(".*", handle);
    s.Delete(".*", handle);
    s.Options(".*", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    s.set_post_routing_handler([impl](const httplib::Request&, httplib::Response& res) {
        if (impl->cors_origin.empty()) return;
        res.set_header("Access-Control-Allow-Origin", impl->cors_origin);
        res.set_header("Access-Control-Allow-Methods", "GET, POST, PATCH, OPTIONS");
        res.set_header("Access-Control-Allow-Headers", "Content-Type");
        res.set_header("Vary", "Origin");
    });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
    if (port == 0) return impl_->server.bind_to_any_port(host);
    return impl_->server.bind_to_port(host, port) ? port : -1;
}

void HttpServer::run() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
    if (impl_) impl_->server.stop();
}

} // namespace pedaco::studio
