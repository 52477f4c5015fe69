#include <httplib.h>

#include "studio/error.hpp"
#include "studio/service/studio.hpp"

namespace studio::service {

using nlohmann::json;

namespace {

void send_error(httplib::Response& res, int status, const std::string& code, const std::string& message) {
  res.status = status;
  res.set_content(json{{"error", code}, {"message", message}}.dump(), "application/json");
}

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

template <class Fn>
httplib::Server::Handler guarded(Fn fn) {
  return [fn](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const ApiError& e) {
      send_error(res, e.status(), e.code(), e.what());
    } catch (const Error& e) {
      const ApiError api = to_api_error(e);
      send_error(res, api.status(), api.code(), api.what());
    } catch (const json::exception& e) {
      send_error(res, 422, "InvalidInput", std::string("malformed JSON body: ") + e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, "Internal", e.what());
    }
  };
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  json body = json::parse(req.body);
  if (!body.is_object()) throw ApiError(422, "InvalidInput", "request body must be a JSON object");
  return body;
}

json session_view(const Session& s) {
  return {{"session_id", s.session_id},
          {"text", s.input.original},
          {"tokens", s.input.tokens},
          {"source", kwx::to_string(s.input.source)},
          {"selections", s.selections},
          {"active_job", s.active_job ? json(*s.active_job) : json(nullptr)}};
}

}  // namespace

struct HttpServer::Impl {
  Studio& studio;
  httplib::Server server;
  explicit Impl(Studio& s) : studio(s) {}
};

HttpServer::HttpServer(Studio& studio) : impl_(std::make_unique<Impl>(studio)) {
  auto& srv = impl_->server;
  Studio& st = studio;

  srv.Post("/api/sessions", guarded([&st](const httplib::Request& req, httplib::Response& res) {
    const json body = parse_body(req);
    CreateRequest request;
    if (body.contains("text") && !body.at("text").is_null()) request.text = body.at("text").get<std::string>();
    if (body.contains("audio_base64") && !body.at("audio_base64").is_null()) {
      try {
        request.audio = base64_decode(body.at("audio_base64").get<std::string>());
      } catch (const Error& e) {
        throw ApiError(422, "DecodeError", e.what());
      }
    }
    send_json(res, 201, session_view(st.create_session(request)));
  }));

  srv.Post("/api/sessions/:id/terms", guarded([&st](const httplib::Request& req, httplib::Response& res) {
    send_json(res, 200, to_json(st.extract_terms(req.path_params.at("id"))));
  }));

  srv.Put("/api/sessions/:id/terms/:term/selection", guarded([&st](const httplib::Request& req, httplib::Response& res) {
    const json body = parse_body(req);
    if (!body.contains("asset_ids") || !body.at("asset_ids").is_array())
      throw ApiError(422, "InvalidInput", "body must contain an asset_ids array");
    const auto ids = body.at("asset_ids").get<std::vector<std::string>>();
    send_json(res, 200, session_view(st.select_images(req.path_params.at("id"), req.path_params.at("term"), ids)));
  }));

  srv.Post("/api/sessions/:id/video", guarded([&st](const httplib::Request& req, httplib::Response& res) {
    const std::string job = st.compose_video(req.path_params.at("id"));
    send_json(res, 202, to_json(st.job_status(job)));
  }));

  srv.Get("/api/jobs/:id", guarded([&st](const httplib::Request& req, httplib::Response& res) {
    send_json(res, 200, to_json(st.job_status(req.path_params.at("id"))));
  }));

  srv.Get("/api/sessions/:id/video", guarded([&st](const httplib::Request& req, httplib::Response& res) {
    const std::string kind = req.has_param("kind") ? req.get_param_value("kind") : "final";
    Download d = st.download(req.path_params.at("id"), kind);
    res.status = 200;
    res.set_content(std::string(d.bytes.begin(), d.bytes.end()), d.content_type);
  }));

  srv.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) send_error(res, res.status, res.status == 404 ? "NotFound" : "HttpError", "no such route");
  });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  if (!impl_->server.bind_to_port(host, port)) throw Error(Errc::io_error, "cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::stop() { impl_->server.stop(); }

}  // namespace studio::service
