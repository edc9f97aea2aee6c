/*
 * Copyright (C) 2026 The GradeForge Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <algorithm>
#include <atomic>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "gradeforge/error.hpp"
#include "gradeforge/frame_io.hpp"
#include "gradeforge/service.hpp"

namespace gradeforge {
using nlohmann::json;

namespace {

int http_status(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kNotFound: return 404;
    case ErrorKind::kConflict: return 409;
    case ErrorKind::kUnmatchablePrompt:
    case ErrorKind::kInvalidArgument:
    case ErrorKind::kUnsupportedSize:
    case ErrorKind::kParse: return 422;
    case ErrorKind::kUnavailable: return 503;
    default: return 500;
  }
}

void send_error(httplib::Response& res, int status, const std::string& error, const std::string& detail) {
  res.status = status;
  res.set_content(json{{"error", error}, {"detail", detail}}.dump(), "application/json");
}

void send_json(httplib::Response& res, const json& j, int status = 200) {
  res.status = status;
  res.set_content(j.dump(), "application/json");
}

// Wraps a handler so library errors become JSON error responses.
template <typename F>
httplib::Server::Handler guarded(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const Error& e) {
      send_error(res, http_status(e.kind()), to_string(e.kind()), e.what());
    } catch (const json::exception& e) {
      send_error(res, 400, "bad_request", e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, "internal", e.what());
    }
  };
}

bool is_frame_name(const std::string& name) {
  const auto slash = name.find_last_of('/');
  const std::string base = slash == std::string::npos ? name : name.substr(slash + 1);
  if (base.size() <= 4 || base.substr(base.size() - 4) != ".png") return false;
  return std::all_of(base.begin(), base.end() - 4, [](char c) { return c >= '0' && c <= '9'; });
}

unsigned long long frame_number(const std::string& name) {
  const auto slash = name.find_last_of('/');
  const std::string base = slash == std::string::npos ? name : name.substr(slash + 1);
  return std::stoull(base.substr(0, base.size() - 4));
}

Frame decode_named(const std::string& name, std::span<const std::uint8_t> bytes) {
  try {
    return decode_png(bytes);
  } catch (const Error& e) {
    throw Error(ErrorKind::kInvalidArgument, name + ": " + e.what());
  }
}

VideoClip clip_from_frames(std::vector<std::pair<unsigned long long, Frame>> frames, double fps) {
  if (frames.empty()) throw_invalid("upload contains no frames");
  std::stable_sort(frames.begin(), frames.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  VideoClip clip;
  clip.fps = fps;
  for (auto& [n, f] : frames) clip.frames.push_back(std::move(f));
  clip.validate();
  return clip;
}

// Accepts a single PNG, a tar of numbered PNG frames (with optional
// clip.json), or multipart form files named like frames.
VideoClip clip_from_request(const httplib::Request& req) {
  const std::string type = req.get_header_value("Content-Type");
  std::vector<std::pair<unsigned long long, Frame>> frames;
  double fps = 24.0;
  if (req.is_multipart_form_data()) {
    unsigned long long order = 0;
    for (const auto& [key, file] : req.files) {
      if (key == "fps") {
        fps = std::stod(file.content);
        continue;
      }
      const std::string name = file.filename.empty() ? key : file.filename;
      const auto n = is_frame_name(name) ? frame_number(name) : order;
      ++order;
      const auto* data = reinterpret_cast<const std::uint8_t*>(file.content.data());
      frames.emplace_back(n, decode_named(name, {data, file.content.size()}));
    }
    return clip_from_frames(std::move(frames), fps);
  }
  const auto* data = reinterpret_cast<const std::uint8_t*>(req.body.data());
  const std::span<const std::uint8_t> body(data, req.body.size());
  if (type.starts_with("image/png")) {
    frames.emplace_back(0, decode_named("body", body));
    return clip_from_frames(std::move(frames), fps);
  }
  if (type.starts_with("application/x-tar")) {
    std::vector<TarEntry> entries;
    try {
      entries = read_tar(body);
    } catch (const Error& e) {
      throw Error(ErrorKind::kInvalidArgument, e.what());
    }
    for (const auto& e : entries) {
      if (is_frame_name(e.name)) {
        frames.emplace_back(frame_number(e.name), decode_named(e.name, e.data));
      } else if (e.name == kClipSidecar || e.name.ends_with(std::string("/") + kClipSidecar)) {
        try {
          fps = json::parse(e.data.begin(), e.data.end()).at("fps").get<double>();
        } catch (const json::exception& ex) {
          throw Error(ErrorKind::kInvalidArgument, e.name + ": " + ex.what());
        }
      }
    }
    return clip_from_frames(std::move(frames), fps);
  }
  throw Error(ErrorKind::kInvalidArgument,
              "unsupported upload type '" + type + "' (expected image/png, application/x-tar or multipart/form-data)");
}

json key_pair_json(const KeyFramePair& p) {
  return {{"input_index", p.input_index}, {"reference_index", p.reference_index}, {"similarity", p.similarity}};
}

}  // namespace

struct HttpServer::Impl {
  GradingService& service;
  httplib::Server server;
  std::atomic<bool> bound{false};

  Impl(GradingService& s, int threads) : service(s) {
    const auto n = static_cast<std::size_t>(std::max(1, threads));
    server.new_task_queue = [n] { return new httplib::ThreadPool(n); };
    routes();
  }

  void routes() {
    server.Get("/healthz", guarded([this](const httplib::Request&, httplib::Response& res) {
                 send_json(res, {{"status", "ok"}, {"model", service.has_model()}});
               }));
    server.Post("/sessions", guarded([this](const httplib::Request&, httplib::Response& res) {
                  const std::string id = service.create_session();
                  send_json(res, json::parse(service.describe(id)), 201);
                }));
    server.Get("/sessions/:id", guarded([this](const httplib::Request& req, httplib::Response& res) {
                 send_json(res, json::parse(service.describe(req.path_params.at("id"))));
               }));
    server.Put("/sessions/:id/input", guarded([this](const httplib::Request& req, httplib::Response& res) {
                 const std::string& id = req.path_params.at("id");
                 service.status(id);  // unknown ids are 404 before the body is judged
                 service.upload_input(id, clip_from_request(req));
                 send_json(res, json::parse(service.describe(id)));
               }));
    server.Put("/sessions/:id/reference", guarded([this](const httplib::Request& req, httplib::Response& res) {
                 const std::string& id = req.path_params.at("id");
                 service.status(id);
                 service.upload_reference(id, clip_from_request(req));
                 send_json(res, json::parse(service.describe(id)));
               }));
    server.Post("/sessions/:id/grade", guarded([this](const httplib::Request& req, httplib::Response& res) {
                  const GradeResult r = service.grade(req.path_params.at("id"));
                  send_json(res, {{"key_pair", key_pair_json(r.key_pair)},
                                  {"revision", r.revision},
                                  {"preview_indices", r.preview_indices}});
                }));
    server.Post("/sessions/:id/feedback", guarded([this](const httplib::Request& req, httplib::Response& res) {
                  const json body = json::parse(req.body);
                  const PromptMatch m = service.feedback(req.path_params.at("id"), body.at("prompt").get<std::string>());
                  send_json(res, {{"matched", m.name},
                                  {"similarity", m.similarity},
                                  {"runner_up", m.runner_up},
                                  {"runner_up_similarity", m.runner_up_similarity},
                                  {"low_confidence", m.low_confidence}});
                }));
    server.Post("/sessions/:id/undo", guarded([this](const httplib::Request& req, httplib::Response& res) {
                  const json body = json::parse(req.body);
                  const std::string& id = req.path_params.at("id");
                  service.undo(id, body.at("to_index").get<std::size_t>());
                  send_json(res, json::parse(service.describe(id)));
                }));
    server.Get("/sessions/:id/preview/:n", guarded([this](const httplib::Request& req, httplib::Response& res) {
                 const std::string& n = req.path_params.at("n");
                 if (n.empty() || n.size() > 12 || !std::all_of(n.begin(), n.end(), [](char c) { return c >= '0' && c <= '9'; })) {
                   throw Error(ErrorKind::kNotFound, "bad frame index '" + n + "'");
                 }
                 const auto png = service.preview_png(req.path_params.at("id"), std::stoull(n));
                 res.set_content(reinterpret_cast<const char*>(png.data()), png.size(), "image/png");
               }));
    server.Get("/sessions/:id/export.cube", guarded([this](const httplib::Request& req, httplib::Response& res) {
                 res.set_content(service.export_cube(req.path_params.at("id")), "text/plain");
                 res.set_header("Content-Disposition", "attachment; filename=\"grade.cube\"");
               }));
    server.Get("/sessions/:id/export", guarded([this](const httplib::Request& req, httplib::Response& res) {
                 const auto tar = service.export_clip(req.path_params.at("id"));
                 res.set_content(reinterpret_cast<const char*>(tar.data()), tar.size(), "application/x-tar");
                 res.set_header("Content-Disposition", "attachment; filename=\"graded.tar\"");
               }));
  }
};

HttpServer::HttpServer(GradingService& service, int threads) : impl_(std::make_unique<Impl>(service, threads)) {}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  const int bound = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw Error(ErrorKind::kIo, "cannot bind " + host + ":" + std::to_string(port));
  impl_->bound = true;
  return bound;
}

void HttpServer::serve() {
  if (!impl_->bound) throw Error(ErrorKind::kInvalidArgument, "serve() before bind()");
  impl_->server.listen_after_bind();
}

void HttpServer::stop() {
  if (impl_) impl_->server.stop();
}

}  // namespace gradeforge
