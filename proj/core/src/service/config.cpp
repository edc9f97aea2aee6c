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

#include "gradeforge/config.hpp"

#include <cstdlib>
#include <fstream>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "gradeforge/error.hpp"

namespace gradeforge {
namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::string& section, const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw_invalid("config: '" + section + "' must be an object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.contains(key)) throw_invalid("config: unknown key '" + section + "." + key + "'");
  }
}

template <typename V>
void read(const json& obj, const char* key, V& out, const std::string& section) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<V>();
  } catch (const json::exception&) {
    throw_invalid("config: '" + section + "." + key + "' has the wrong type");
  }
}

}  // namespace

TrainConfig AppConfig::train_config() const {
  TrainConfig t;
  t.model = training.model;
  t.schedule_steps = schedule.steps;
  t.beta_start = schedule.beta_start;
  t.beta_end = schedule.beta_end;
  t.batch_size = training.batch_size;
  t.steps = training.steps;
  t.learning_rate = training.learning_rate;
  t.weight_decay = training.weight_decay;
  t.grad_clip = training.grad_clip;
  t.cond_dropout = training.cond_dropout;
  t.seed = training.seed;
  return t;
}

AppConfig parse_config(std::string_view text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::kParse, std::string("config: ") + e.what());
  }
  check_keys(root, "", {"schedule", "training", "catalog", "server"});
  AppConfig c;
  if (root.contains("schedule")) {
    const json& s = root["schedule"];
    check_keys(s, "schedule", {"steps", "beta_start", "beta_end", "ddim_steps"});
    read(s, "steps", c.schedule.steps, "schedule");
    read(s, "beta_start", c.schedule.beta_start, "schedule");
    read(s, "beta_end", c.schedule.beta_end, "schedule");
    read(s, "ddim_steps", c.schedule.ddim_steps, "schedule");
  }
  if (root.contains("training")) {
    const json& t = root["training"];
    check_keys(t, "training",
               {"widths", "groups", "embed_dim", "time_dim", "batch_size", "steps", "learning_rate",
                "weight_decay", "grad_clip", "cond_dropout", "seed", "triples", "scenes", "scene_size",
                "frames_per_scene", "corpus", "loss_csv"});
    TrainingSection& tr = c.training;
    read(t, "widths", tr.model.widths, "training");
    read(t, "groups", tr.model.groups, "training");
    read(t, "embed_dim", tr.model.embed_dim, "training");
    read(t, "time_dim", tr.model.time_dim, "training");
    read(t, "batch_size", tr.batch_size, "training");
    read(t, "steps", tr.steps, "training");
    read(t, "learning_rate", tr.learning_rate, "training");
    read(t, "weight_decay", tr.weight_decay, "training");
    read(t, "grad_clip", tr.grad_clip, "training");
    read(t, "cond_dropout", tr.cond_dropout, "training");
    read(t, "seed", tr.seed, "training");
    read(t, "triples", tr.triples, "training");
    read(t, "scenes", tr.scenes, "training");
    read(t, "scene_size", tr.scene_size, "training");
    read(t, "frames_per_scene", tr.frames_per_scene, "training");
    read(t, "corpus", tr.corpus, "training");
    read(t, "loss_csv", tr.loss_csv, "training");
  }
  if (root.contains("catalog")) {
    const json& k = root["catalog"];
    check_keys(k, "catalog", {"dir", "split_ratio", "seed", "low_confidence_threshold"});
    read(k, "dir", c.catalog.dir, "catalog");
    read(k, "split_ratio", c.catalog.split_ratio, "catalog");
    read(k, "seed", c.catalog.seed, "catalog");
    read(k, "low_confidence_threshold", c.catalog.low_confidence_threshold, "catalog");
  }
  if (root.contains("server")) {
    const json& s = root["server"];
    check_keys(s, "server", {"bind", "store", "checkpoint", "threads"});
    if (s.contains("bind")) {
      std::string bind;
      read(s, "bind", bind, "server");
      parse_bind(bind, c.server.host, c.server.port);
    }
    read(s, "store", c.server.store, "server");
    read(s, "checkpoint", c.server.checkpoint, "server");
    read(s, "threads", c.server.threads, "server");
  }
  c.train_config().validate();
  if (c.schedule.ddim_steps < 1 || c.schedule.ddim_steps > c.schedule.steps) {
    throw_invalid("config: schedule.ddim_steps must be in [1, schedule.steps]");
  }
  return c;
}

AppConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void parse_bind(const std::string& bind, std::string& host, int& port) {
  const auto colon = bind.rfind(':');
  const std::string port_text = colon == std::string::npos ? bind : bind.substr(colon + 1);
  if (colon != std::string::npos && colon > 0) host = bind.substr(0, colon);
  try {
    std::size_t used = 0;
    const int p = std::stoi(port_text, &used);
    if (used != port_text.size() || p < 0 || p > 65535) throw std::out_of_range("port");
    port = p;
  } catch (const std::exception&) {
    throw_invalid("bad bind address '" + bind + "' (expected host:port)");
  }
}

void apply_env_overrides(AppConfig& config) {
  if (const char* v = std::getenv("GRADEFORGE_STORE"); v && *v) config.server.store = v;
  if (const char* v = std::getenv("GRADEFORGE_CHECKPOINT"); v && *v) config.server.checkpoint = v;
  if (const char* v = std::getenv("GRADEFORGE_BIND"); v && *v) parse_bind(v, config.server.host, config.server.port);
}

}  // namespace gradeforge
