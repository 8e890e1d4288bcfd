//*****************************************************************************
// Copyright 2026 The HyperSeg Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//*****************************************************************************

#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "hyperseg/interaction.hpp"
#include "hyperseg/model.hpp"

namespace hyperseg {

// Immutable checkpoints shared by all sessions, keyed by model id.
class CheckpointRegistry {
public:
    void add(std::shared_ptr<const Model> model);
    // Loads the model under `dir` and registers it under its manifest id.
    std::string load(const std::filesystem::path& dir);
    // Throws NotFoundError for an unknown id.
    std::shared_ptr<const Model> get(const std::string& id) const;
    std::vector<std::string> ids() const;
    std::size_t size() const { return models_.size(); }

private:
    std::map<std::string, std::shared_ptr<const Model>> models_;
};

struct ServiceOptions {
    std::filesystem::path store;                 // one directory per session
    std::size_t memory_budget = 256u << 20;      // bytes of resident session state
    std::size_t threads = 0;                     // feature extraction threads
    bool rerank = false;                         // default head by interactive-context loss
};

struct ProposalSummary {
    std::vector<std::size_t> ranking;  // head indices, best first
    std::size_t default_head = 1;
    bool noop = false;                 // the request did not change the click set
    std::string to_json() const;
};

struct FrameState {
    std::string session_id;
    std::size_t width = 0, height = 0;
    std::size_t num_heads = 0;
    std::size_t frame_index = 0;
    std::string frame_digest;
    std::string to_json() const;
};

enum class MaskFormat { Png, Tensor };
MaskFormat parse_mask_format(std::string_view name);

struct MaskPayload {
    std::string bytes;
    std::string content_type;
    std::size_t head = 1;
    std::size_t rank = 1;  // position of the head in the ranking
};

// Thrown when an operation needs proposals the session does not have yet.
class ConflictError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Sessions persist under ServiceOptions::store as
//   <id>/session.json, <id>/frame.png, <id>/prev.png, <id>/features.hseg
// and are kept in memory up to the budget, least recently used first out.
// An evicted session is reloaded from disk on its next request; its
// features come from features.hseg or, if that is missing, are re-extracted.
class SessionService {
public:
    SessionService(ServiceOptions options, std::shared_ptr<const CheckpointRegistry> checkpoints);

    // Frames are PNG bytes. An empty checkpoint id selects the only
    // registered checkpoint.
    FrameState create(std::string_view frame_png, std::optional<std::string_view> prev_png,
                      const std::string& checkpoint);
    ProposalSummary add_click(const std::string& id, Point p, Polarity polarity);
    ProposalSummary remove_click(const std::string& id, Point p);
    // Runs the network with the current clicks (possibly none).
    ProposalSummary predict(const std::string& id);
    FrameState advance_frame(const std::string& id, std::string_view frame_png);
    MaskPayload mask(const std::string& id, std::size_t head, MaskFormat format);
    std::string state_json(const std::string& id);
    void remove(const std::string& id);
    std::string checkpoints_json() const;

    // Forgets the in-memory copy of a session, or of all sessions.
    void evict(const std::string& id);
    void evict_all();
    std::size_t resident_sessions() const;
    std::size_t resident_bytes() const;

private:
    struct Session;
    std::shared_ptr<Session> acquire(const std::string& id);
    std::shared_ptr<Session> load_session(const std::string& id) const;
    void persist(const Session& s) const;
    void ensure_features(Session& s) const;
    ProposalSummary run(Session& s, bool noop);
    ProposalSummary summarize(const Session& s, bool noop) const;
    void admit(const std::string& id, std::shared_ptr<Session> s);
    void touch(const std::string& id, std::size_t bytes);
    void enforce_budget();

    ServiceOptions options_;
    std::shared_ptr<const CheckpointRegistry> checkpoints_;
    mutable std::mutex mutex_;
    std::map<std::string, std::shared_ptr<Session>> resident_;
    std::map<std::string, std::size_t> sizes_;
    std::list<std::string> lru_;  // most recent at the front
};

// HTTP/JSON front end. Errors are {"code", "message"} with status 400, 404,
// 409 or 500.
class HttpServer {
public:
    explicit HttpServer(SessionService& service);
    ~HttpServer();
    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    // Binds to host:port (0 picks a free port) and returns the bound port.
    int bind(const std::string& host, int port);
    // Serves until stop(); call after bind().
    void listen();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace hyperseg
