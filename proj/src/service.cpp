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

#include "hyperseg/service.hpp"

#include <algorithm>
#include <cstdio>
#include <random>

#include <httplib.h>
#include <json.hpp>

#include "hyperseg/errors.hpp"
#include "hyperseg/image_io.hpp"
#include "hyperseg/tensor_io.hpp"

namespace hyperseg {

namespace fs = std::filesystem;
using nlohmann::json;

void CheckpointRegistry::add(std::shared_ptr<const Model> model) {
    if (!model) throw ArgumentError("checkpoint registry: null model");
    if (model->id.empty()) throw ArgumentError("checkpoint registry: model without id");
    models_[model->id] = std::move(model);
}

std::string CheckpointRegistry::load(const fs::path& dir) {
    auto model = std::make_shared<const Model>(Model::load(dir));
    std::string id = model->id;
    add(std::move(model));
    return id;
}

std::shared_ptr<const Model> CheckpointRegistry::get(const std::string& id) const {
    if (id.empty() && models_.size() == 1) return models_.begin()->second;
    const auto it = models_.find(id);
    if (it == models_.end()) throw NotFoundError("unknown checkpoint \"" + id + "\"");
    return it->second;
}

std::vector<std::string> CheckpointRegistry::ids() const {
    std::vector<std::string> out;
    for (const auto& [id, m] : models_) out.push_back(id);
    return out;
}

namespace {

// FNV-1a, 64 bit.
std::string digest(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::int64_t now_ms() {
    using namespace std::chrono;
    return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

std::string new_session_id() {
    static std::mutex m;
    static std::mt19937_64 rng(std::random_device{}());
    std::lock_guard lock(m);
    char buf[33];
    std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(rng()),
                  static_cast<unsigned long long>(rng()));
    return buf;
}

bool valid_session_id(const std::string& id) {
    return id.size() == 32 && std::all_of(id.begin(), id.end(), [](char c) {
               return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
           });
}

Tensor decode_frame(std::string_view png, const char* what) {
    try {
        return decode_png_rgb(png);
    } catch (const FormatError& e) {
        throw FormatError(std::string(what) + ": " + e.what());
    }
}

}  // namespace

std::string ProposalSummary::to_json() const {
    json heads = json::array();
    for (std::size_t m = 1; m <= ranking.size(); ++m) {
        const auto pos = std::find(ranking.begin(), ranking.end(), m) - ranking.begin();
        heads.push_back({{"head", m}, {"iou_rank", pos + 1}});
    }
    return json{{"proposals", heads}, {"default_head", default_head}, {"noop", noop}}.dump();
}

std::string FrameState::to_json() const {
    return json{{"session_id", session_id},
                {"width", width},
                {"height", height},
                {"frame_index", frame_index},
                {"num_heads", num_heads},
                {"frame_digest", frame_digest},
                {"clicks", json::array()}}
        .dump();
}

MaskFormat parse_mask_format(std::string_view name) {
    if (name == "png") return MaskFormat::Png;
    if (name == "tensor") return MaskFormat::Tensor;
    throw ArgumentError("format must be \"png\" or \"tensor\", got \"" + std::string(name) + "\"");
}

struct SessionService::Session {
    std::mutex mutex;
    bool deleted = false;
    std::string id, checkpoint;
    std::shared_ptr<const Model> model;
    std::string frame_png, prev_png;
    Tensor frame, prev;
    std::optional<Tensor> features;
    std::string frame_digest, features_digest;
    ClickState clicks;
    bool has_proposals = false;
    std::optional<SegmentationProposals> proposals;
    std::size_t frame_index = 0;
    std::int64_t created = 0, updated = 0;

    std::size_t bytes() const {
        std::size_t n = frame_png.size() + prev_png.size() + 8 * (frame.size() + prev.size());
        if (features) n += 8 * features->size();
        if (proposals) n += 8 * (proposals->soft_maps.size() + proposals->binary_masks.size());
        n += 8 * 4 * clicks.width() * clicks.height();
        return n;
    }
};

SessionService::SessionService(ServiceOptions options, std::shared_ptr<const CheckpointRegistry> checkpoints)
    : options_(std::move(options)), checkpoints_(std::move(checkpoints)) {
    if (!checkpoints_) throw ArgumentError("session service: no checkpoint registry");
    if (options_.store.empty()) throw ArgumentError("session service: store directory required");
    fs::create_directories(options_.store);
}

void SessionService::persist(const Session& s) const {
    const auto dir = options_.store / s.id;
    const json doc{{"id", s.id},
                   {"checkpoint", s.checkpoint},
                   {"frame_index", s.frame_index},
                   {"frame_digest", s.frame_digest},
                   {"has_proposals", s.has_proposals},
                   {"created_ms", s.created},
                   {"updated_ms", s.updated},
                   {"clicks", json::parse(s.clicks.to_json())}};
    write_file(dir / "session.json", doc.dump(2));
}

std::shared_ptr<SessionService::Session> SessionService::load_session(const std::string& id) const {
    const auto dir = options_.store / id;
    if (!valid_session_id(id) || !fs::exists(dir / "session.json")) {
        throw NotFoundError("unknown session \"" + id + "\"");
    }
    auto s = std::make_shared<Session>();
    try {
        const auto doc = json::parse(read_file(dir / "session.json"));
        s->id = id;
        s->checkpoint = doc.at("checkpoint").get<std::string>();
        s->model = checkpoints_->get(s->checkpoint);
        s->frame_png = read_file(dir / "frame.png");
        s->prev_png = read_file(dir / "prev.png");
        s->frame = decode_frame(s->frame_png, "stored frame");
        s->prev = decode_frame(s->prev_png, "stored previous frame");
        s->frame_digest = digest(s->frame_png);
        s->frame_index = doc.at("frame_index").get<std::size_t>();
        s->has_proposals = doc.at("has_proposals").get<bool>();
        s->created = doc.at("created_ms").get<std::int64_t>();
        s->updated = doc.at("updated_ms").get<std::int64_t>();
        s->clicks = ClickState::from_json(doc.at("clicks").dump(), s->frame.extent(1), s->frame.extent(2));
    } catch (const json::exception& e) {
        throw FormatError("session " + id + ": " + e.what());
    }
    // A stale or unreadable feature cache is rebuilt on first use.
    try {
        if (fs::exists(dir / "features.hseg")) {
            Tensor f = load_tensor(dir / "features.hseg");
            const auto doc = json::parse(read_file(dir / "features.json"));
            if (doc.at("frame_digest").get<std::string>() == s->frame_digest &&
                f.shape() == Shape{s->model->network.config.feature_depth, s->frame.extent(1), s->frame.extent(2)}) {
                s->features = std::move(f);
                s->features_digest = s->frame_digest;
            }
        }
    } catch (const std::exception&) {
        s->features.reset();
    }
    return s;
}

void SessionService::ensure_features(Session& s) const {
    if (s.features && s.features_digest == s.frame_digest) return;
    s.features = s.model->extract(s.frame, options_.threads).features;
    s.features_digest = s.frame_digest;
    const auto dir = options_.store / s.id;
    save_tensor(*s.features, dir / "features.hseg");
    write_file(dir / "features.json", json{{"frame_digest", s.features_digest}}.dump());
}

std::shared_ptr<SessionService::Session> SessionService::acquire(const std::string& id) {
    std::lock_guard lock(mutex_);
    if (const auto it = resident_.find(id); it != resident_.end()) {
        lru_.remove(id);
        lru_.push_front(id);
        return it->second;
    }
    auto s = load_session(id);
    resident_[id] = s;
    sizes_[id] = s->bytes();
    lru_.push_front(id);
    return s;
}

void SessionService::admit(const std::string& id, std::shared_ptr<Session> s) {
    std::lock_guard lock(mutex_);
    sizes_[id] = s->bytes();
    resident_[id] = std::move(s);
    lru_.push_front(id);
}

void SessionService::touch(const std::string& id, std::size_t bytes) {
    std::lock_guard lock(mutex_);
    if (resident_.count(id)) sizes_[id] = bytes;
    enforce_budget();
}

// Caller holds mutex_. Sessions held by a request stay resident.
void SessionService::enforce_budget() {
    std::size_t total = 0;
    for (const auto& [id, n] : sizes_) total += n;
    for (auto it = lru_.end(); it != lru_.begin() && total > options_.memory_budget;) {
        --it;
        const auto r = resident_.find(*it);
        if (r == resident_.end() || r->second.use_count() > 1) continue;
        total -= sizes_[*it];
        sizes_.erase(*it);
        resident_.erase(r);
        it = lru_.erase(it);
    }
}

FrameState SessionService::create(std::string_view frame_png, std::optional<std::string_view> prev_png,
                                  const std::string& checkpoint) {
    auto s = std::make_shared<Session>();
    s->model = checkpoints_->get(checkpoint);
    s->checkpoint = s->model->id;
    s->frame_png = std::string(frame_png);
    s->frame = decode_frame(frame_png, "frame");
    if (prev_png) {
        s->prev_png = std::string(*prev_png);
        s->prev = decode_frame(*prev_png, "previous frame");
        if (s->prev.shape() != s->frame.shape()) throw ArgumentError("previous frame size differs from frame");
    } else {
        s->prev_png = s->frame_png;
        s->prev = s->frame;
    }
    s->frame_digest = digest(s->frame_png);
    s->clicks = ClickState(s->frame.extent(1), s->frame.extent(2));
    s->created = s->updated = now_ms();
    do {
        s->id = new_session_id();
    } while (fs::exists(options_.store / s->id));
    const auto dir = options_.store / s->id;
    write_file(dir / "frame.png", s->frame_png);
    write_file(dir / "prev.png", s->prev_png);
    ensure_features(*s);
    persist(*s);

    FrameState out{s->id, s->frame.extent(1), s->frame.extent(2), s->model->network.config.num_heads, 0,
                   s->frame_digest};
    const std::size_t bytes = s->bytes();
    admit(out.session_id, std::move(s));
    touch(out.session_id, bytes);
    return out;
}

ProposalSummary SessionService::summarize(const Session& s, bool noop) const {
    ProposalSummary out;
    out.ranking = rank_heads(*s.proposals, &s.clicks);
    out.default_head = options_.rerank ? out.ranking.front() : 1;
    out.noop = noop;
    return out;
}

ProposalSummary SessionService::run(Session& s, bool noop) {
    ensure_features(s);
    s.proposals = s.model->predict(s.frame, s.prev, s.clicks, *s.features);
    s.has_proposals = true;
    s.updated = now_ms();
    persist(s);
    return summarize(s, noop);
}

ProposalSummary SessionService::add_click(const std::string& id, Point p, Polarity polarity) {
    auto s = acquire(id);
    ProposalSummary out;
    {
        std::lock_guard lock(s->mutex);
        if (s->deleted) throw NotFoundError("unknown session \"" + id + "\"");
        if (s->clicks.contains(p, polarity)) {
            if (!s->proposals) run(*s, true);
            out = summarize(*s, true);
        } else {
            s->clicks = s->clicks.with_click(p, polarity);
            out = run(*s, false);
        }
    }
    touch(id, s->bytes());
    return out;
}

ProposalSummary SessionService::remove_click(const std::string& id, Point p) {
    auto s = acquire(id);
    ProposalSummary out;
    {
        std::lock_guard lock(s->mutex);
        if (s->deleted) throw NotFoundError("unknown session \"" + id + "\"");
        if (!s->clicks.contains(p, Polarity::Positive) && !s->clicks.contains(p, Polarity::Negative)) {
            throw NotFoundError("no click at (" + std::to_string(p.x) + ", " + std::to_string(p.y) + ")");
        }
        s->clicks = s->clicks.without_click(p);
        out = run(*s, false);
    }
    touch(id, s->bytes());
    return out;
}

ProposalSummary SessionService::predict(const std::string& id) {
    auto s = acquire(id);
    ProposalSummary out;
    {
        std::lock_guard lock(s->mutex);
        if (s->deleted) throw NotFoundError("unknown session \"" + id + "\"");
        out = run(*s, false);
    }
    touch(id, s->bytes());
    return out;
}

FrameState SessionService::advance_frame(const std::string& id, std::string_view frame_png) {
    Tensor frame = decode_frame(frame_png, "frame");
    auto s = acquire(id);
    FrameState out;
    {
        std::lock_guard lock(s->mutex);
        if (s->deleted) throw NotFoundError("unknown session \"" + id + "\"");
        if (frame.shape() != s->frame.shape()) throw ArgumentError("new frame size differs from the session's frames");
        s->prev_png = std::move(s->frame_png);
        s->prev = std::move(s->frame);
        s->frame_png = std::string(frame_png);
        s->frame = std::move(frame);
        s->frame_digest = digest(s->frame_png);
        s->clicks = ClickState(s->frame.extent(1), s->frame.extent(2));
        s->proposals.reset();
        s->has_proposals = false;
        ++s->frame_index;
        s->updated = now_ms();
        const auto dir = options_.store / s->id;
        write_file(dir / "frame.png", s->frame_png);
        write_file(dir / "prev.png", s->prev_png);
        ensure_features(*s);
        persist(*s);
        out = {s->id, s->frame.extent(1), s->frame.extent(2), s->model->network.config.num_heads, s->frame_index,
               s->frame_digest};
    }
    touch(id, s->bytes());
    return out;
}

MaskPayload SessionService::mask(const std::string& id, std::size_t head, MaskFormat format) {
    auto s = acquire(id);
    MaskPayload out;
    {
        std::lock_guard lock(s->mutex);
        if (s->deleted) throw NotFoundError("unknown session \"" + id + "\"");
        if (!s->has_proposals) throw ConflictError("no proposals yet: add a click or request a prediction");
        const std::size_t heads = s->model->network.config.num_heads;
        if (head < 1 || head > heads) {
            throw ArgumentError("head " + std::to_string(head) + " outside [1, " + std::to_string(heads) + "]");
        }
        if (!s->proposals) run(*s, false);
        const auto ranking = rank_heads(*s->proposals, &s->clicks);
        out.head = head;
        out.rank = static_cast<std::size_t>(std::find(ranking.begin(), ranking.end(), head) - ranking.begin()) + 1;
        if (format == MaskFormat::Png) {
            out.bytes = encode_png_mask(s->proposals->mask(head));
            out.content_type = "image/png";
        } else {
            out.bytes = encode_tensor(s->proposals->soft(head));
            out.content_type = "application/octet-stream";
        }
    }
    touch(id, s->bytes());
    return out;
}

std::string SessionService::state_json(const std::string& id) {
    auto s = acquire(id);
    std::lock_guard lock(s->mutex);
    if (s->deleted) throw NotFoundError("unknown session \"" + id + "\"");
    return json{{"session_id", s->id},
                {"checkpoint", s->checkpoint},
                {"width", s->frame.extent(1)},
                {"height", s->frame.extent(2)},
                {"num_heads", s->model->network.config.num_heads},
                {"frame_index", s->frame_index},
                {"frame_digest", s->frame_digest},
                {"prev_frame_digest", digest(s->prev_png)},
                {"features_digest", s->features ? s->features_digest : std::string()},
                {"clicks", json::parse(s->clicks.to_json())},
                {"has_proposals", s->has_proposals},
                {"created_ms", s->created},
                {"updated_ms", s->updated}}
        .dump();
}

void SessionService::remove(const std::string& id) {
    auto s = acquire(id);
    {
        std::lock_guard lock(s->mutex);
        s->deleted = true;
        fs::remove_all(options_.store / id);
    }
    std::lock_guard lock(mutex_);
    resident_.erase(id);
    sizes_.erase(id);
    lru_.remove(id);
}

std::string SessionService::checkpoints_json() const {
    json list = json::array();
    for (const auto& id : checkpoints_->ids()) {
        const auto m = checkpoints_->get(id);
        list.push_back({{"id", id},
                        {"num_heads", m->network.config.num_heads},
                        {"feature_depth", m->network.config.feature_depth},
                        {"parameters", m->network.parameter_count()}});
    }
    return json{{"checkpoints", list}}.dump();
}

void SessionService::evict(const std::string& id) {
    std::lock_guard lock(mutex_);
    const auto it = resident_.find(id);
    if (it == resident_.end() || it->second.use_count() > 1) return;
    resident_.erase(it);
    sizes_.erase(id);
    lru_.remove(id);
}

void SessionService::evict_all() {
    std::vector<std::string> ids;
    {
        std::lock_guard lock(mutex_);
        for (const auto& [id, s] : resident_) ids.push_back(id);
    }
    for (const auto& id : ids) evict(id);
}

std::size_t SessionService::resident_sessions() const {
    std::lock_guard lock(mutex_);
    return resident_.size();
}

std::size_t SessionService::resident_bytes() const {
    std::lock_guard lock(mutex_);
    std::size_t total = 0;
    for (const auto& [id, n] : sizes_) total += n;
    return total;
}

// HTTP front end.

struct HttpServer::Impl {
    SessionService& service;
    httplib::Server server;
    explicit Impl(SessionService& s) : service(s) {}
};

namespace {

void send_error(httplib::Response& res, int status, const char* code, const std::string& message) {
    res.status = status;
    res.set_content(json{{"code", code}, {"message", message}}.dump(), "application/json");
}

template <class F>
void guarded(httplib::Response& res, F&& f) {
    try {
        f();
    } catch (const ArgumentError& e) {
        send_error(res, 400, "invalid_argument", e.what());
    } catch (const FormatError& e) {
        send_error(res, 400, "bad_payload", e.what());
    } catch (const json::exception& e) {
        send_error(res, 400, "bad_request", e.what());
    } catch (const NotFoundError& e) {
        send_error(res, 404, "not_found", e.what());
    } catch (const ConflictError& e) {
        send_error(res, 409, "conflict", e.what());
    } catch (const std::exception& e) {
        send_error(res, 500, "internal", e.what());
    }
}

json parse_body(const httplib::Request& req) {
    auto doc = json::parse(req.body);
    if (!doc.is_object()) throw ArgumentError("request body must be a JSON object");
    return doc;
}

std::string png_field(const json& body, const char* key) {
    if (!body.contains(key) || !body.at(key).is_string()) {
        throw ArgumentError(std::string("missing string field \"") + key + "\"");
    }
    return base64_decode(body.at(key).get<std::string>());
}

std::size_t coordinate(const json& body, const char* key) {
    if (!body.contains(key) || !body.at(key).is_number_integer()) {
        throw ArgumentError(std::string("missing integer field \"") + key + "\"");
    }
    const auto v = body.at(key).get<long long>();
    if (v < 0) throw ArgumentError(std::string(key) + " = " + std::to_string(v) + " is outside the frame");
    return static_cast<std::size_t>(v);
}

std::size_t parse_coordinate(const std::string& text, const char* key) {
    const long long v = std::stoll(text);
    if (v < 0) throw ArgumentError(std::string(key) + " = " + text + " is outside the frame");
    return static_cast<std::size_t>(v);
}

}  // namespace

HttpServer::HttpServer(SessionService& service) : impl_(std::make_unique<Impl>(service)) {
    auto& srv = impl_->server;
    auto& svc = impl_->service;
    const char* json_type = "application/json";

    srv.Post("/v1/sessions", [&svc, json_type](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const auto body = parse_body(req);
            const std::string frame = png_field(body, "frame_png_base64");
            std::optional<std::string> prev;
            if (body.contains("prev_frame_png_base64") && !body.at("prev_frame_png_base64").is_null()) {
                prev = png_field(body, "prev_frame_png_base64");
            }
            const std::string checkpoint = body.value("checkpoint", std::string());
            const auto state = svc.create(frame, prev ? std::optional<std::string_view>(*prev) : std::nullopt, checkpoint);
            res.status = 201;
            res.set_content(json{{"session_id", state.session_id},
                                 {"width", state.width},
                                 {"height", state.height},
                                 {"num_heads", state.num_heads}}
                                .dump(),
                            json_type);
        });
    });
    srv.Post(R"(/v1/sessions/([0-9a-z]+)/clicks)", [&svc, json_type](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const auto body = parse_body(req);
            const Point p{coordinate(body, "x"), coordinate(body, "y")};
            const std::string pol = body.value("polarity", std::string());
            if (pol != "pos" && pol != "neg") throw ArgumentError("polarity must be \"pos\" or \"neg\"");
            const auto out = svc.add_click(req.matches[1], p, pol == "pos" ? Polarity::Positive : Polarity::Negative);
            res.set_content(out.to_json(), json_type);
        });
    });
    srv.Delete(R"(/v1/sessions/([0-9a-z]+)/clicks/(-?\d+),(-?\d+))",
               [&svc, json_type](const httplib::Request& req, httplib::Response& res) {
                   guarded(res, [&] {
                       const Point p{parse_coordinate(req.matches[2], "x"), parse_coordinate(req.matches[3], "y")};
                       res.set_content(svc.remove_click(req.matches[1], p).to_json(), json_type);
                   });
               });
    srv.Post(R"(/v1/sessions/([0-9a-z]+)/predict)", [&svc, json_type](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] { res.set_content(svc.predict(req.matches[1]).to_json(), json_type); });
    });
    srv.Post(R"(/v1/sessions/([0-9a-z]+)/frame)", [&svc, json_type](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const auto body = parse_body(req);
            res.set_content(svc.advance_frame(req.matches[1], png_field(body, "frame_png_base64")).to_json(), json_type);
        });
    });
    srv.Get(R"(/v1/sessions/([0-9a-z]+)/mask)", [&svc](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            std::size_t head = 1;
            if (req.has_param("head")) {
                const std::string h = req.get_param_value("head");
                if (h.empty() || !std::all_of(h.begin(), h.end(), ::isdigit) || h.size() > 9) {
                    throw ArgumentError("head must be a positive integer, got \"" + h + "\"");
                }
                head = std::stoul(h);
            }
            const auto format = parse_mask_format(req.has_param("format") ? req.get_param_value("format") : "png");
            const auto payload = svc.mask(req.matches[1], head, format);
            res.set_header("X-Hyperseg-Head", std::to_string(payload.head));
            res.set_header("X-Hyperseg-Rank", std::to_string(payload.rank));
            res.set_content(payload.bytes, payload.content_type);
        });
    });
    srv.Get(R"(/v1/sessions/([0-9a-z]+))", [&svc, json_type](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] { res.set_content(svc.state_json(req.matches[1]), json_type); });
    });
    srv.Delete(R"(/v1/sessions/([0-9a-z]+))", [&svc, json_type](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const std::string id = req.matches[1];
            svc.remove(id);
            res.set_content(json{{"session_id", id}, {"deleted", true}}.dump(), json_type);
        });
    });
    srv.Get("/v1/checkpoints", [&svc, json_type](const httplib::Request&, httplib::Response& res) {
        guarded(res, [&] { res.set_content(svc.checkpoints_json(), json_type); });
    });
    srv.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
        if (!res.body.empty()) return httplib::Server::HandlerResponse::Unhandled;
        send_error(res, res.status, res.status == 404 ? "not_found" : "bad_request",
                   "no route for " + req.method + " " + req.path);
        return httplib::Server::HandlerResponse::Handled;
    });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
    if (port == 0) {
        const int bound = impl_->server.bind_to_any_port(host);
        if (bound < 0) throw std::runtime_error("cannot bind " + host);
        return bound;
    }
    if (!impl_->server.bind_to_port(host, port)) {
        throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
    }
    return port;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
    if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

}  // namespace hyperseg
