#include "eyetheia/server.hpp"

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <random>

#include "eyetheia/errors.hpp"
#include "eyetheia/geometry.hpp"
#include "eyetheia/image_io.hpp"
#include "eyetheia/model/weights.hpp"
#include "httplib.h"

namespace eyetheia::server {

using nlohmann::json;

namespace {

// Malformed request payload.
class BadRequest : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

Response reply(int status, json body) {
    body["schema_version"] = kSchemaVersion;
    return {status, std::move(body)};
}

Response error(int status, const std::string& code, const std::string& message) {
    return reply(status, {{"error", code}, {"message", message}});
}

double number(const json& obj, const char* key) {
    if (!obj.is_object() || !obj.contains(key) || !obj[key].is_number()) {
        throw BadRequest(std::string("'") + key + "' must be a number");
    }
    return obj[key].get<double>();
}

void apply_oneeuro(const json& j, smoothing::OneEuroConfig& c) {
    if (!j.is_object()) throw BadRequest("'oneeuro' must be an object");
    if (j.contains("min_cutoff")) c.min_cutoff = number(j, "min_cutoff");
    if (j.contains("beta")) c.beta = number(j, "beta");
    if (j.contains("d_cutoff")) c.d_cutoff = number(j, "d_cutoff");
    if (j.contains("enabled")) {
        if (!j["enabled"].is_boolean()) throw BadRequest("'oneeuro.enabled' must be a boolean");
        c.enabled = j["enabled"].get<bool>();
    }
    c.validate();
}

// {"frame_b64": "...", "landmarks": [956 floats] | null}
preprocess::Frame parse_frame(const json& j) {
    if (!j.is_object() || !j.contains("frame_b64") || !j["frame_b64"].is_string()) {
        throw BadRequest("'frame_b64' must be a base64 string");
    }
    const auto img = io::decode_image(io::base64_decode(j["frame_b64"].get_ref<const std::string&>()));
    preprocess::Frame f;
    f.width = img.width;
    f.height = img.height;
    f.rgb = img.rgb;
    if (j.contains("landmarks") && !j["landmarks"].is_null()) {
        const auto& lm = j["landmarks"];
        if (!lm.is_array()) throw BadRequest("'landmarks' must be an array or null");
        if (!lm.empty()) {
            std::vector<float> flat;
            flat.reserve(lm.size());
            for (const auto& v : lm) {
                if (!v.is_number()) throw BadRequest("'landmarks' must hold numbers");
                flat.push_back(v.get<float>());
            }
            f.landmarks = preprocess::landmarks_from_flat(flat);
        }
    }
    return f;
}

json point_json(const GazePoint& p) {
    return {{"space", to_string(p.space)}, {"x", p.x}, {"y", p.y}};
}

std::string new_session_id() {
    static std::mutex mu;
    static std::random_device rd;
    static std::mt19937_64 gen(rd());
    std::lock_guard lock(mu);
    static constexpr char kHex[] = "0123456789abcdef";
    std::string id;
    for (int k = 0; k < 2; ++k) {
        auto v = gen();
        for (int i = 0; i < 16; ++i, v >>= 4) id.push_back(kHex[v & 15]);
    }
    return id;
}

}  // namespace

std::string_view to_string(SessionStatus status) {
    switch (status) {
        case SessionStatus::Ready: return "ready";
        case SessionStatus::Calibrating: return "calibrating";
        case SessionStatus::Error: return "error";
    }
    return "unknown";
}

ServerConfig ServerConfig::from_json(const json& j, ServerConfig c) {
    if (!j.is_object()) throw DataError("server config must be a JSON object");
    try {
        if (j.contains("host")) c.host = j["host"].get<std::string>();
        if (j.contains("port")) c.port = j["port"].get<int>();
        if (j.contains("weights")) c.weights = j["weights"].get<std::string>();
        if (j.contains("means") && !j["means"].is_null()) c.means = j["means"].get<std::string>();
        if (j.contains("profile")) c.profile = model::profile_from_string(j["profile"].get<std::string>());
        if (j.contains("session_ttl_s")) c.session_ttl = std::chrono::seconds(j["session_ttl_s"].get<long>());
        if (j.contains("request_timeout_s")) {
            c.request_timeout = std::chrono::seconds(j["request_timeout_s"].get<long>());
        }
        if (j.contains("oneeuro")) apply_oneeuro(j["oneeuro"], c.oneeuro);
        if (j.contains("calibration")) {
            const auto& cal = j["calibration"];
            if (cal.contains("lr")) c.calibration.lr = cal["lr"].get<double>();
            if (cal.contains("epochs")) c.calibration.epochs = cal["epochs"].get<std::size_t>();
        }
    } catch (const json::exception& e) {
        throw DataError(std::string("server config: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw DataError(std::string("server config: ") + e.what());
    }
    if (c.port < 0 || c.port > 65535) throw DataError("server config: port out of range");
    return c;
}

ServerConfig ServerConfig::from_json(const json& j) { return from_json(j, ServerConfig{}); }

ServerConfig ServerConfig::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open server config " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    }
    auto c = from_json(j);
    // Relative file paths resolve against the config's directory.
    const auto base = path.parent_path();
    if (!c.weights.empty() && c.weights.is_relative()) c.weights = base / c.weights;
    if (c.means && c.means->is_relative()) c.means = base / *c.means;
    return c;
}

void ServerConfig::apply_env(const std::function<const char*(const char*)>& getenv) {
    const auto get = [&](const char* name) { return getenv ? getenv(name) : std::getenv(name); };
    if (const char* v = get("EYETHEIA_WEIGHTS"); v && *v) weights = v;
    if (const char* v = get("EYETHEIA_PROFILE"); v && *v) {
        try {
            profile = model::profile_from_string(v);
        } catch (const std::invalid_argument& e) {
            throw DataError(std::string("EYETHEIA_PROFILE: ") + e.what());
        }
    }
    if (const char* v = get("EYETHEIA_PORT"); v && *v) {
        char* end = nullptr;
        const long p = std::strtol(v, &end, 10);
        if (*end != '\0' || p < 0 || p > 65535) throw DataError(std::string("EYETHEIA_PORT: bad port '") + v + "'");
        port = static_cast<int>(p);
    }
}

struct Service::Session {
    std::string id;
    ScreenGeometry screen;
    std::atomic<SessionStatus> status{SessionStatus::Ready};
    std::mutex mu;  // guards everything below
    model::GazeNet model;
    smoothing::OneEuroFilter filter;
    calibration::FineTuneConfig calibration;
    std::chrono::steady_clock::time_point created, last_used;
    std::size_t predictions = 0;
    std::size_t calibrations = 0;
};

Service::Service(model::GazeNet base, preprocess::MeanImages means, ServerConfig config, Clock clock)
    : base_(std::make_shared<const model::GazeNet>(std::move(base))),
      means_(std::move(means)),
      config_(std::move(config)),
      clock_(clock ? std::move(clock) : Clock([] { return std::chrono::steady_clock::now(); })),
      started_(clock_()) {
    means_.check(base_->config());
    config_.oneeuro.validate();
}

std::unique_ptr<Service> Service::from_config(const ServerConfig& config) {
    if (config.weights.empty()) throw DataError("no weights path configured");
    const auto bytes = model::read_file_bytes(config.weights);
    const auto model_config = model::resolve_config(bytes, config.profile);
    auto base = model::load_weights(bytes, model_config);
    auto means = config.means ? preprocess::load_means(*config.means, model_config)
                              : preprocess::MeanImages::constant(model_config);
    return std::make_unique<Service>(std::move(base), std::move(means), config);
}

void Service::purge_expired() {
    const auto now = clock_();
    std::unique_lock lock(sessions_mu_);
    for (auto it = sessions_.begin(); it != sessions_.end();) {
        auto& s = *it->second;
        std::unique_lock slock(s.mu, std::try_to_lock);
        // A busy session is in use, so not idle.
        if (slock.owns_lock() && s.status != SessionStatus::Calibrating && now - s.last_used > config_.session_ttl) {
            slock.unlock();
            it = sessions_.erase(it);
        } else {
            ++it;
        }
    }
}

std::shared_ptr<Service::Session> Service::find(const std::string& id) {
    purge_expired();
    std::shared_lock lock(sessions_mu_);
    const auto it = sessions_.find(id);
    return it == sessions_.end() ? nullptr : it->second;
}

std::size_t Service::session_count() const {
    std::shared_lock lock(sessions_mu_);
    return sessions_.size();
}

Response Service::create_session(const json& body) {
    auto session = std::make_shared<Session>();
    try {
        const json& scr = body.contains("screen") ? body["screen"] : body;
        session->screen = ScreenGeometry::make(number(scr, "width_px"), number(scr, "height_px"));
        session->calibration = config_.calibration;
        auto oneeuro = config_.oneeuro;
        if (body.contains("oneeuro")) apply_oneeuro(body["oneeuro"], oneeuro);
        if (body.contains("calibration")) {
            const auto& cal = body["calibration"];
            if (cal.contains("lr")) session->calibration.lr = number(cal, "lr");
            if (cal.contains("epochs")) {
                const double e = number(cal, "epochs");
                if (!(e >= 1 && e <= 10000) || e != std::floor(e)) throw BadRequest("'calibration.epochs' out of range");
                session->calibration.epochs = static_cast<std::size_t>(e);
            }
            if (!std::isfinite(session->calibration.lr) || session->calibration.lr < 0) {
                throw BadRequest("'calibration.lr' must be finite and non-negative");
            }
        }
        session->filter = smoothing::OneEuroFilter(oneeuro);
    } catch (const std::invalid_argument& e) {
        return error(400, "bad_request", e.what());
    } catch (const json::exception& e) {
        return error(400, "bad_request", e.what());
    }
    session->model = *base_;
    session->created = session->last_used = clock_();
    session->id = new_session_id();
    purge_expired();
    {
        std::unique_lock lock(sessions_mu_);
        sessions_[session->id] = session;
    }
    return reply(200, {{"session_id", session->id},
                       {"screen", {{"width_px", session->screen.width_px}, {"height_px", session->screen.height_px}}},
                       {"status", to_string(SessionStatus::Ready)}});
}

Response Service::calibrate(const std::string& session_id, const json& body) {
    const auto session = find(session_id);
    if (!session) return error(404, "not_found", "unknown session " + session_id);

    std::vector<calibration::RawSample> raw;
    try {
        if (!body.is_object() || !body.contains("samples") || !body["samples"].is_array()) {
            throw BadRequest("'samples' must be an array");
        }
        for (const auto& s : body["samples"]) {
            if (!s.is_object() || !s.contains("target_px") || !s["target_px"].is_array() ||
                s["target_px"].size() != 2 || !s["target_px"][0].is_number() || !s["target_px"][1].is_number()) {
                throw BadRequest("each sample needs 'target_px': [x, y]");
            }
            raw.push_back({parse_frame(s), s["target_px"][0].get<double>(), s["target_px"][1].get<double>()});
        }
    } catch (const std::invalid_argument& e) {
        return error(400, "bad_request", e.what());
    } catch (const DataError& e) {
        return error(400, "bad_request", e.what());
    }

    SessionStatus expected = SessionStatus::Ready;
    if (!session->status.compare_exchange_strong(expected, SessionStatus::Calibrating)) {
        return error(409, "calibrating", "session " + session_id + " is busy calibrating");
    }

    model::GazeNet working;
    calibration::FineTuneConfig ft;
    {
        std::lock_guard lock(session->mu);
        working = session->model;
        ft = session->calibration;
    }
    const auto finish = [&](bool swap) {
        std::lock_guard lock(session->mu);
        if (swap) {
            session->model = std::move(working);
            session->filter.reset();
            ++session->calibrations;
        }
        session->last_used = clock_();
        session->status = SessionStatus::Ready;
    };

    try {
        const auto samples = calibration::assemble(raw, session->screen, means_, working.config());
        const auto report = calibration::fine_tune(working, samples, session->screen, ft);
        finish(true);
        json residuals = json::array();
        for (const auto& r : report.residuals) {
            residuals.push_back({{"target_px", {r.target_x_px, r.target_y_px}},
                                 {"before_px", {r.before_x_px, r.before_y_px}},
                                 {"after_px", {r.after_x_px, r.after_y_px}},
                                 {"error_before_px", r.error_before_px},
                                 {"error_after_px", r.error_after_px}});
        }
        return reply(200, {{"session_id", session_id},
                           {"n_samples", report.n_samples},
                           {"n_received", raw.size()},
                           {"mean_error_before_px", report.mean_error_before_px},
                           {"mean_error_after_px", report.mean_error_after_px},
                           {"steps", report.steps},
                           {"wall_time_ms", report.wall_time_ms},
                           {"residuals", residuals},
                           {"status", to_string(SessionStatus::Ready)}});
    } catch (const calibration::CalibrationAborted& e) {
        finish(false);
        return error(422, "calibration_aborted", e.what());
    } catch (const std::invalid_argument& e) {
        finish(false);
        return error(400, "bad_request", e.what());
    } catch (const DataError& e) {
        finish(false);
        return error(400, "bad_request", e.what());
    } catch (...) {
        finish(false);
        throw;
    }
}

Response Service::predict(const std::string& session_id, const json& body) {
    const auto session = find(session_id);
    if (!session) return error(404, "not_found", "unknown session " + session_id);
    if (session->status == SessionStatus::Calibrating) {
        return error(409, "calibrating", "session " + session_id + " is calibrating");
    }

    preprocess::Frame frame;
    double t_ms = 0;
    try {
        frame = parse_frame(body);
        t_ms = number(body, "timestamp_ms");
        if (!std::isfinite(t_ms)) throw BadRequest("'timestamp_ms' must be finite");
    } catch (const std::invalid_argument& e) {
        return error(400, "bad_request", e.what());
    } catch (const DataError& e) {
        return error(400, "bad_request", e.what());
    }

    std::lock_guard lock(session->mu);
    // Calibration may have started while this request waited for the lock.
    if (session->status == SessionStatus::Calibrating) {
        return error(409, "calibrating", "session " + session_id + " is calibrating");
    }
    session->last_used = clock_();
    ++session->predictions;

    json out{{"session_id", session_id}, {"timestamp_ms", t_ms}};
    model::InputBundle bundle;
    try {
        bundle = preprocess::make_bundle(frame, means_, session->model.config());
    } catch (const NoFaceError&) {
        out.update({{"valid", false}, {"face_detected", false}, {"raw", nullptr}, {"smoothed", nullptr},
                    {"space_chain", json::array()}});
        return reply(200, out);
    } catch (const DataError& e) {
        return error(400, "bad_request", e.what());
    }

    const GazePoint model_point = session->model.predict(bundle);
    GazePoint px = geometry::to_px(model_point, session->screen);
    px.timestamp_ms = static_cast<std::int64_t>(std::llround(t_ms));
    const auto smoothed = session->filter.filter(t_ms, px);

    out["valid"] = true;
    out["face_detected"] = true;
    out["raw"] = {{"x_px", px.x}, {"y_px", px.y}};
    out["smoothed"] = smoothed ? json{{"x_px", smoothed->x}, {"y_px", smoothed->y}} : json(nullptr);
    if (!smoothed) out["smoothing"] = "timestamp_not_increasing";
    out["space_chain"] = json::array({point_json(model_point), point_json(px)});
    return reply(200, out);
}

Response Service::health() const {
    const auto uptime = std::chrono::duration<double>(clock_() - started_).count();
    const auto& cfg = base_->config();
    return reply(200, {{"status", "ok"},
                       {"profile", model::to_string(cfg.profile)},
                       {"output_space", to_string(cfg.output_space)},
                       {"fingerprint", cfg.fingerprint()},
                       {"uptime_s", uptime},
                       {"sessions", session_count()}});
}

struct HttpServer::Impl {
    Impl(Service& s, ServerConfig c) : service(s), config(std::move(c)) {}

    Service& service;
    ServerConfig config;
    httplib::Server http;
};

namespace {

void send(httplib::Response& res, const Response& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
}

// Parses the request body; an empty body is an empty object.
std::optional<json> body_json(const httplib::Request& req, httplib::Response& res) {
    if (req.body.empty()) return json::object();
    try {
        return json::parse(req.body);
    } catch (const json::exception& e) {
        send(res, error(400, "bad_request", std::string("body is not JSON: ") + e.what()));
        return std::nullopt;
    }
}

}  // namespace

HttpServer::HttpServer(Service& service, const ServerConfig& config)
    : impl_(std::make_unique<Impl>(service, config)) {
    auto& http = impl_->http;
    auto& svc = impl_->service;
    const auto secs = config.request_timeout.count();
    http.set_read_timeout(secs, 0);
    http.set_write_timeout(secs, 0);
    http.set_payload_max_length(256 * 1024 * 1024);

    http.Get("/health", [&svc](const httplib::Request&, httplib::Response& res) { send(res, svc.health()); });
    http.Post("/session", [&svc](const httplib::Request& req, httplib::Response& res) {
        if (auto b = body_json(req, res)) send(res, svc.create_session(*b));
    });
    http.Post(R"(/session/([0-9A-Za-z_-]+)/calibrate)", [&svc](const httplib::Request& req, httplib::Response& res) {
        if (auto b = body_json(req, res)) send(res, svc.calibrate(req.matches[1], *b));
    });
    http.Post(R"(/session/([0-9A-Za-z_-]+)/predict)", [&svc](const httplib::Request& req, httplib::Response& res) {
        if (auto b = body_json(req, res)) send(res, svc.predict(req.matches[1], *b));
    });
    http.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        std::string what = "internal error";
        try {
            std::rethrow_exception(ep);
        } catch (const std::exception& e) {
            what = e.what();
        } catch (...) {
        }
        send(res, error(500, "internal", what));
    });
    http.set_error_handler([](const httplib::Request&, httplib::Response& res) {
        if (res.body.empty()) send(res, error(res.status, res.status == 404 ? "not_found" : "error", "no such route"));
    });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::start() {
    auto& http = impl_->http;
    const auto& cfg = impl_->config;
    if (cfg.port == 0) {
        port_ = http.bind_to_any_port(cfg.host);
    } else {
        port_ = http.bind_to_port(cfg.host, cfg.port) ? cfg.port : -1;
    }
    if (port_ < 0) throw DataError("cannot bind " + cfg.host + ":" + std::to_string(cfg.port));
    thread_ = std::thread([&http] { http.listen_after_bind(); });
    http.wait_until_ready();
    return port_;
}

void HttpServer::run() {
    if (!thread_.joinable()) start();
    thread_.join();
}

void HttpServer::stop() {
    impl_->http.stop();
    if (thread_.joinable() && thread_.get_id() != std::this_thread::get_id()) thread_.join();
}

}  // namespace eyetheia::server
