#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <thread>

#include "eyetheia/calibration.hpp"
#include "eyetheia/model/gaze_net.hpp"
#include "eyetheia/preprocess.hpp"
#include "eyetheia/smoothing.hpp"
#include "json.hpp"

namespace eyetheia::server {

inline constexpr const char* kSchemaVersion = "1";

struct ServerConfig {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::filesystem::path weights;              // WeightContainer with the base model
    std::optional<std::filesystem::path> means; // mean images; constant 0.5 when absent
    model::Profile profile = model::Profile::Tiny;
    smoothing::OneEuroConfig oneeuro;
    calibration::FineTuneConfig calibration;
    std::chrono::seconds session_ttl{30 * 60};
    std::chrono::seconds request_timeout{120};

    // JSON file with any of: host, port, weights, means, profile, session_ttl_s, request_timeout_s,
    // oneeuro.{min_cutoff, beta, d_cutoff, enabled}, calibration.{lr, epochs}.
    static ServerConfig from_file(const std::filesystem::path& path);
    static ServerConfig from_json(const nlohmann::json& j);
    static ServerConfig from_json(const nlohmann::json& j, ServerConfig base);
    // EYETHEIA_WEIGHTS, EYETHEIA_PORT, EYETHEIA_PROFILE override the matching fields.
    // `getenv` is injectable for tests.
    void apply_env(const std::function<const char*(const char*)>& getenv = nullptr);
};

struct Response {
    int status = 200;
    nlohmann::json body;
};

enum class SessionStatus { Ready, Calibrating, Error };
std::string_view to_string(SessionStatus status);

// Transport-independent request handling. Every body is JSON and every response carries schema_version.
class Service {
public:
    using Clock = std::function<std::chrono::steady_clock::time_point()>;

    Service(model::GazeNet base, preprocess::MeanImages means, ServerConfig config, Clock clock = nullptr);

    // Loads weights (and means) named by the config. Throws DataError on a bad path or mismatch.
    static std::unique_ptr<Service> from_config(const ServerConfig& config);

    Response create_session(const nlohmann::json& body);
    Response calibrate(const std::string& session_id, const nlohmann::json& body);
    Response predict(const std::string& session_id, const nlohmann::json& body);
    Response health() const;

    std::size_t session_count() const;
    const model::GazeNet& base_model() const { return *base_; }
    const preprocess::MeanImages& means() const { return means_; }

private:
    struct Session;
    std::shared_ptr<Session> find(const std::string& id);
    void purge_expired();

    std::shared_ptr<const model::GazeNet> base_;
    preprocess::MeanImages means_;
    ServerConfig config_;
    Clock clock_;
    std::chrono::steady_clock::time_point started_;
    mutable std::shared_mutex sessions_mu_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
};

// HTTP binding of a Service: POST /session, POST /session/{id}/calibrate, POST /session/{id}/predict,
// GET /health.
class HttpServer {
public:
    explicit HttpServer(Service& service, const ServerConfig& config);
    ~HttpServer();

    // Binds (port 0 picks a free port) and serves on a background thread. Returns the bound port.
    int start();
    // Blocks serving on the calling thread until stop().
    void run();
    void stop();
    int port() const { return port_; }

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    int port_ = 0;
    std::thread thread_;
};

}  // namespace eyetheia::server
