#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <thread>

#include "doctest.h"
#include "eyetheia/errors.hpp"
#include "eyetheia/geometry.hpp"
#include "eyetheia/model/weights.hpp"
#include "eyetheia/server.hpp"
#include "httplib.h"
#include "server_payload.hpp"
#include "synthetic_fixture.hpp"

using namespace eyetheia;
using namespace eyetheia::server;
using nlohmann::json;

namespace {

const ScreenGeometry kScreen{1920, 1080};

std::unique_ptr<Service> make_service(Service::Clock clock = nullptr) {
    const auto& base = testutil::trained_tiny_base();
    return std::make_unique<Service>(base, preprocess::MeanImages::constant(base.config()), ServerConfig{},
                                     std::move(clock));
}

std::string create(Service& svc, const ScreenGeometry& screen = kScreen) {
    const auto r = svc.create_session({{"screen", {{"width_px", screen.width_px}, {"height_px", screen.height_px}}}});
    REQUIRE(r.status == 200);
    return r.body["session_id"].get<std::string>();
}

// Frames of one subject looking at a few fixed screen positions.
std::vector<preprocess::Frame> probe_frames(std::uint64_t seed, std::size_t n) {
    std::uint64_t state = seed;
    const auto subject = synthetic::random_subject(state);
    std::vector<preprocess::Frame> out;
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back(synthetic::render(subject, nn::unit_uniform(state), nn::unit_uniform(state), seed + i));
    }
    return out;
}

// Offline pipeline on the in-memory frame.
GazePoint offline_px(const model::GazeNet& net, const preprocess::Frame& frame, const ScreenGeometry& screen) {
    const auto bundle = preprocess::make_bundle(frame, preprocess::MeanImages::constant(net.config()), net.config());
    return geometry::to_px(net.predict(bundle), screen);
}

struct LiveServer {
    std::unique_ptr<Service> service = make_service();
    ServerConfig config = [] {
        ServerConfig c;
        c.port = 0;
        return c;
    }();
    HttpServer http{*service, config};
    int port = http.start();

    httplib::Client client() const {
        httplib::Client c("127.0.0.1", port);
        c.set_read_timeout(120, 0);
        return c;
    }
};

json post(httplib::Client& c, const std::string& path, const json& body, int expect) {
    const auto res = c.Post(path, body.dump(), "application/json");
    REQUIRE(res);
    CHECK(res->status == expect);
    auto j = json::parse(res->body);
    CHECK(j["schema_version"] == kSchemaVersion);
    return j;
}

}  // namespace

TEST_CASE("config file values and environment overrides") {
    auto c = ServerConfig::from_json(
        {{"port", 9000}, {"weights", "w.eyth"}, {"profile", "tiny"}, {"oneeuro", {{"beta", 0.5}}}});
    CHECK(c.port == 9000);
    CHECK(c.oneeuro.beta == 0.5);
    CHECK(c.profile == model::Profile::Tiny);
    c.apply_env([](const char* name) -> const char* {
        const std::string n = name;
        if (n == "EYETHEIA_PORT") return "8123";
        if (n == "EYETHEIA_WEIGHTS") return "/tmp/other.eyth";
        if (n == "EYETHEIA_PROFILE") return "full";
        return nullptr;
    });
    CHECK(c.port == 8123);
    CHECK(c.weights == "/tmp/other.eyth");
    CHECK(c.profile == model::Profile::Full);
    CHECK_THROWS_AS(c.apply_env([](const char* n) -> const char* {
        return std::string(n) == "EYETHEIA_PORT" ? "80x" : nullptr;
    }),
                    DataError);
    CHECK_THROWS_AS(ServerConfig::from_json({{"port", 70000}}), DataError);
    CHECK_THROWS_AS(ServerConfig::from_json({{"oneeuro", {{"min_cutoff", -1}}}}), DataError);
}

TEST_CASE("startup loads weights by fingerprint and rejects bad paths or profiles") {
    const auto dir = std::filesystem::temp_directory_path() / "eyetheia_server_test";
    std::filesystem::create_directories(dir);
    const auto& base = testutil::trained_tiny_base();
    model::save_weights_file(base, dir / "base.eyth");

    ServerConfig c;
    c.weights = dir / "base.eyth";
    const auto svc = Service::from_config(c);
    CHECK(svc->base_model().config().output_space == Space::NormalizedScreen);
    CHECK(model::save_weights(svc->base_model()) == model::save_weights(base));

    c.profile = model::Profile::Full;
    CHECK_THROWS_AS(Service::from_config(c), DataError);
    c.profile = model::Profile::Tiny;
    c.weights = dir / "missing.eyth";
    CHECK_THROWS_AS(Service::from_config(c), DataError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("sessions: creation, rejection of bad screens, independence") {
    auto svc = make_service();
    const auto a = create(*svc), b = create(*svc);
    CHECK(a != b);
    CHECK(svc->session_count() == 2);
    CHECK(svc->create_session({{"screen", {{"width_px", 0}, {"height_px", 1080}}}}).status == 400);
    CHECK(svc->create_session({{"screen", {{"width_px", 1920}}}}).status == 400);
    CHECK(svc->create_session({{"width_px", 1920}, {"height_px", 1080}, {"oneeuro", {{"beta", -1}}}}).status == 400);
    CHECK(svc->create_session({{"width_px", 1280}, {"height_px", 800}}).status == 200);
    CHECK(svc->session_count() == 3);
}

TEST_CASE("health reports the loaded profile") {
    auto svc = make_service();
    const auto h = svc->health();
    CHECK(h.status == 200);
    CHECK(h.body["status"] == "ok");
    CHECK(h.body["profile"] == "tiny");
    CHECK(h.body["fingerprint"] == svc->base_model().config().fingerprint());
    CHECK(h.body["schema_version"] == kSchemaVersion);
}

TEST_CASE("predict: unknown session, malformed payload, faceless frame") {
    auto svc = make_service();
    const auto id = create(*svc);
    const auto frames = probe_frames(11, 1);
    CHECK(svc->predict("nope", testutil::predict_payload(frames[0], 0)).status == 404);
    CHECK(svc->calibrate("nope", {{"samples", json::array()}}).status == 404);
    CHECK(svc->predict(id, {{"timestamp_ms", 0}}).status == 400);
    CHECK(svc->predict(id, {{"frame_b64", "not base64!"}, {"timestamp_ms", 0}}).status == 400);
    auto bad = testutil::predict_payload(frames[0], 0);
    bad["landmarks"] = json::array({0.5, 0.5});
    CHECK(svc->predict(id, bad).status == 400);

    auto faceless = frames[0];
    faceless.landmarks.reset();
    const auto r = svc->predict(id, testutil::predict_payload(faceless, 0));
    CHECK(r.status == 200);
    CHECK(r.body["valid"] == false);
    CHECK(r.body["face_detected"] == false);
    CHECK(r.body["raw"].is_null());
    CHECK(r.body["smoothed"].is_null());
}

TEST_CASE("identical frames give identical raw output and the smoothed point converges") {
    auto svc = make_service();
    const auto id = create(*svc);
    const auto frame = probe_frames(12, 1)[0];
    json first_raw;
    double last_gap = 1e300;
    for (int i = 0; i < 40; ++i) {
        const auto r = svc->predict(id, testutil::predict_payload(frame, 1000.0 + 33.0 * i));
        REQUIRE(r.status == 200);
        if (i == 0) first_raw = r.body["raw"];
        CHECK(r.body["raw"].dump() == first_raw.dump());
        const double gap = std::hypot(r.body["smoothed"]["x_px"].get<double>() - first_raw["x_px"].get<double>(),
                                      r.body["smoothed"]["y_px"].get<double>() - first_raw["y_px"].get<double>());
        CHECK(gap <= last_gap + 1e-9);
        last_gap = gap;
    }
    CHECK(last_gap < 1e-6);

    // A repeated timestamp still answers, without a smoothed point.
    const auto r = svc->predict(id, testutil::predict_payload(frame, 1000.0));
    CHECK(r.status == 200);
    CHECK(r.body["valid"] == true);
    CHECK(r.body["smoothed"].is_null());
    CHECK(r.body["raw"].dump() == first_raw.dump());
}

TEST_CASE("space chain carries the model-space value and its pixel conversion") {
    auto svc = make_service();
    const auto id = create(*svc, {1440, 900});
    const auto frame = probe_frames(13, 1)[0];
    const auto r = svc->predict(id, testutil::predict_payload(frame, 0));
    const auto& chain = r.body["space_chain"];
    REQUIRE(chain.size() == 2);
    CHECK(chain[0]["space"] == "normalized_screen");
    CHECK(chain[1]["space"] == "screen_px");
    CHECK(chain[1]["x"].get<double>() == doctest::Approx(chain[0]["x"].get<double>() * 1440));
    CHECK(chain[1]["y"].get<double>() == doctest::Approx(chain[0]["y"].get<double>() * 900));
}

TEST_CASE("HTTP: create, calibrate on 13 samples, predict loop matches offline pipeline") {
    LiveServer live;
    auto cli = live.client();

    const auto health = cli.Get("/health");
    REQUIRE(health);
    CHECK(health->status == 200);
    CHECK(json::parse(health->body)["status"] == "ok");

    const auto created = post(cli, "/session", {{"screen", {{"width_px", 1920}, {"height_px", 1080}}}}, 200);
    const std::string id = created["session_id"];

    // Before calibration the session model is the base model.
    const auto frames = probe_frames(21, 10);
    for (std::size_t i = 0; i < frames.size(); ++i) {
        const auto r = post(cli, "/session/" + id + "/predict", testutil::predict_payload(frames[i], 100.0 * i), 200);
        const auto off = offline_px(testutil::trained_tiny_base(), frames[i], kScreen);
        CHECK(std::abs(r["raw"]["x_px"].get<double>() - off.x) <= 1e-5);
        CHECK(std::abs(r["raw"]["y_px"].get<double>() - off.y) <= 1e-5);
    }

    const auto session = testutil::calibration_session(kScreen, 77);
    const auto report = post(cli, "/session/" + id + "/calibrate", testutil::calibrate_payload(session), 200);
    CHECK(report["n_samples"] == 13);
    CHECK(report["residuals"].size() == 13);
    CHECK(report["mean_error_after_px"].get<double>() < report["mean_error_before_px"].get<double>());

    // The offline oracle for the calibrated session: the same fine-tune run in-process.
    auto offline = testutil::trained_tiny_base();
    const auto samples = calibration::assemble(session, kScreen, preprocess::MeanImages::constant(offline.config()),
                                               offline.config());
    const auto offline_report = calibration::fine_tune(offline, samples, kScreen);
    CHECK(report["mean_error_after_px"].get<double>() == doctest::Approx(offline_report.mean_error_after_px));

    double worst = 0;
    for (std::size_t i = 0; i < frames.size(); ++i) {
        const auto r =
            post(cli, "/session/" + id + "/predict", testutil::predict_payload(frames[i], 5000.0 + 100.0 * i), 200);
        CHECK(r["valid"] == true);
        const auto off = offline_px(offline, frames[i], kScreen);
        worst = std::max({worst, std::abs(r["raw"]["x_px"].get<double>() - off.x),
                          std::abs(r["raw"]["y_px"].get<double>() - off.y)});
    }
    CHECK(worst <= 1e-5);
}

TEST_CASE("HTTP: routing and payload errors") {
    LiveServer live;
    auto cli = live.client();
    post(cli, "/session", json::object(), 400);
    const auto res = cli.Post("/session", "{not json", "application/json");
    REQUIRE(res);
    CHECK(res->status == 400);
    post(cli, "/session/deadbeef/predict", {{"timestamp_ms", 0}}, 404);
    const auto missing = cli.Get("/nowhere");
    REQUIRE(missing);
    CHECK(missing->status == 404);
}

TEST_CASE("HTTP: tiny-profile predict latency under 50 ms per frame") {
    LiveServer live;
    auto cli = live.client();
    const std::string id = post(cli, "/session", {{"width_px", 1920}, {"height_px", 1080}}, 200)["session_id"];
    const auto frames = probe_frames(31, 5);
    std::vector<std::string> bodies;
    for (std::size_t i = 0; i < 50; ++i) bodies.push_back(testutil::predict_payload(frames[i % 5], 33.0 * i).dump());
    const auto t0 = std::chrono::steady_clock::now();
    for (const auto& b : bodies) {
        const auto res = cli.Post("/session/" + id + "/predict", b, "application/json");
        REQUIRE(res);
        REQUIRE(res->status == 200);
    }
    const double ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count() / bodies.size();
    MESSAGE("mean predict latency " << ms << " ms");
    CHECK(ms < 50.0);
}

TEST_CASE("calibrating one session leaves another byte-identical") {
    auto svc = make_service();
    const auto a = create(*svc), b = create(*svc);
    const auto frames = probe_frames(41, 8);
    const auto raw_dump = [&](const std::string& id, double t0) {
        std::string out;
        for (std::size_t i = 0; i < frames.size(); ++i) {
            out += svc->predict(id, testutil::predict_payload(frames[i], t0 + 100.0 * i)).body["raw"].dump();
        }
        return out;
    };
    const auto before_a = raw_dump(a, 0);
    const auto before_b = raw_dump(b, 0);
    const auto base_bytes = model::save_weights(svc->base_model());
    REQUIRE(svc->calibrate(a, testutil::calibrate_payload(testutil::calibration_session(kScreen, 5))).status == 200);
    CHECK(raw_dump(a, 10000) != before_a);
    CHECK(raw_dump(b, 10000) == before_b);
    CHECK(model::save_weights(svc->base_model()) == base_bytes);
}

TEST_CASE("predictions and a second calibration are refused while calibrating") {
    auto svc = make_service();
    const auto id = create(*svc);
    const auto frame = probe_frames(51, 1)[0];
    const auto payload = testutil::calibrate_payload(testutil::calibration_session(kScreen, 9));

    std::atomic<int> status{0};
    std::thread worker([&] { status = svc->calibrate(id, payload).status; });
    bool saw_conflict = false, saw_calibrate_conflict = false;
    for (int i = 0; i < 2000 && status == 0; ++i) {
        const auto r = svc->predict(id, testutil::predict_payload(frame, 10.0 * i));
        if (r.status == 409) {
            saw_conflict = true;
            CHECK(r.body["error"] == "calibrating");
            if (!saw_calibrate_conflict) saw_calibrate_conflict = svc->calibrate(id, payload).status == 409;
        } else {
            CHECK(r.status == 200);
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(2));
    }
    worker.join();
    CHECK(status == 200);
    CHECK(saw_conflict);
    CHECK(saw_calibrate_conflict);
    CHECK(svc->predict(id, testutil::predict_payload(frame, 1e9)).status == 200);
}

TEST_CASE("aborted calibration answers 422 and leaves the session model unchanged") {
    auto svc = make_service();
    const auto id = create(*svc);
    const auto frames = probe_frames(61, 4);
    std::string before;
    for (std::size_t i = 0; i < frames.size(); ++i) {
        before += svc->predict(id, testutil::predict_payload(frames[i], i)).body["raw"].dump();
    }
    auto session = testutil::calibration_session(kScreen, 3);
    for (std::size_t i = 0; i < 7; ++i) session[i].frame.landmarks.reset();
    const auto r = svc->calibrate(id, testutil::calibrate_payload(session));
    CHECK(r.status == 422);
    CHECK(r.body["error"] == "calibration_aborted");
    std::string after;
    for (std::size_t i = 0; i < frames.size(); ++i) {
        after += svc->predict(id, testutil::predict_payload(frames[i], 100 + i)).body["raw"].dump();
    }
    CHECK(after == before);

    // Too few samples or an off-screen target is a client error.
    session.resize(3);
    CHECK(svc->calibrate(id, testutil::calibrate_payload(session)).status == 400);
    auto off = testutil::calibration_session(kScreen, 3);
    off[0].x_px = 5000;
    CHECK(svc->calibrate(id, testutil::calibrate_payload(off)).status == 400);
    CHECK(svc->calibrate(id, {{"samples", "x"}}).status == 400);
}

TEST_CASE("sessions expire after 30 idle minutes") {
    auto now = std::chrono::steady_clock::time_point{};
    auto svc = make_service([&now] { return now; });
    const auto idle = create(*svc), busy = create(*svc);
    const auto frame = probe_frames(71, 1)[0];
    now += std::chrono::minutes(20);
    CHECK(svc->predict(busy, testutil::predict_payload(frame, 1)).status == 200);
    now += std::chrono::minutes(11);
    CHECK(svc->predict(idle, testutil::predict_payload(frame, 2)).status == 404);
    CHECK(svc->predict(busy, testutil::predict_payload(frame, 3)).status == 200);
    CHECK(svc->session_count() == 1);
    CHECK(svc->health().body["uptime_s"].get<double>() == doctest::Approx(31 * 60));
}

TEST_CASE("soak: 1000 predictions, then health still ok") {
    auto svc = make_service();
    const auto id = create(*svc);
    const auto frames = probe_frames(81, 10);
    std::vector<json> payloads;
    for (const auto& f : frames) payloads.push_back(testutil::predict_payload(f, 0));
    std::size_t ok = 0;
    for (int i = 0; i < 1000; ++i) {
        auto& p = payloads[i % payloads.size()];
        p["timestamp_ms"] = 16.0 * i;
        const auto r = svc->predict(id, p);
        ok += r.status == 200 && r.body["valid"] == true;
    }
    CHECK(ok == 1000);
    const auto h = svc->health();
    CHECK(h.status == 200);
    CHECK(h.body["status"] == "ok");
}
