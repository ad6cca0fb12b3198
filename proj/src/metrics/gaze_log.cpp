#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "eyetheia/errors.hpp"
#include "eyetheia/metrics.hpp"

namespace eyetheia::metrics {

namespace {

std::string strip(std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

bool parse_bool(const std::string& s, bool& out) {
    if (s == "1" || s == "true") return out = true, true;
    if (s == "0" || s == "false") return out = false, true;
    return false;
}

}  // namespace

std::vector<GazeLogRecord> parse_gaze_log(std::istream& in) {
    std::vector<GazeLogRecord> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = strip(line);
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) f.push_back(strip(field));
        if (line.back() == ',') f.emplace_back();
        auto fail = [&](const std::string& why) {
            throw DataError("gaze log line " + std::to_string(lineno) + ": " + why);
        };
        if (f.size() != 5) fail("expected 5 fields, got " + std::to_string(f.size()));
        if (out.empty() && f[0] == "timestamp_ms") continue;

        GazeLogRecord r;
        try {
            std::size_t used = 0;
            r.t_ms = std::stoll(f[0], &used);
            if (used != f[0].size()) fail("bad timestamp '" + f[0] + "'");
        } catch (const std::logic_error&) {
            fail("bad timestamp '" + f[0] + "'");
        }
        if (!parse_bool(f[3], r.valid)) fail("bad valid flag '" + f[3] + "'");
        auto number = [&](const std::string& s, double& v) {
            if (s.empty() && !r.valid) {
                v = std::nan("");
                return;
            }
            try {
                std::size_t used = 0;
                v = std::stod(s, &used);
                if (used != s.size()) fail("bad coordinate '" + s + "'");
            } catch (const std::logic_error&) {
                fail("bad coordinate '" + s + "'");
            }
            if (r.valid && !std::isfinite(v)) fail("non-finite coordinate on a valid sample");
        };
        number(f[1], r.x);
        number(f[2], r.y);
        r.source = f[4];
        if (!out.empty() && r.t_ms < out.back().t_ms) fail("timestamps go backwards");
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<GazeLogRecord> read_gaze_log(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open gaze log " + path.string());
    try {
        return parse_gaze_log(in);
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

void write_gaze_log(std::ostream& out, std::span<const GazeLogRecord> records, bool header) {
    if (header) out << "timestamp_ms,x_px,y_px,valid,source_tag\n";
    const auto old = out.precision(std::numeric_limits<double>::max_digits10);
    for (const auto& r : records) {
        out << r.t_ms << ',';
        if (r.valid) out << r.x << ',' << r.y;
        else out << ',';
        out << ',' << (r.valid ? 1 : 0) << ',' << r.source << '\n';
    }
    out.precision(old);
}

}  // namespace eyetheia::metrics
