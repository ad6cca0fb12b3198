#include "eyetheia/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "eyetheia/errors.hpp"
#include "eyetheia/image_io.hpp"
#include "eyetheia/nn/params.hpp"
#include "eyetheia/synthetic.hpp"
#include "json.hpp"

namespace fs = std::filesystem;

namespace eyetheia::dataset {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_number(const std::string& text, const std::string& where) {
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size() || !std::isfinite(v)) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw DataError(where + ": '" + text + "' is not a number");
    }
}

ScreenGeometry read_screen(const fs::path& file, const std::string& subject) {
    std::ifstream in(file);
    if (!in) throw DataError(subject + ": missing " + file.filename().string());
    double w = 0, h = 0;
    if (!(in >> w >> h) || !(w > 0) || !(h > 0)) throw DataError(subject + ": screen.txt must hold 'W H'");
    return ScreenGeometry::make(w, h);
}

std::string trim(std::string s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
    std::size_t i = 0;
    while (i < s.size() && s[i] == ' ') ++i;
    return s.substr(i);
}

}  // namespace

std::vector<SubjectRecord> load_dataset(const fs::path& root) {
    std::vector<SubjectRecord> out;
    if (!fs::exists(root)) return out;
    if (!fs::is_directory(root)) throw DataError(root.string() + " is not a directory");
    std::vector<fs::path> dirs;
    for (const auto& entry : fs::directory_iterator(root))
        if (entry.is_directory()) dirs.push_back(entry.path());
    std::sort(dirs.begin(), dirs.end());

    for (const auto& dir : dirs) {
        SubjectRecord rec;
        rec.subject_id = dir.filename().string();
        const fs::path ann = dir / "annotations.csv";
        if (!fs::exists(ann)) throw DataError(rec.subject_id + ": missing annotations.csv");
        rec.screen = read_screen(dir / "screen.txt", rec.subject_id);

        std::ifstream in(ann);
        std::string line;
        std::size_t row = 0;
        while (std::getline(in, line)) {
            ++row;
            line = trim(line);
            if (line.empty()) continue;
            const auto fields = split_csv(line);
            const std::string where = rec.subject_id + " annotations.csv row " + std::to_string(row);
            if (fields.size() != 3) throw DataError(where + ": expected frame_path,x_px,y_px");
            if (row == 1 && fields[0] == "frame_path") continue;
            Sample s;
            s.frame_path = trim(fields[0]);
            s.resolved = dir / s.frame_path;
            s.x_px = parse_number(trim(fields[1]), where);
            s.y_px = parse_number(trim(fields[2]), where);
            if (s.x_px < 0 || s.x_px > rec.screen.width_px || s.y_px < 0 || s.y_px > rec.screen.height_px) {
                std::ostringstream msg;
                msg << where << ": gaze target (" << s.x_px << ", " << s.y_px << ") outside the " << rec.screen.width_px
                    << "x" << rec.screen.height_px << " screen";
                throw DataError(msg.str());
            }
            if (!fs::is_regular_file(s.resolved)) throw DataError(where + ": frame " + s.frame_path + " not found");
            rec.samples.push_back(std::move(s));
        }
        out.push_back(std::move(rec));
    }
    return out;
}

std::vector<GazePoint> normalize_targets(const SubjectRecord& record) {
    std::vector<GazePoint> out;
    out.reserve(record.samples.size());
    for (const auto& s : record.samples) {
        out.push_back({s.x_px / record.screen.width_px, s.y_px / record.screen.height_px, Space::NormalizedScreen,
                       std::nullopt, true});
    }
    return out;
}

fs::path landmarks_path(const fs::path& frame_path) {
    fs::path p = frame_path;
    p += ".landmarks.json";
    return p;
}

void write_landmarks(const fs::path& frame_path, const std::vector<preprocess::Landmark>& landmarks) {
    std::ofstream out(landmarks_path(frame_path));
    if (!out) throw DataError("cannot write " + landmarks_path(frame_path).string());
    out << nlohmann::json(preprocess::landmarks_to_flat(landmarks)).dump() << '\n';
}

preprocess::Frame load_frame(const Sample& sample) {
    const auto img = io::read_image(sample.resolved);
    preprocess::Frame f;
    f.width = img.width;
    f.height = img.height;
    f.rgb = img.rgb;
    const fs::path lm = landmarks_path(sample.resolved);
    if (fs::exists(lm)) {
        std::ifstream in(lm);
        try {
            f.landmarks = preprocess::landmarks_from_flat(nlohmann::json::parse(in).get<std::vector<float>>());
        } catch (const nlohmann::json::exception& e) {
            throw DataError(lm.string() + ": " + e.what());
        } catch (const DataError& e) {
            throw DataError(lm.string() + ": " + e.what());
        }
    }
    return f;
}

FoldPlan group_kfold(const std::vector<std::string>& subject_ids, std::size_t k, std::uint64_t seed) {
    if (k < 2) throw std::invalid_argument("group_kfold needs k >= 2");
    if (k > subject_ids.size()) {
        throw std::invalid_argument("group_kfold: k=" + std::to_string(k) + " exceeds " +
                                    std::to_string(subject_ids.size()) + " subjects");
    }
    if (std::set<std::string>(subject_ids.begin(), subject_ids.end()).size() != subject_ids.size()) {
        throw std::invalid_argument("group_kfold: duplicate subject ids");
    }
    std::vector<std::string> order = subject_ids;
    std::uint64_t state = seed;
    for (std::size_t i = order.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(nn::unit_uniform(state) * double(i));
        std::swap(order[i - 1], order[std::min(j, i - 1)]);
    }
    FoldPlan plan;
    plan.folds.resize(k);
    for (std::size_t i = 0; i < order.size(); ++i) {
        for (std::size_t f = 0; f < k; ++f) {
            (i % k == f ? plan.folds[f].val : plan.folds[f].train).push_back(order[i]);
        }
    }
    return plan;
}

void generate_synthetic(const fs::path& root, const SyntheticOptions& options) {
    if (options.subjects == 0 || options.samples_per_subject == 0) {
        throw std::invalid_argument("generate_synthetic needs at least one subject and one sample");
    }
    static const double kScreens[][2] = {{1920, 1080}, {1440, 900}, {1280, 800}};
    std::uint64_t state = options.seed;
    for (std::size_t s = 0; s < options.subjects; ++s) {
        char name[16];
        std::snprintf(name, sizeof name, "p%02zu", s);
        const fs::path dir = root / name;
        std::error_code ec;
        fs::create_directories(dir / "frames", ec);
        if (ec) throw DataError("cannot create " + (dir / "frames").string() + ": " + ec.message());

        const auto subject = synthetic::random_subject(state);
        const auto& screen = kScreens[s % 3];
        {
            std::ofstream scr(dir / "screen.txt");
            if (!scr) throw DataError("cannot write " + (dir / "screen.txt").string());
            scr << screen[0] << ' ' << screen[1] << '\n';
        }
        std::ofstream ann(dir / "annotations.csv");
        if (!ann) throw DataError("cannot write " + (dir / "annotations.csv").string());
        ann << "frame_path,x_px,y_px\n";
        for (std::size_t i = 0; i < options.samples_per_subject; ++i) {
            const double x = std::round(nn::unit_uniform(state) * screen[0]);
            const double y = std::round(nn::unit_uniform(state) * screen[1]);
            const std::uint64_t noise = static_cast<std::uint64_t>(nn::unit_uniform(state) * 9.0e15);
            auto frame = synthetic::render(subject, x / screen[0], y / screen[1], noise);
            char fname[32];
            std::snprintf(fname, sizeof fname, "frames/%04zu.png", i);
            io::write_png({frame.width, frame.height, frame.rgb}, dir / fname);
            write_landmarks(dir / fname, *frame.landmarks);
            ann << fname << ',' << x << ',' << y << '\n';
        }
    }
}

}  // namespace eyetheia::dataset
