#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "eyetheia/calibration.hpp"
#include "eyetheia/cli.hpp"
#include "eyetheia/dataset.hpp"
#include "eyetheia/dotprobe.hpp"
#include "eyetheia/errors.hpp"
#include "eyetheia/geometry.hpp"
#include "eyetheia/metrics.hpp"
#include "eyetheia/model/selfcheck.hpp"
#include "eyetheia/model/weights.hpp"
#include "eyetheia/server.hpp"
#include "eyetheia/training.hpp"
#include "json.hpp"

namespace eyetheia::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

fs::path out_file(const fs::path& dir, const char* name) {
    fs::create_directories(dir);
    return dir / name;
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot write " + path.string());
    f << text;
}

ScreenGeometry parse_screen(const std::string& text) {
    double w = 0, h = 0;
    char x = 0;
    std::istringstream in(text);
    if (!(in >> w >> x >> h) || (x != 'x' && x != 'X') || !in.eof()) {
        throw CLI::ValidationError("--screen", "expected WxH, got '" + text + "'");
    }
    return ScreenGeometry::make(w, h);
}

model::ModelConfig config_for(const std::string& profile, const std::string& space) {
    return model::ModelConfig::for_profile(model::profile_from_string(profile), space_from_string(space));
}

preprocess::MeanImages means_for(const std::string& path, const model::ModelConfig& cfg) {
    return path.empty() ? preprocess::MeanImages::constant(cfg) : preprocess::load_means(path, cfg);
}

model::GazeNet load_model(const fs::path& path, const std::string& profile) {
    const auto bytes = model::read_file_bytes(path);
    return model::load_weights(bytes, model::resolve_config(bytes, model::profile_from_string(profile)));
}

std::vector<dataset::SubjectRecord> load_subjects(const fs::path& root) {
    auto subjects = dataset::load_dataset(root);
    if (subjects.empty()) throw DataError("no subjects under " + root.string());
    return subjects;
}

std::vector<train::Example> select(const std::vector<train::Example>& all, const std::vector<std::string>& ids) {
    const std::set<std::string> keep(ids.begin(), ids.end());
    std::vector<train::Example> out;
    for (const auto& e : all) {
        if (keep.count(e.subject_id)) out.push_back(e);
    }
    return out;
}

// Pixel-space metrics of a model over a set.
struct PixelMetrics {
    std::size_t n = 0;
    double rmse2d = 0, mean_l2 = 0, diagonal_pct = 0;
};

PixelMetrics pixel_metrics(const model::GazeNet& net, std::span<const train::Example> set) {
    std::vector<metrics::Point2> preds, gts;
    std::vector<ScreenGeometry> screens;
    const Space space = net.config().output_space;
    for (const auto& e : set) {
        const auto p = geometry::to_px(net.predict(e.bundle), e.screen);
        const auto g = geometry::to_px({e.target_x, e.target_y, space, std::nullopt, true}, e.screen);
        preds.push_back({p.x, p.y});
        gts.push_back({g.x, g.y});
        screens.push_back(e.screen);
    }
    return {set.size(), metrics::rmse2d(preds, gts), metrics::mean_l2(preds, gts),
            metrics::l2_over_diagonal(preds, gts, screens)};
}

struct ModelArgs {
    std::string profile = "tiny";
    std::string space = "normalized_screen";
    std::string means;

    void add(CLI::App* app, bool with_space) {
        app->add_option("--profile", profile, "Model profile")->check(CLI::IsMember({"tiny", "full"}));
        if (with_space) {
            app->add_option("--space", space, "Model output space")
                ->check(CLI::IsMember({"normalized_screen", "camera_cm"}));
        }
        app->add_option("--means", means, "Mean-image container (default: constant 0.5)");
    }
};

// ---------------------------------------------------------------------------------------------- train

struct TrainArgs {
    fs::path dataset, out;
    ModelArgs model;
    std::string loss = "smooth_l1";
    double beta = 0.8, lr = 1e-4;
    std::size_t epochs = 15, folds = 5, batch = 8;
    std::uint64_t seed = 0;
};

int cmd_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
    const auto cfg = config_for(a.model.profile, a.model.space);
    const auto subjects = load_subjects(a.dataset);
    const auto means = means_for(a.model.means, cfg);
    const auto set = train::build_examples(subjects, means, cfg);
    if (set.skipped_no_face) err << "skipped " << set.skipped_no_face << " frames without a face\n";

    std::vector<std::string> ids;
    for (const auto& s : subjects) ids.push_back(s.subject_id);
    dataset::FoldPlan plan;
    if (a.folds == 1) {
        plan.folds.push_back({ids, {}});
    } else {
        plan = dataset::group_kfold(ids, a.folds, a.seed);
    }

    train::TrainConfig tc;
    tc.loss = {a.loss == "euclidean" ? nn::LossKind::EuclideanMSE : nn::LossKind::SmoothL1, a.beta};
    tc.adam.lr = a.lr;
    tc.epochs = a.epochs;
    tc.batch_size = a.batch;

    std::ostringstream csv;
    csv << "fold,epoch,train_loss,val_loss\n";
    json manifest{{"profile", a.model.profile}, {"output_space", a.model.space}, {"loss", a.loss},
                  {"beta", a.beta},             {"lr", a.lr},                   {"epochs", a.epochs},
                  {"batch_size", a.batch},      {"seed", a.seed},               {"folds", json::array()}};
    for (std::size_t f = 0; f < plan.folds.size(); ++f) {
        const auto& fold = plan.folds[f];
        const auto train_set = select(set.examples, fold.train);
        const auto val_set = select(set.examples, fold.val);
        if (train_set.empty()) throw DataError("fold " + std::to_string(f) + " has no usable training frames");
        model::GazeNet net(cfg, a.seed + f);
        tc.seed = a.seed + f;
        train::fit(net, train_set, val_set, tc, [&](const train::EpochStats& s) {
            csv << f << ',' << s.epoch << ',' << num(s.train_loss) << ',' << (s.val_loss ? num(*s.val_loss) : "")
                << '\n';
        });
        const std::string name = "fold_" + std::to_string(f) + ".eyth";
        model::save_weights_file(net, out_file(a.out, name.c_str()));
        manifest["folds"].push_back({{"index", f}, {"weights", name}, {"train", fold.train}, {"val", fold.val}});
    }
    write_text(a.out / "loss.csv", csv.str());
    write_text(a.out / "run.json", manifest.dump(2) + "\n");
    out << csv.str();
    return kOk;
}

// ----------------------------------------------------------------------------------------------- eval

struct EvalArgs {
    fs::path dataset, run, weights, out;
    ModelArgs model;
};

int cmd_eval(const EvalArgs& a, std::ostream& out, std::ostream& err) {
    const auto subjects = load_subjects(a.dataset);
    std::vector<std::string> all_ids;
    for (const auto& s : subjects) all_ids.push_back(s.subject_id);

    struct Job {
        std::string label;
        fs::path weights;
        std::vector<std::string> subjects;
    };
    std::vector<Job> jobs;
    if (!a.run.empty()) {
        std::ifstream in(a.run / "run.json");
        if (!in) throw DataError("no run.json in " + a.run.string());
        json manifest;
        try {
            manifest = json::parse(in);
            for (const auto& f : manifest.at("folds")) {
                jobs.push_back({std::to_string(f.at("index").get<std::size_t>()), a.run / f.at("weights").get<std::string>(),
                                f.at("val").get<std::vector<std::string>>()});
            }
        } catch (const json::exception& e) {
            throw DataError((a.run / "run.json").string() + ": " + e.what());
        }
    } else {
        jobs.push_back({"all", a.weights, all_ids});
    }

    std::ostringstream csv;
    csv << "fold,n,rmse2d_px,mean_l2_px,diagonal_pct\n";
    PixelMetrics mean;
    for (const auto& job : jobs) {
        if (job.subjects.empty()) throw DataError("fold " + job.label + " has no validation subjects");
        for (const auto& id : job.subjects) {
            if (std::find(all_ids.begin(), all_ids.end(), id) == all_ids.end()) {
                throw DataError("fold " + job.label + " names subject '" + id + "' missing from the dataset");
            }
        }
        const auto net = load_model(job.weights, a.model.profile);
        const auto means = means_for(a.model.means, net.config());
        std::vector<dataset::SubjectRecord> fold_subjects;
        for (const auto& s : subjects) {
            if (std::find(job.subjects.begin(), job.subjects.end(), s.subject_id) != job.subjects.end()) {
                fold_subjects.push_back(s);
            }
        }
        const auto set = train::build_examples(fold_subjects, means, net.config());
        if (set.examples.empty()) throw DataError("fold " + job.label + " has no frames with a face");
        if (set.skipped_no_face) err << "fold " << job.label << ": skipped " << set.skipped_no_face << " faceless frames\n";
        const auto m = pixel_metrics(net, set.examples);
        csv << job.label << ',' << m.n << ',' << num(m.rmse2d) << ',' << num(m.mean_l2) << ',' << num(m.diagonal_pct)
            << '\n';
        mean.n += m.n;
        mean.rmse2d += m.rmse2d / jobs.size();
        mean.mean_l2 += m.mean_l2 / jobs.size();
        mean.diagonal_pct += m.diagonal_pct / jobs.size();
    }
    if (jobs.size() > 1) {
        csv << "mean," << mean.n << ',' << num(mean.rmse2d) << ',' << num(mean.mean_l2) << ','
            << num(mean.diagonal_pct) << '\n';
    }
    if (!a.out.empty()) write_text(a.out, csv.str());
    out << csv.str();
    return kOk;
}

// ----------------------------------------------------------------------------------------- gridsearch

struct GridArgs {
    fs::path dataset, curves;
    ModelArgs model;
    std::vector<double> betas{0.01, 0.05, 0.1, 0.2, 0.4, 0.6, 0.8, 1.0};
    double lr = 1e-4;
    std::size_t epochs = 15, folds = 5, batch = 8;
    std::uint64_t seed = 0;
};

int cmd_gridsearch(const GridArgs& a, std::ostream& out, std::ostream& err) {
    const auto cfg = config_for(a.model.profile, a.model.space);
    const auto subjects = load_subjects(a.dataset);
    const auto set = train::build_examples(subjects, means_for(a.model.means, cfg), cfg);
    std::vector<std::string> ids;
    for (const auto& s : subjects) ids.push_back(s.subject_id);
    const auto fold = dataset::group_kfold(ids, a.folds, a.seed).folds.front();
    const auto train_set = select(set.examples, fold.train);
    const auto val_set = select(set.examples, fold.val);
    if (train_set.empty() || val_set.empty()) throw DataError("grid search split has an empty side");

    // Curves hold the validation Euclidean loss so that betas are compared on one scale.
    const nn::LossConfig val_loss{nn::LossKind::EuclideanMSE, 1.0};
    const auto train_eval = [&](double beta) {
        model::GazeNet net(cfg, a.seed);
        train::TrainConfig tc;
        tc.loss = {nn::LossKind::SmoothL1, beta};
        tc.adam.lr = a.lr;
        tc.epochs = a.epochs;
        tc.batch_size = a.batch;
        tc.seed = a.seed;
        std::vector<double> curve;
        try {
            train::fit(net, train_set, {}, tc, [&](const train::EpochStats&) {
                curve.push_back(train::evaluate_loss(net, val_set, val_loss));
            });
        } catch (const NumericError&) {
            curve.resize(a.epochs, std::numeric_limits<double>::quiet_NaN());
        }
        return curve;
    };
    const auto result = metrics::beta_grid_search(train_eval, a.betas);

    std::ostringstream curves;
    curves << "beta,epoch,val_loss\n";
    for (const auto& [beta, curve] : result.curves) {
        for (std::size_t e = 0; e < curve.size(); ++e) curves << num(beta) << ',' << e + 1 << ',' << num(curve[e]) << '\n';
    }
    if (!a.curves.empty()) write_text(a.curves, curves.str());

    out << "beta,best_val_loss,status\n";
    for (const auto& [beta, curve] : result.curves) {
        out << num(beta) << ',' << num(*std::min_element(curve.begin(), curve.end())) << ','
            << (beta == result.best_beta ? "best" : "") << '\n';
    }
    for (double beta : result.excluded) {
        out << num(beta) << ",,excluded\n";
        err << "beta " << num(beta) << " excluded: non-finite validation loss\n";
    }
    return kOk;
}

// ---------------------------------------------------------------------------------- calibrate replay

struct CalibrateArgs {
    fs::path dataset, weights, out;
    ModelArgs model;
    std::string subject;
    std::size_t samples = 13;
    double lr = 1e-4;
    std::size_t epochs = 100;
};

int cmd_calibrate(const CalibrateArgs& a, std::ostream& out, std::ostream& err) {
    auto net = load_model(a.weights, a.model.profile);
    const auto subjects = load_subjects(a.dataset);
    const auto it = std::find_if(subjects.begin(), subjects.end(),
                                 [&](const auto& s) { return s.subject_id == a.subject; });
    if (it == subjects.end()) throw DataError("no subject '" + a.subject + "' in " + a.dataset.string());

    // The recorded frame nearest each protocol target stands in for that target's capture.
    std::vector<bool> used(it->samples.size(), false);
    std::vector<calibration::RawSample> raw;
    for (const auto& [tx, ty] : calibration::default_targets(it->screen)) {
        if (raw.size() == a.samples) break;
        std::size_t best = it->samples.size();
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < it->samples.size(); ++i) {
            const double d = std::hypot(it->samples[i].x_px - tx, it->samples[i].y_px - ty);
            if (!used[i] && d < best_d) {
                best_d = d;
                best = i;
            }
        }
        if (best == it->samples.size()) break;
        used[best] = true;
        const auto& s = it->samples[best];
        raw.push_back({dataset::load_frame(s), s.x_px, s.y_px});
    }

    const auto means = means_for(a.model.means, net.config());
    const auto samples = calibration::assemble(raw, it->screen, means, net.config());
    calibration::FineTuneConfig ft;
    ft.lr = a.lr;
    ft.epochs = a.epochs;
    const auto report = calibration::fine_tune(net, samples, it->screen, ft);

    out << "target_x_px,target_y_px,before_x_px,before_y_px,after_x_px,after_y_px,error_before_px,error_after_px\n";
    for (const auto& r : report.residuals) {
        out << num(r.target_x_px) << ',' << num(r.target_y_px) << ',' << num(r.before_x_px) << ','
            << num(r.before_y_px) << ',' << num(r.after_x_px) << ',' << num(r.after_y_px) << ','
            << num(r.error_before_px) << ',' << num(r.error_after_px) << '\n';
    }
    err << "calibrated on " << report.n_samples << " samples: mean error " << num(report.mean_error_before_px)
        << " px -> " << num(report.mean_error_after_px) << " px\n";
    if (!a.out.empty()) model::save_weights_file(net, a.out);
    return kOk;
}

// -------------------------------------------------------------------------------------------- analyze

struct AnalyzeArgs {
    fs::path trials, gaze_a, gaze_b, out;
    std::string screen = "1920x1080";
    std::string format = "json";
};

std::string source_of(const std::vector<metrics::GazeLogRecord>& log, const std::string& fallback) {
    return log.empty() || log.front().source.empty() ? fallback : log.front().source;
}

int cmd_analyze(const AnalyzeArgs& a, std::ostream& out, std::ostream&) {
    const auto screen = parse_screen(a.screen);
    const auto records = dotprobe::read_trial_log(a.trials);
    const auto log_a = metrics::read_gaze_log(a.gaze_a);
    const auto series_a = dotprobe::align_gaze(records, log_a, screen, source_of(log_a, "A"));
    std::optional<metrics::GazeSeries> series_b;
    if (!a.gaze_b.empty()) {
        const auto log_b = metrics::read_gaze_log(a.gaze_b);
        series_b = dotprobe::align_gaze(records, log_b, screen, source_of(log_b, "B"));
    }
    const auto report = dotprobe::analyze_session(series_a, series_b ? &*series_b : nullptr, records);
    const auto text = dotprobe::report_json(report);
    if (!a.out.empty()) write_text(a.out, text + "\n");
    if (a.format == "json") {
        out << text << '\n';
        return kOk;
    }
    out << "source,metric,value\n";
    if (report.side_agreement) out << "," << "side_agreement_pct," << num(100.0 * *report.side_agreement) << '\n';
    for (const auto& s : report.sources) {
        for (const auto& [m, acc] : s.roi_accuracy) out << s.source << ",roi_accuracy_m" << num(m) << ',' << num(acc) << '\n';
        out << s.source << ",jitter_px," << (s.jitter_px ? num(*s.jitter_px) : "") << '\n';
    }
    return kOk;
}

// ------------------------------------------------------------------------------------------ gradcheck

int cmd_gradcheck(const model::SelfCheckOptions& opt, std::ostream& out, std::ostream& err) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto report = model::gradcheck_tiny(opt);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out << "check,max_relative_error,checked,skipped_at_kinks\n";
    for (const auto& r : report.rows) {
        out << r.name << ',' << num(r.max_relative_error) << ',' << r.checked << ',' << r.skipped_at_kinks << '\n';
    }
    err << (report.passed() ? "PASS" : "FAIL") << ": max relative error " << num(report.max_relative_error)
        << (report.passed() ? " < " : " >= ") << num(report.threshold) << " (" << num(secs) << " s)\n";
    return report.passed() ? kOk : kInternal;
}

// ---------------------------------------------------------------------------------------------- serve

struct ServeArgs {
    fs::path config;
    std::optional<std::string> host, weights, means, profile;
    std::optional<int> port;
};

int cmd_serve(const ServeArgs& a, std::ostream& out, std::ostream& err) {
    server::ServerConfig cfg = a.config.empty() ? server::ServerConfig{} : server::ServerConfig::from_file(a.config);
    cfg.apply_env();
    if (a.host) cfg.host = *a.host;
    if (a.port) cfg.port = *a.port;
    if (a.weights) cfg.weights = *a.weights;
    if (a.means) cfg.means = *a.means;
    if (a.profile) cfg.profile = model::profile_from_string(*a.profile);

    const auto service = server::Service::from_config(cfg);

    // Server threads inherit the blocked mask, so only sigwait below sees SIGINT/SIGTERM.
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    server::HttpServer http(*service, cfg);
    const int port = http.start();
    out << "listening on http://" << cfg.host << ':' << port << " (profile "
        << model::to_string(service->base_model().config().profile) << ")" << std::endl;
    int sig = 0;
    sigwait(&signals, &sig);
    err << "received signal " << sig << ", shutting down\n";
    http.stop();
    out << "stopped" << std::endl;
    return kOk;
}

// ----------------------------------------------------------------------------------------- synthetic

int cmd_generate(const fs::path& root, const dataset::SyntheticOptions& opt, std::ostream& out) {
    dataset::generate_synthetic(root, opt);
    out << "subject,samples\n";
    for (const auto& s : dataset::load_dataset(root)) out << s.subject_id << ',' << s.samples.size() << '\n';
    return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Appearance-based gaze estimation: training, evaluation, calibration, analysis and serving"};
    app.name("eyetheia");
    app.require_subcommand(1);

    TrainArgs train_args;
    auto* train = app.add_subcommand("train", "Subject-disjoint k-fold training; writes weights per fold and loss.csv");
    train->add_option("--dataset", train_args.dataset, "Dataset root")->required();
    train->add_option("--out", train_args.out, "Output directory")->required();
    train_args.model.add(train, true);
    train->add_option("--loss", train_args.loss)->check(CLI::IsMember({"smooth_l1", "euclidean"}));
    train->add_option("--beta", train_args.beta, "Smooth-L1 transition")->check(CLI::PositiveNumber);
    train->add_option("--lr", train_args.lr)->check(CLI::NonNegativeNumber);
    train->add_option("--epochs", train_args.epochs)->check(CLI::PositiveNumber);
    train->add_option("--folds", train_args.folds, "k for GroupKFold; 1 trains on every subject")
        ->check(CLI::PositiveNumber);
    train->add_option("--batch-size", train_args.batch)->check(CLI::PositiveNumber);
    train->add_option("--seed", train_args.seed);

    EvalArgs eval_args;
    auto* eval = app.add_subcommand("eval", "rmse2d, mean L2 and diagonal % per fold");
    eval->add_option("--dataset", eval_args.dataset)->required();
    auto* run_opt = eval->add_option("--run", eval_args.run, "Training output directory (validates each fold)");
    auto* w_opt = eval->add_option("--weights", eval_args.weights, "Single weights file (evaluates every subject)");
    run_opt->excludes(w_opt);
    eval->add_option("--out", eval_args.out, "Also write the CSV here");
    eval_args.model.add(eval, false);

    GridArgs grid_args;
    auto* grid = app.add_subcommand("gridsearch", "Smooth-L1 beta grid search on the first subject-disjoint fold");
    grid->add_option("--dataset", grid_args.dataset)->required();
    grid->add_option("--betas", grid_args.betas, "Comma-separated betas")->delimiter(',')->check(CLI::PositiveNumber);
    grid->add_option("--lr", grid_args.lr)->check(CLI::NonNegativeNumber);
    grid->add_option("--epochs", grid_args.epochs)->check(CLI::PositiveNumber);
    grid->add_option("--folds", grid_args.folds)->check(CLI::Range(2, 1000));
    grid->add_option("--batch-size", grid_args.batch)->check(CLI::PositiveNumber);
    grid->add_option("--seed", grid_args.seed);
    grid->add_option("--curves", grid_args.curves, "Per-beta, per-epoch validation loss CSV");
    grid_args.model.add(grid, true);

    CalibrateArgs cal_args;
    auto* cal = app.add_subcommand("calibrate", "Replay the 13-target calibration on a recorded subject");
    cal->add_option("--dataset", cal_args.dataset)->required();
    cal->add_option("--weights", cal_args.weights)->required();
    cal->add_option("--subject", cal_args.subject)->required();
    cal->add_option("--samples", cal_args.samples)->check(CLI::Range(1, 13));
    cal->add_option("--lr", cal_args.lr)->check(CLI::NonNegativeNumber);
    cal->add_option("--epochs", cal_args.epochs)->check(CLI::PositiveNumber);
    cal->add_option("--out", cal_args.out, "Write the calibrated weights here");
    cal_args.model.add(cal, false);

    AnalyzeArgs an_args;
    auto* an = app.add_subcommand("analyze", "Dot-probe session report from a trial log and one or two gaze logs");
    an->add_option("--trials", an_args.trials)->required()->check(CLI::ExistingFile);
    an->add_option("--gaze-a", an_args.gaze_a)->required()->check(CLI::ExistingFile);
    an->add_option("--gaze-b", an_args.gaze_b)->check(CLI::ExistingFile);
    an->add_option("--screen", an_args.screen, "WxH in pixels");
    an->add_option("--format", an_args.format)->check(CLI::IsMember({"json", "csv"}));
    an->add_option("--out", an_args.out, "Also write the JSON report here");

    model::SelfCheckOptions gc_opt;
    auto* gc = app.add_subcommand("gradcheck", "Finite-difference check of every layer kind, loss and tiny-net tensor");
    gc->add_option("--seed", gc_opt.seed);
    gc->add_flag("--fault", gc_opt.inject_fault, "Corrupt analytic gradients (the check must fail)");

    ServeArgs serve_args;
    auto* serve = app.add_subcommand("serve", "Run the HTTP service until SIGINT/SIGTERM");
    serve->add_option("--config", serve_args.config, "JSON config file")->check(CLI::ExistingFile);
    serve->add_option("--host", serve_args.host);
    serve->add_option("--port", serve_args.port, "0 picks a free port")->check(CLI::Range(0, 65535));
    serve->add_option("--weights", serve_args.weights);
    serve->add_option("--means", serve_args.means);
    serve->add_option("--profile", serve_args.profile)->check(CLI::IsMember({"tiny", "full"}));

    fs::path gen_root;
    dataset::SyntheticOptions gen_opt;
    auto* gen = app.add_subcommand("generate-synthetic", "Write a rendered synthetic dataset");
    gen->add_option("--out", gen_root)->required();
    gen->add_option("--subjects", gen_opt.subjects)->check(CLI::PositiveNumber);
    gen->add_option("--samples", gen_opt.samples_per_subject)->check(CLI::PositiveNumber);
    gen->add_option("--seed", gen_opt.seed);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kUsage;
    }

    try {
        if (*train) return cmd_train(train_args, out, err);
        if (*eval) {
            if (eval_args.run.empty() && eval_args.weights.empty()) {
                err << "eval: one of --run or --weights is required\n";
                return kUsage;
            }
            return cmd_eval(eval_args, out, err);
        }
        if (*grid) return cmd_gridsearch(grid_args, out, err);
        if (*cal) return cmd_calibrate(cal_args, out, err);
        if (*an) return cmd_analyze(an_args, out, err);
        if (*gc) return cmd_gradcheck(gc_opt, out, err);
        if (*serve) return cmd_serve(serve_args, out, err);
        if (*gen) return cmd_generate(gen_root, gen_opt, out);
    } catch (const CLI::ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << '\n';
        return kDataError;
    } catch (const NoFaceError& e) {
        err << "data error: " << e.what() << '\n';
        return kDataError;
    } catch (const calibration::CalibrationAborted& e) {
        err << "calibration aborted: " << e.what() << '\n';
        return kDataError;
    } catch (const metrics::UndefinedResult& e) {
        err << "data error: " << e.what() << '\n';
        return kDataError;
    } catch (const std::invalid_argument& e) {
        err << "data error: " << e.what() << '\n';
        return kDataError;
    } catch (const fs::filesystem_error& e) {
        err << "data error: " << e.what() << '\n';
        return kDataError;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return kInternal;
    }
    return kUsage;
}

}  // namespace eyetheia::cli
