#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "eyetheia/gaze_point.hpp"
#include "eyetheia/preprocess.hpp"

// Per-subject gaze datasets on disk:
//   root/pXX/annotations.csv   frame_path,x_px,y_px   (frame_path relative to the subject dir)
//   root/pXX/screen.txt        "W H"
//   root/pXX/frames/*.png
// Landmarks for a frame live next to it in "<frame>.landmarks.json" (flat array of 956 floats);
// a frame without that file has no detected face.
namespace eyetheia::dataset {

struct Sample {
    std::string frame_path;            // as written in annotations.csv
    std::filesystem::path resolved;    // absolute or root-relative path to the image
    double x_px = 0;
    double y_px = 0;
};

struct SubjectRecord {
    std::string subject_id;
    ScreenGeometry screen;
    std::vector<Sample> samples;
};

// Subjects in directory-name order. An empty or missing root gives an empty list.
// Throws DataError naming subject and row for missing files, malformed rows and off-screen targets.
std::vector<SubjectRecord> load_dataset(const std::filesystem::path& root);

// x / W, y / H for every sample, tagged NormalizedScreen.
std::vector<GazePoint> normalize_targets(const SubjectRecord& record);

// Image plus sidecar landmarks, if any.
preprocess::Frame load_frame(const Sample& sample);
std::filesystem::path landmarks_path(const std::filesystem::path& frame_path);
void write_landmarks(const std::filesystem::path& frame_path, const std::vector<preprocess::Landmark>& landmarks);

struct Fold {
    std::vector<std::string> train;
    std::vector<std::string> val;
};

struct FoldPlan {
    std::vector<Fold> folds;
};

// Subjects shuffled by `seed`, then dealt round-robin into k validation groups.
// Throws std::invalid_argument for k < 2, k > subjects, or duplicate ids.
FoldPlan group_kfold(const std::vector<std::string>& subject_ids, std::size_t k = 5, std::uint64_t seed = 0);

struct SyntheticOptions {
    std::size_t subjects = 3;
    std::size_t samples_per_subject = 20;
    std::uint64_t seed = 1;
};

// Writes a dataset of rendered synthetic subjects (p00, p01, ...) under root.
void generate_synthetic(const std::filesystem::path& root, const SyntheticOptions& options);

}  // namespace eyetheia::dataset
