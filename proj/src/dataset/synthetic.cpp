#include "eyetheia/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "eyetheia/nn/params.hpp"

namespace eyetheia::synthetic {

namespace {

double uniform(std::uint64_t& s, double lo, double hi) { return lo + (hi - lo) * nn::unit_uniform(s); }

struct Ellipse {
    double cx, cy, rx, ry;
    bool contains(double x, double y) const {
        const double dx = (x - cx) / rx, dy = (y - cy) / ry;
        return dx * dx + dy * dy <= 1.0;
    }
};

void place_ring(std::vector<preprocess::Landmark>& lm, const std::vector<int>& idx, const Ellipse& e, double W,
                double H) {
    for (std::size_t k = 0; k < idx.size(); ++k) {
        const double a = 2.0 * std::numbers::pi * double(k) / double(idx.size());
        lm[idx[k]] = {static_cast<float>((e.cx + e.rx * std::cos(a)) / W),
                      static_cast<float>((e.cy + e.ry * std::sin(a)) / H)};
    }
}

}  // namespace

Subject random_subject(std::uint64_t& state) {
    Subject s;
    s.face_cx = uniform(state, 0.4, 0.6);
    s.face_cy = uniform(state, 0.42, 0.58);
    s.scale = uniform(state, 0.9, 1.1);
    s.bias_x = uniform(state, -0.08, 0.08);
    s.bias_y = uniform(state, -0.08, 0.08);
    s.skin = static_cast<float>(uniform(state, 140, 200));
    return s;
}

preprocess::Frame render(const Subject& subject, double u, double v, std::uint64_t noise_seed, FrameSize size) {
    const double W = double(size.width), H = double(size.height);
    std::uint64_t rng = noise_seed * 0x9E3779B97F4A7C15ULL + 0x632BE59BD9B4E5F5ULL;
    const double k = subject.scale * W / 160.0;
    const double cx = subject.face_cx * W + uniform(rng, -1.0, 1.0);
    const double cy = subject.face_cy * H + uniform(rng, -1.0, 1.0);

    const Ellipse face{cx, cy, 34 * k, 44 * k};
    // image-right eye carries the left-eye contour indices (subject's left)
    const Ellipse left_eye{cx + 15 * k, cy - 10 * k, 8 * k, 4 * k};
    const Ellipse right_eye{cx - 15 * k, cy - 10 * k, 8 * k, 4 * k};
    const double gx = std::clamp(u - 0.5 + subject.bias_x, -0.6, 0.6);
    const double gy = std::clamp(v - 0.5 + subject.bias_y, -0.6, 0.6);
    const double sigma = 1.3 * k;

    preprocess::Frame f;
    f.width = size.width;
    f.height = size.height;
    f.rgb = nn::Tensor({3, size.height, size.width});
    const std::size_t plane = size.width * size.height;
    const float tint[3] = {1.0f, 0.85f, 0.75f};
    for (std::size_t y = 0; y < size.height; ++y) {
        for (std::size_t x = 0; x < size.width; ++x) {
            const double px = double(x) + 0.5, py = double(y) + 0.5;
            double value = 60.0;
            bool skin = false;
            if (face.contains(px, py)) {
                value = subject.skin;
                skin = true;
            }
            for (const Ellipse* e : {&left_eye, &right_eye}) {
                const Ellipse socket{e->cx, e->cy, e->rx * 1.3, e->ry * 1.7};
                if (socket.contains(px, py)) {
                    value = 45.0;
                    skin = false;
                }
                const double bx = e->cx + gx * 1.4 * e->rx, by = e->cy + gy * 1.4 * e->ry;
                const double d2 = (px - bx) * (px - bx) + (py - by) * (py - by);
                value += 210.0 * std::exp(-d2 / (2 * sigma * sigma));
            }
            const double noise = uniform(rng, -6.0, 6.0);
            for (std::size_t c = 0; c < 3; ++c) {
                const double t = skin ? tint[c] : 1.0;
                f.rgb[c * plane + y * size.width + x] = static_cast<float>(std::clamp(std::round(value * t + noise), 0.0, 255.0));
            }
        }
    }

    const auto idx = preprocess::IndexConfig::face_mesh_default();
    std::vector<preprocess::Landmark> lm(preprocess::kLandmarkCount,
                                         {static_cast<float>(cx / W), static_cast<float>(cy / H)});
    place_ring(lm, idx.face, face, W, H);
    place_ring(lm, idx.left_eye, left_eye, W, H);
    place_ring(lm, idx.right_eye, right_eye, W, H);
    f.landmarks = std::move(lm);
    return f;
}

preprocess::Frame render_faceless(const Subject& subject, double u, double v, std::uint64_t noise_seed,
                                  FrameSize size) {
    auto f = render(subject, u, v, noise_seed, size);
    f.landmarks.reset();
    return f;
}

}  // namespace eyetheia::synthetic
