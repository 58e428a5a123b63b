#include "mopatch/patchify.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mopatch/binio.hpp"

namespace mopatch {

void sample_chain_points(const float* frame_joints, int joint_count,
                         const std::vector<int>& chain, int n_points, float* out) {
    const int len = int(chain.size());
    if (len < 2) fail("sample_chain_points: chain needs at least 2 joints");
    if (n_points < 2) fail("sample_chain_points: need at least 2 sample points");
    for (int j : chain)
        if (j < 0 || j >= joint_count) fail("sample_chain_points: chain joint index out of range");

    for (int k = 0; k < n_points; ++k) {
        double t = double(k) * double(len - 1) / double(n_points - 1);
        int i0 = std::min(int(t), len - 2);
        float frac = float(t - double(i0));
        const float* a = frame_joints + chain[size_t(i0)] * 3;
        const float* b = frame_joints + chain[size_t(i0 + 1)] * 3;
        for (int c = 0; c < 3; ++c)
            out[k * 3 + c] = (1.0f - frac) * a[c] + frac * b[c];
    }
}

NormStats compute_norm_stats(const std::vector<MotionSequence>& dataset,
                             const BodyPartition& partition, int n,
                             const std::string& source) {
    if (dataset.empty()) fail("compute_norm_stats: empty dataset");
    const size_t cells = size_t(kBodyPartCount) * size_t(n) * 3;
    std::vector<double> sum(cells, 0.0), sumsq(cells, 0.0);
    std::vector<float> pts(size_t(n) * 3);

    // two passes: exact mean first, then centered second moments
    int64_t count = 0;
    for (const auto& seq : dataset) {
        for (int t = 0; t < seq.frames; ++t) {
            const float* frame = &seq.data[size_t(t) * size_t(seq.joints) * 3];
            for (int p = 0; p < kBodyPartCount; ++p) {
                sample_chain_points(frame, seq.joints, partition.chains[size_t(p)], n, pts.data());
                for (size_t i = 0; i < pts.size(); ++i)
                    sum[size_t(p) * size_t(n) * 3 + i] += double(pts[i]);
            }
            ++count;
        }
    }
    std::vector<double> mean(cells);
    for (size_t i = 0; i < cells; ++i) mean[i] = sum[i] / double(count);

    for (const auto& seq : dataset) {
        for (int t = 0; t < seq.frames; ++t) {
            const float* frame = &seq.data[size_t(t) * size_t(seq.joints) * 3];
            for (int p = 0; p < kBodyPartCount; ++p) {
                sample_chain_points(frame, seq.joints, partition.chains[size_t(p)], n, pts.data());
                for (size_t i = 0; i < pts.size(); ++i) {
                    double d = double(pts[i]) - mean[size_t(p) * size_t(n) * 3 + i];
                    sumsq[size_t(p) * size_t(n) * 3 + i] += d * d;
                }
            }
        }
    }

    NormStats stats;
    stats.n = n;
    stats.source = source;
    stats.mean.resize(cells);
    stats.stddev.resize(cells);
    for (size_t i = 0; i < cells; ++i) {
        stats.mean[i] = float(mean[i]);
        stats.stddev[i] = std::max(float(std::sqrt(sumsq[i] / double(count))), kStdFloor);
    }
    return stats;
}

PatchGrid build_patch_grid(const MotionSequence& seq, const BodyPartition& partition,
                           const NormStats& stats, int n, int t_max) {
    if (stats.n != n) fail("build_patch_grid: stats were fitted for N=" + std::to_string(stats.n) +
                           ", requested N=" + std::to_string(n));
    if (seq.frames < 1) fail("build_patch_grid: empty sequence");
    if (stats.mean.size() != size_t(kBodyPartCount) * size_t(n) * 3)
        fail("build_patch_grid: stats shape mismatch");

    const int t_valid = std::min(seq.frames, t_max);
    const int windows = (t_valid + n - 1) / n;

    PatchGrid grid;
    grid.windows = windows;
    grid.n = n;
    grid.valid_frames = t_valid;
    grid.data.resize(size_t(windows) * size_t(kBodyPartCount) * size_t(n) * size_t(n) * 3);

    std::vector<float> pts(size_t(n) * 3);
    for (int w = 0; w < windows; ++w) {
        for (int r = 0; r < n; ++r) {
            // rows past the end replicate the last valid frame
            int t = std::min(w * n + r, t_valid - 1);
            const float* frame = &seq.data[size_t(t) * size_t(seq.joints) * 3];
            for (int p = 0; p < kBodyPartCount; ++p) {
                sample_chain_points(frame, seq.joints, partition.chains[size_t(p)], n, pts.data());
                for (int c = 0; c < n; ++c) {
                    for (int d = 0; d < 3; ++d) {
                        float z = (pts[size_t(c) * 3 + size_t(d)] - stats.mean_at(p, c, d)) / stats.std_at(p, c, d);
                        grid.at(w, p, r, c, d) = z;
                    }
                }
            }
        }
    }
    return grid;
}

std::string render_patch_image(const PatchGrid& grid, int window) {
    if (window < 0 || window >= grid.windows)
        fail("render_patch_image: window " + std::to_string(window) + " out of range (W=" +
             std::to_string(grid.windows) + ")");
    const int n = grid.n;
    std::ostringstream os;
    os << "P6\n" << n * kBodyPartCount << " " << n << "\n255\n";
    for (int r = 0; r < n; ++r) {
        for (int p = 0; p < kBodyPartCount; ++p) {
            for (int c = 0; c < n; ++c) {
                for (int d = 0; d < 3; ++d) {
                    float v = (grid.at(window, p, r, c, d) + 3.0f) / 6.0f;
                    v = std::clamp(v, 0.0f, 1.0f);
                    os.put(char((unsigned char)(std::floor(v * 255.0f))));
                }
            }
        }
    }
    return os.str();
}

void write_norm_stats(const NormStats& stats, const std::string& path) {
    auto os = binio::open_out(path);
    os.write("MOPS", 4);
    binio::put_u32(os, uint32_t(stats.n));
    binio::put_f32s(os, stats.mean.data(), stats.mean.size());
    binio::put_f32s(os, stats.stddev.data(), stats.stddev.size());
    if (!os) fail("stats '" + path + "': write failed");
}

NormStats read_norm_stats(const std::string& path) {
    auto is = binio::open_in(path);
    binio::expect_magic(is, "MOPS", "stats '" + path + "'");
    NormStats stats;
    stats.n = int(binio::get_u32(is));
    if (stats.n < 2 || stats.n > 4096) fail("stats '" + path + "': implausible N");
    const size_t cells = size_t(kBodyPartCount) * size_t(stats.n) * 3;
    stats.mean.resize(cells);
    stats.stddev.resize(cells);
    binio::get_f32s(is, stats.mean.data(), cells);
    binio::get_f32s(is, stats.stddev.data(), cells);
    return stats;
}

void write_patch_grid(const PatchGrid& grid, const std::string& path) {
    auto os = binio::open_out(path);
    os.write("MOPG", 4);
    binio::put_u32(os, uint32_t(grid.windows));
    binio::put_u32(os, uint32_t(grid.n));
    binio::put_u32(os, uint32_t(grid.valid_frames));
    binio::put_f32s(os, grid.data.data(), grid.data.size());
    if (!os) fail("grid '" + path + "': write failed");
}

PatchGrid read_patch_grid(const std::string& path) {
    auto is = binio::open_in(path);
    binio::expect_magic(is, "MOPG", "grid '" + path + "'");
    PatchGrid grid;
    grid.windows = int(binio::get_u32(is));
    grid.n = int(binio::get_u32(is));
    grid.valid_frames = int(binio::get_u32(is));
    if (grid.windows < 1 || grid.n < 2) fail("grid '" + path + "': implausible header");
    grid.data.resize(size_t(grid.windows) * size_t(kBodyPartCount) * size_t(grid.n) * size_t(grid.n) * 3);
    binio::get_f32s(is, grid.data.data(), grid.data.size());
    return grid;
}

}  // namespace mopatch
