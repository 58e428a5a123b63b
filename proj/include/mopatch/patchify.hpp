#pragma once

#include <string>
#include <vector>

#include "mopatch/motion.hpp"
#include "mopatch/skeleton.hpp"

namespace mopatch {

inline constexpr float kStdFloor = 1e-6f;

// Per-(part, sample point, coordinate) z-score statistics, fitted on a
// training split. Persisted as a MOPS blob.
struct NormStats {
    int n = 0;                 // patch size the stats were fitted for
    std::string source;        // dataset identifier
    std::vector<float> mean;   // 5 x n x 3
    std::vector<float> stddev; // 5 x n x 3, floored at kStdFloor

    float mean_at(int part, int point, int coord) const { return mean[size_t((part * n + point) * 3 + coord)]; }
    float std_at(int part, int point, int coord) const { return stddev[size_t((part * n + point) * 3 + coord)]; }
};

// W windows x 5 parts of NxNx3 z-scored patches. Rows are frames, columns
// are chain sample points, channels are xyz.
struct PatchGrid {
    int windows = 0;       // W
    int n = 0;             // patch size
    int valid_frames = 0;  // frames before last-row padding
    std::vector<float> data;  // [w][part][row][col][coord]

    int patch_count() const { return windows * kBodyPartCount; }
    float& at(int w, int part, int row, int col, int coord) {
        return data[size_t(((((w * kBodyPartCount) + part) * n + row) * n + col) * 3 + coord)];
    }
    float at(int w, int part, int row, int col, int coord) const {
        return data[size_t(((((w * kBodyPartCount) + part) * n + row) * n + col) * 3 + coord)];
    }
    // flattened patch vector (n*n*3) for one (window, part), in (row, col,
    // coord) order; this is the token order fed to the encoder
    const float* patch(int w, int part) const {
        return &data[size_t(((w * kBodyPartCount) + part)) * size_t(n) * size_t(n) * 3];
    }
};

// Samples n_points along the polyline through the chain's joints, uniform in
// joint-index space. frame_joints points at a J x 3 frame slice.
void sample_chain_points(const float* frame_joints, int joint_count,
                         const std::vector<int>& chain, int n_points, float* out);

NormStats compute_norm_stats(const std::vector<MotionSequence>& dataset,
                             const BodyPartition& partition, int n,
                             const std::string& source);

// Caps at t_max frames, pads the tail window by repeating the last frame,
// samples every part chain and z-scores with `stats`.
PatchGrid build_patch_grid(const MotionSequence& seq, const BodyPartition& partition,
                           const NormStats& stats, int n, int t_max);

// One window rendered as a binary PPM (P6), the 5 part patches side by side.
// Channel map: byte = floor(clamp((z+3)/6, 0, 1) * 255).
std::string render_patch_image(const PatchGrid& grid, int window);

void write_norm_stats(const NormStats& stats, const std::string& path);
NormStats read_norm_stats(const std::string& path);

// Grid container format (MOPG), used by the patchify CLI command.
void write_patch_grid(const PatchGrid& grid, const std::string& path);
PatchGrid read_patch_grid(const std::string& path);

}  // namespace mopatch
