#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mopatch/skeleton.hpp"

namespace mopatch {

// T x J x 3 joint positions in meters. Coordinates are right-handed with
// x = lateral (negated by mirroring), y = up, z = forward.
struct MotionSequence {
    std::string id;
    std::string skeleton_name;
    int frames = 0;   // T
    int joints = 0;   // J
    float fps = 0.f;
    std::vector<float> data;  // frame-major, joint-major, xyz

    float& at(int t, int j, int c) { return data[size_t((t * joints + j) * 3 + c)]; }
    float at(int t, int j, int c) const { return data[size_t((t * joints + j) * 3 + c)]; }

    void validate() const;
};

struct TextSample {
    std::string caption;
};

struct ManifestEntry {
    std::string id;
    std::string motion_path;          // relative to the manifest file
    std::string skeleton_name;
    std::vector<TextSample> captions;
    std::string split;                // train | val | test
    std::optional<std::string> mirror_of;
    std::optional<std::string> label; // optional action label for classification
};

struct DatasetManifest {
    std::string dir;  // directory of the manifest file, for path resolution
    std::vector<ManifestEntry> entries;

    std::vector<const ManifestEntry*> split(const std::string& name) const;
    const ManifestEntry* find(const std::string& id) const;
    std::string resolve(const ManifestEntry& e) const;
};

// MOPA binary motion format (see README). The payload carries no id or
// skeleton name; those come from the manifest (or the file name).
MotionSequence read_motion(const std::string& path);
void write_motion(const MotionSequence& seq, const std::string& path);

MotionSequence read_motion_json(const std::string& path);
void write_motion_json(const MotionSequence& seq, const std::string& path);

// Reads the manifest (one JSON object per line), checks id uniqueness and
// that every motion file resolves and matches its named skeleton's joint
// count. `joints_of` maps skeleton name -> expected J.
DatasetManifest load_manifest(const std::string& path,
                              const std::vector<std::pair<std::string, int>>& joints_of);

MotionSequence cap_frames(const MotionSequence& seq, int max_frames);

MotionSequence mirror_motion(const MotionSequence& seq, const MirrorMap& mm);

TextSample mirror_caption(const TextSample& t);

// Optional root-relative canonicalization: subtracts the root joint position
// from every joint, per frame.
MotionSequence root_relative(const MotionSequence& seq, int root_joint);

}  // namespace mopatch
