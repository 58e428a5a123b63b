#include "mopatch/motion.hpp"

#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "mopatch/binio.hpp"

namespace mopatch {

namespace fs = std::filesystem;
using nlohmann::json;

void MotionSequence::validate() const {
    if (frames < 1) fail("motion '" + id + "': T must be >= 1");
    if (joints < 1) fail("motion '" + id + "': J must be >= 1");
    if (data.size() != size_t(frames) * size_t(joints) * 3)
        fail("motion '" + id + "': payload size mismatch");
    for (float v : data)
        if (!std::isfinite(v)) fail("motion '" + id + "': non-finite value");
}

MotionSequence read_motion(const std::string& path) {
    auto is = binio::open_in(path);
    binio::expect_magic(is, "MOPA", "motion '" + path + "'");
    uint32_t version = binio::get_u32(is);
    if (version != 1) fail("motion '" + path + "': unsupported version " + std::to_string(version));
    MotionSequence seq;
    seq.frames = int(binio::get_u32(is));
    seq.joints = int(binio::get_u32(is));
    seq.fps = binio::get_f32(is);
    if (seq.frames < 1 || seq.joints < 1 || size_t(seq.frames) * size_t(seq.joints) > (1u << 28))
        fail("motion '" + path + "': implausible header");
    seq.data.resize(size_t(seq.frames) * size_t(seq.joints) * 3);
    is.read(reinterpret_cast<char*>(seq.data.data()), std::streamsize(seq.data.size() * 4));
    if (size_t(is.gcount()) != seq.data.size() * 4)
        fail("motion '" + path + "': payload size mismatch (truncated file)");
    if (is.peek() != std::char_traits<char>::eof())
        fail("motion '" + path + "': payload size mismatch (trailing bytes)");
    seq.id = fs::path(path).stem().string();
    seq.validate();
    return seq;
}

void write_motion(const MotionSequence& seq, const std::string& path) {
    seq.validate();
    auto os = binio::open_out(path);
    os.write("MOPA", 4);
    binio::put_u32(os, 1);
    binio::put_u32(os, uint32_t(seq.frames));
    binio::put_u32(os, uint32_t(seq.joints));
    binio::put_f32(os, seq.fps);
    // f32 payload is written as raw bytes; the in-memory layout is already
    // little-endian on every supported host
    os.write(reinterpret_cast<const char*>(seq.data.data()), std::streamsize(seq.data.size() * 4));
    if (!os) fail("motion '" + path + "': write failed");
}

MotionSequence read_motion_json(const std::string& path) {
    std::ifstream is(path);
    if (!is) fail("motion: cannot open '" + path + "'");
    json doc;
    try {
        doc = json::parse(is);
    } catch (const std::exception& e) {
        fail("motion '" + path + "': invalid JSON: " + std::string(e.what()));
    }
    MotionSequence seq;
    seq.id = doc.value("id", fs::path(path).stem().string());
    seq.skeleton_name = doc.value("skeleton", "");
    seq.fps = doc.value("fps", 0.0f);
    const auto& frames = doc.at("frames");
    seq.frames = int(frames.size());
    if (seq.frames < 1) fail("motion '" + path + "': empty frames");
    seq.joints = int(frames[0].size());
    seq.data.reserve(size_t(seq.frames) * size_t(seq.joints) * 3);
    for (const auto& f : frames) {
        if (int(f.size()) != seq.joints) fail("motion '" + path + "': ragged frame");
        for (const auto& pos : f) {
            if (pos.size() != 3) fail("motion '" + path + "': joint position is not xyz");
            for (int c = 0; c < 3; ++c) seq.data.push_back(pos[size_t(c)].get<float>());
        }
    }
    seq.validate();
    return seq;
}

void write_motion_json(const MotionSequence& seq, const std::string& path) {
    seq.validate();
    json doc;
    doc["id"] = seq.id;
    doc["skeleton"] = seq.skeleton_name;
    doc["fps"] = seq.fps;
    json frames = json::array();
    for (int t = 0; t < seq.frames; ++t) {
        json frame = json::array();
        for (int j = 0; j < seq.joints; ++j)
            frame.push_back({seq.at(t, j, 0), seq.at(t, j, 1), seq.at(t, j, 2)});
        frames.push_back(std::move(frame));
    }
    doc["frames"] = std::move(frames);
    std::ofstream os(path);
    if (!os) fail("motion: cannot open '" + path + "' for writing");
    os << doc.dump();
}

std::vector<const ManifestEntry*> DatasetManifest::split(const std::string& name) const {
    std::vector<const ManifestEntry*> out;
    for (const auto& e : entries)
        if (e.split == name) out.push_back(&e);
    return out;
}

const ManifestEntry* DatasetManifest::find(const std::string& id) const {
    for (const auto& e : entries)
        if (e.id == id) return &e;
    return nullptr;
}

std::string DatasetManifest::resolve(const ManifestEntry& e) const {
    fs::path p(e.motion_path);
    if (p.is_absolute()) return p.string();
    return (fs::path(dir) / p).string();
}

DatasetManifest load_manifest(const std::string& path,
                              const std::vector<std::pair<std::string, int>>& joints_of) {
    std::ifstream is(path);
    if (!is) fail("manifest: cannot open '" + path + "'");
    DatasetManifest m;
    m.dir = fs::path(path).parent_path().string();
    std::set<std::string> seen;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json doc;
        try {
            doc = json::parse(line);
        } catch (const std::exception& e) {
            fail("manifest '" + path + "' line " + std::to_string(lineno) + ": " + e.what());
        }
        ManifestEntry e;
        e.id = doc.at("id").get<std::string>();
        e.motion_path = doc.at("motion").get<std::string>();
        e.skeleton_name = doc.at("skeleton").get<std::string>();
        e.split = doc.at("split").get<std::string>();
        if (e.split != "train" && e.split != "val" && e.split != "test")
            fail("manifest entry '" + e.id + "': unknown split '" + e.split + "'");
        for (const auto& c : doc.at("captions")) {
            TextSample t{c.get<std::string>()};
            std::string trimmed = t.caption;
            trimmed.erase(0, trimmed.find_first_not_of(" \t"));
            if (trimmed.empty()) fail("manifest entry '" + e.id + "': empty caption");
            e.captions.push_back(std::move(t));
        }
        if (e.captions.empty()) fail("manifest entry '" + e.id + "': needs at least one caption");
        if (doc.contains("mirror_of") && !doc["mirror_of"].is_null())
            e.mirror_of = doc["mirror_of"].get<std::string>();
        if (doc.contains("label") && !doc["label"].is_null())
            e.label = doc["label"].get<std::string>();
        if (!seen.insert(e.id).second) fail("manifest: duplicate id '" + e.id + "'");
        m.entries.push_back(std::move(e));
    }
    // every motion must resolve and match its skeleton's joint count
    for (const auto& e : m.entries) {
        const std::string p = m.resolve(e);
        MotionSequence seq = read_motion(p);
        int expected = -1;
        for (const auto& [name, j] : joints_of)
            if (name == e.skeleton_name) expected = j;
        if (expected < 0) fail("manifest entry '" + e.id + "': unknown skeleton '" + e.skeleton_name + "'");
        if (seq.joints != expected)
            fail("manifest entry '" + e.id + "': motion has " + std::to_string(seq.joints) +
                 " joints but skeleton '" + e.skeleton_name + "' has " + std::to_string(expected));
    }
    return m;
}

MotionSequence cap_frames(const MotionSequence& seq, int max_frames) {
    if (max_frames < 1) fail("cap_frames: max_frames must be >= 1");
    if (seq.frames <= max_frames) return seq;
    MotionSequence out = seq;
    out.frames = max_frames;
    out.data.resize(size_t(max_frames) * size_t(seq.joints) * 3);
    return out;
}

MotionSequence mirror_motion(const MotionSequence& seq, const MirrorMap& mm) {
    if (int(mm.joint_perm.size()) != seq.joints)
        fail("mirror_motion: mirror map is for " + std::to_string(mm.joint_perm.size()) +
             " joints, motion has " + std::to_string(seq.joints));
    MotionSequence out = seq;
    for (int t = 0; t < seq.frames; ++t) {
        for (int j = 0; j < seq.joints; ++j) {
            int src = mm.joint_perm[size_t(j)];
            out.at(t, j, 0) = -seq.at(t, src, 0);
            out.at(t, j, 1) = seq.at(t, src, 1);
            out.at(t, j, 2) = seq.at(t, src, 2);
        }
    }
    return out;
}

namespace {

bool word_boundary(const std::string& s, size_t pos, size_t len) {
    auto alnum = [](char c) { return std::isalnum((unsigned char)c) != 0; };
    bool left_ok = pos == 0 || !alnum(s[pos - 1]);
    bool right_ok = pos + len >= s.size() || !alnum(s[pos + len]);
    return left_ok && right_ok;
}

}  // namespace

TextSample mirror_caption(const TextSample& t) {
    // simultaneous whole-word swap of left<->right, preserving case of the
    // first letter ("Left" -> "Right")
    static const std::pair<std::string, std::string> swaps[] = {
        {"left", "right"}, {"right", "left"}, {"Left", "Right"}, {"Right", "Left"}};
    const std::string& in = t.caption;
    std::string out;
    out.reserve(in.size());
    size_t i = 0;
    while (i < in.size()) {
        bool matched = false;
        for (const auto& [from, to] : swaps) {
            if (in.compare(i, from.size(), from) == 0 && word_boundary(in, i, from.size())) {
                out += to;
                i += from.size();
                matched = true;
                break;
            }
        }
        if (!matched) out += in[i++];
    }
    return TextSample{out};
}

MotionSequence root_relative(const MotionSequence& seq, int root_joint) {
    MotionSequence out = seq;
    for (int t = 0; t < seq.frames; ++t) {
        float rx = seq.at(t, root_joint, 0), ry = seq.at(t, root_joint, 1), rz = seq.at(t, root_joint, 2);
        for (int j = 0; j < seq.joints; ++j) {
            out.at(t, j, 0) -= rx;
            out.at(t, j, 1) -= ry;
            out.at(t, j, 2) -= rz;
        }
    }
    return out;
}

}  // namespace mopatch
