#include "mopatch/skeleton.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

namespace mopatch {

using nlohmann::json;

int Skeleton::joint_index(const std::string& joint) const {
    for (int i = 0; i < joint_count(); ++i)
        if (joint_names[size_t(i)] == joint) return i;
    return -1;
}

int Skeleton::root() const {
    for (int i = 0; i < joint_count(); ++i)
        if (parent[size_t(i)] < 0) return i;
    fail("skeleton: no root joint");
}

int Skeleton::depth(int joint) const {
    int d = 0;
    for (int j = joint; parent[size_t(j)] >= 0; j = parent[size_t(j)]) ++d;
    return d;
}

const char* body_part_name(BodyPart p) {
    switch (p) {
        case BodyPart::Torso: return "torso";
        case BodyPart::LeftArm: return "left_arm";
        case BodyPart::RightArm: return "right_arm";
        case BodyPart::LeftLeg: return "left_leg";
        case BodyPart::RightLeg: return "right_leg";
    }
    return "?";
}

namespace {

Side parse_side(const std::string& s, const std::string& joint) {
    if (s == "left") return Side::Left;
    if (s == "right") return Side::Right;
    if (s == "center") return Side::Center;
    fail("skeleton: joint '" + joint + "' has unknown side tag '" + s + "'");
}

// Canonical key used to pair left joints with their right partners: the
// side marker is stripped from the name ("left_hip" -> "_hip", "LS" -> "S").
std::string side_stripped_name(const std::string& name, Side side) {
    std::string lower = name;
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return char(std::tolower(c)); });
    const std::string word = side == Side::Left ? "left" : "right";
    size_t pos = lower.find(word);
    if (pos != std::string::npos)
        return name.substr(0, pos) + name.substr(pos + word.size());
    // KIT-style single-letter prefix (LS/RS, LMrot/RMrot, ...)
    char c = char(std::toupper(name[0]));
    if ((side == Side::Left && c == 'L') || (side == Side::Right && c == 'R'))
        return name.substr(1);
    fail("skeleton: cannot derive mirror partner name for joint '" + name + "'");
}

void validate_tree(const Skeleton& sk) {
    int roots = 0;
    for (int i = 0; i < sk.joint_count(); ++i)
        if (sk.parent[size_t(i)] < 0) ++roots;
    if (roots != 1) fail("skeleton '" + sk.name + "': expected exactly one root, found " + std::to_string(roots));

    // cycle check: walking parent links from any joint must reach the root
    for (int i = 0; i < sk.joint_count(); ++i) {
        int steps = 0;
        for (int j = i; sk.parent[size_t(j)] >= 0; j = sk.parent[size_t(j)]) {
            if (++steps > sk.joint_count())
                fail("skeleton '" + sk.name + "': cycle in parent links at joint '" + sk.joint_names[size_t(i)] + "'");
        }
    }
}

}  // namespace

BodyPartition partition_body_parts(const Skeleton& sk,
                                   const std::array<std::vector<std::string>, kBodyPartCount>& part_joint_names) {
    BodyPartition bp;
    std::vector<int> membership(size_t(sk.joint_count()), 0);

    for (int p = 0; p < kBodyPartCount; ++p) {
        const auto& names = part_joint_names[size_t(p)];
        const std::string part = body_part_name(BodyPart(p));
        if (names.size() < 2) fail("partition: part '" + part + "' needs at least 2 joints");
        auto& chain = bp.chains[size_t(p)];
        for (const auto& n : names) {
            int idx = sk.joint_index(n);
            if (idx < 0) fail("partition: part '" + part + "' references unknown joint '" + n + "'");
            chain.push_back(idx);
            membership[size_t(idx)] += 1;
        }
        // chain joints must be consecutive along parent links, i.e. each joint's
        // parent is its predecessor; ordering torso-outward follows from that
        for (size_t k = 1; k < chain.size(); ++k) {
            if (sk.parent[size_t(chain[k])] != chain[k - 1])
                fail("partition: part '" + part + "' is not a connected chain at joint '" +
                     sk.joint_names[size_t(chain[k])] + "'");
        }
    }

    for (int i = 0; i < sk.joint_count(); ++i) {
        if (membership[size_t(i)] == 0)
            fail("partition: joint '" + sk.joint_names[size_t(i)] + "' is in no part");
        if (membership[size_t(i)] > 2)
            fail("partition: joint '" + sk.joint_names[size_t(i)] + "' is in more than two parts");
    }
    return bp;
}

MirrorMap derive_mirror_map(const Skeleton& sk) {
    MirrorMap mm;
    mm.joint_perm.resize(size_t(sk.joint_count()));
    std::map<std::string, int> left_by_key, right_by_key;
    for (int i = 0; i < sk.joint_count(); ++i) {
        mm.joint_perm[size_t(i)] = i;
        if (sk.side[size_t(i)] == Side::Left)
            left_by_key[side_stripped_name(sk.joint_names[size_t(i)], Side::Left)] = i;
        else if (sk.side[size_t(i)] == Side::Right)
            right_by_key[side_stripped_name(sk.joint_names[size_t(i)], Side::Right)] = i;
    }
    for (const auto& [key, li] : left_by_key) {
        auto it = right_by_key.find(key);
        if (it == right_by_key.end())
            fail("skeleton '" + sk.name + "': left joint '" + sk.joint_names[size_t(li)] + "' has no right partner");
        mm.joint_perm[size_t(li)] = it->second;
        mm.joint_perm[size_t(it->second)] = li;
        right_by_key.erase(it);
    }
    if (!right_by_key.empty())
        fail("skeleton '" + sk.name + "': right joint '" +
             sk.joint_names[size_t(right_by_key.begin()->second)] + "' has no left partner");
    return mm;
}

SkeletonDoc parse_skeleton(const std::string& json_text, const std::string& origin) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const std::exception& e) {
        fail("skeleton '" + origin + "': invalid JSON: " + e.what());
    }

    SkeletonDoc out;
    Skeleton& sk = out.skeleton;
    sk.name = doc.at("name").get<std::string>();

    if (!doc.contains("joints") || !doc["joints"].is_array() || doc["joints"].empty())
        fail("skeleton '" + origin + "': missing joints list");

    std::map<std::string, int> index_of;
    for (const auto& j : doc["joints"]) {
        std::string jn = j.at("name").get<std::string>();
        if (index_of.count(jn)) fail("skeleton '" + sk.name + "': duplicate joint name '" + jn + "'");
        index_of[jn] = sk.joint_count();
        sk.joint_names.push_back(jn);
        sk.side.push_back(parse_side(j.value("side", "center"), jn));
        sk.parent.push_back(-2);  // resolved below
    }
    for (size_t i = 0; i < doc["joints"].size(); ++i) {
        const auto& j = doc["joints"][i];
        if (j.contains("parent") && !j["parent"].is_null()) {
            std::string pn = j["parent"].get<std::string>();
            auto it = index_of.find(pn);
            if (it == index_of.end())
                fail("skeleton '" + sk.name + "': joint '" + sk.joint_names[i] + "' has unknown parent '" + pn + "'");
            sk.parent[i] = it->second;
        } else {
            sk.parent[i] = -1;
        }
    }
    validate_tree(sk);
    derive_mirror_map(sk);  // validates left/right pairing

    std::array<std::vector<std::string>, kBodyPartCount> parts;
    const auto& pj = doc.at("parts");
    for (int p = 0; p < kBodyPartCount; ++p) {
        const std::string key = body_part_name(BodyPart(p));
        if (!pj.contains(key)) fail("skeleton '" + sk.name + "': parts is missing '" + key + "'");
        for (const auto& n : pj[key]) parts[size_t(p)].push_back(n.get<std::string>());
    }
    out.partition = partition_body_parts(sk, parts);
    return out;
}

SkeletonDoc load_skeleton(const std::string& path) {
    std::ifstream is(path);
    if (!is) fail("skeleton: cannot open '" + path + "'");
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_skeleton(ss.str(), path);
}

}  // namespace mopatch
