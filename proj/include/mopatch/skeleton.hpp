#pragma once

#include <array>
#include <string>
#include <vector>

#include "mopatch/common.hpp"

namespace mopatch {

enum class Side { Left, Right, Center };

// A rooted joint tree loaded from a skeleton description document.
// Immutable after construction; safe to share across threads.
struct Skeleton {
    std::string name;
    std::vector<std::string> joint_names;
    std::vector<int> parent;      // -1 for the root
    std::vector<Side> side;

    int joint_count() const { return int(joint_names.size()); }
    int joint_index(const std::string& joint) const;  // -1 if unknown
    int root() const;
    int depth(int joint) const;   // edges from the root
};

inline constexpr int kBodyPartCount = 5;

enum class BodyPart { Torso = 0, LeftArm, RightArm, LeftLeg, RightLeg };

const char* body_part_name(BodyPart p);

// Five kinematic chains ordered torso-outward. A joint may sit in at most
// two chains (shared attachment joints).
struct BodyPartition {
    std::array<std::vector<int>, kBodyPartCount> chains;

    const std::vector<int>& chain(BodyPart p) const { return chains[size_t(p)]; }
};

// Involutive joint permutation for left/right reflection. Mirroring negates
// the x (lateral) coordinate.
struct MirrorMap {
    std::vector<int> joint_perm;
};

// Parses and validates a skeleton description (JSON text, see README for the
// schema). The document also carries the five part lists.
struct SkeletonDoc {
    Skeleton skeleton;
    BodyPartition partition;
};

SkeletonDoc load_skeleton(const std::string& path);
SkeletonDoc parse_skeleton(const std::string& json_text, const std::string& origin);

BodyPartition partition_body_parts(const Skeleton& sk,
                                   const std::array<std::vector<std::string>, kBodyPartCount>& part_joint_names);

MirrorMap derive_mirror_map(const Skeleton& sk);

}  // namespace mopatch
