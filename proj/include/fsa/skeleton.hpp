#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "fsa/tensor.hpp"

namespace fsa {

enum class AgeGroup { elderly, adult };

const char* age_name(AgeGroup g);
AgeGroup parse_age(const std::string& s);

// Kinect v2 joint indices used by normalization and the default topology.
inline constexpr std::size_t kSpineBase = 0;
inline constexpr std::size_t kSpineShoulder = 20;
inline constexpr std::size_t kKinectJoints = 25;

// One skeleton sample: frames x joints x dims coordinates plus metadata.
// For bodies=2 the joint axis doubles, absent-body joints zero-filled.
struct SkeletonSequence {
    std::vector<double> data;  // row-major [frames][joints*bodies][dims]
    std::size_t frames = 0;
    std::size_t joints = kKinectJoints;  // per body
    std::size_t dims = 3;
    int bodies = 1;
    int subject_id = 0;
    int action_id = 0;
    AgeGroup age_group = AgeGroup::adult;

    std::size_t joint_count() const { return joints * static_cast<std::size_t>(bodies); }
    std::size_t frame_values() const { return joint_count() * dims; }

    double& at(std::size_t t, std::size_t j, std::size_t d) {
        return data[(t * joint_count() + j) * dims + d];
    }
    double at(std::size_t t, std::size_t j, std::size_t d) const {
        return data[(t * joint_count() + j) * dims + d];
    }

    void validate() const;
};

// Parent map over one body's joints; root (joint 0) has parent -1.
struct BoneTopology {
    std::vector<int> parent;

    static BoneTopology kinect25();
    std::size_t joints() const { return parent.size(); }
    // throws unless the map forms a single tree rooted at joint 0
    void validate() const;
};

// The four derived channel maps fed to the model.
struct FourStreamInput {
    Tensor raw;           // (J*D) x T
    Tensor short_diff;    // (J*D) x (T - g_s)
    Tensor long_diff;     // (J*D) x (T - g_l)
    Tensor spatial_diff;  // ((J - bodies)*D) x T, J counting all bodies
};

struct ManifestEntry {
    std::string path;      // as written in the manifest file
    std::string resolved;  // path to open, relative entries resolved against the manifest
    int subject_id = 0;
    int action_id = 0;
    AgeGroup age_group = AgeGroup::adult;
    std::size_t frames = 0;
};

struct DatasetManifest {
    std::vector<ManifestEntry> entries;

    std::vector<int> subject_ids() const;  // sorted unique
    std::vector<int> action_ids() const;   // sorted unique
};

struct DatasetStats {
    double avg_frame_length = 0.0;
    double var_frame_length = 0.0;
    double avg_motion_diff = 0.0;
    double var_motion_diff = 0.0;
    std::size_t count = 0;
};

// --- .skl file format and manifests ---

SkeletonSequence load_sequence(const std::string& path);
void save_sequence(const SkeletonSequence& seq, const std::string& path);

DatasetManifest load_manifest(const std::string& path);
void save_manifest(const DatasetManifest& manifest, const std::string& path);

// --- transforms ---

// Translate so SpineBase of frame 0 sits at the origin, then scale uniformly
// so the average SpineBase->SpineShoulder distance is 1. Idempotent.
SkeletonSequence normalize(const SkeletonSequence& seq, std::size_t center_joint = kSpineBase,
                           std::size_t torso_joint = kSpineShoulder);

// Column t = flatten(frames[t+gap] - frames[t]); output (J*D) x (T-gap).
Tensor temporal_diff(const SkeletonSequence& seq, std::size_t gap);

// Bone vectors joint - parent(joint) per frame; ((J - bodies)*D) x T.
Tensor spatial_diff(const SkeletonSequence& seq, const BoneTopology& topo);

// Normalizes, then assembles all four streams.
FourStreamInput four_streams(const SkeletonSequence& seq, std::size_t g_s, std::size_t g_l,
                             const BoneTopology& topo = BoneTopology::kinect25());

// L distinct frames (sorted) when T >= L, otherwise L sorted draws with
// replacement; temporal order always preserved.
SkeletonSequence sample_length(const SkeletonSequence& seq, std::size_t target_len,
                               std::mt19937_64& rng);

// Deterministic evenly spaced variant used by fixed-length evaluation.
SkeletonSequence sample_length_even(const SkeletonSequence& seq, std::size_t target_len);

struct AugmentConfig {
    double rotation_deg = 30.0;  // about the vertical axis through SpineBase
    double scale_lo = 0.9;       // per-bone length scale range
    double scale_hi = 1.1;
    double noise_sigma = 0.01;   // i.i.d. Gaussian per coordinate
};

SkeletonSequence augment(const SkeletonSequence& seq, const AugmentConfig& cfg,
                         std::mt19937_64& rng, const BoneTopology& topo = BoneTopology::kinect25());

// (x, y) orthographic projection; the synthetic second modality.
SkeletonSequence project_xy(const SkeletonSequence& seq);

// Frame-length and motion-differential statistics over the manifest,
// computed on normalized skeletons.
DatasetStats dataset_stats(const DatasetManifest& manifest, const std::vector<int>& excluded_actions,
                           std::optional<AgeGroup> group = std::nullopt);

// --- synthetic corpus ---

struct SynthConfig {
    std::size_t subjects = 100;  // even; ids 1..n with elderly = 1..n/2
    std::size_t classes = 10;
    std::size_t reps = 2;  // sequences per (subject, class)
    std::uint64_t seed = 1;
    double fps = 30.0;
    double elderly_dilation = 1.4;  // longer sequences, slower motion
    double noise_sigma = 0.004;
};

// Writes one .skl file per (subject, class, rep) plus manifest.tsv under
// out_dir; returns the manifest.
DatasetManifest synth_generate(const SynthConfig& cfg, const std::string& out_dir);

}  // namespace fsa
