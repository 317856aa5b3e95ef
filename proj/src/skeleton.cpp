#include "fsa/skeleton.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace fsa {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

double parse_double(std::string_view tok, const std::string& where) {
    double v = 0.0;
    const char* first = tok.data();
    const char* last = tok.data() + tok.size();
    auto [p, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || p != last) fail(where + ": bad numeric token '" + std::string(tok) + "'");
    return v;
}

long parse_int(std::string_view tok, const std::string& where) {
    long v = 0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || p != tok.data() + tok.size())
        fail(where + ": bad integer token '" + std::string(tok) + "'");
    return v;
}

// shortest representation that round-trips exactly
void append_double(std::string& out, double v) {
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, p);
}

std::string_view expect_kv(std::string_view line, std::size_t& pos, const std::string& key,
                           const std::string& where) {
    while (pos < line.size() && line[pos] == ' ') ++pos;
    if (line.compare(pos, key.size(), key) != 0 || pos + key.size() >= line.size() ||
        line[pos + key.size()] != '=')
        fail(where + ": expected '" + key + "=<value>'");
    pos += key.size() + 1;
    std::size_t end = line.find(' ', pos);
    if (end == std::string_view::npos) end = line.size();
    std::string_view val = line.substr(pos, end - pos);
    pos = end;
    return val;
}

}  // namespace

const char* age_name(AgeGroup g) { return g == AgeGroup::elderly ? "elderly" : "adult"; }

AgeGroup parse_age(const std::string& s) {
    if (s == "elderly") return AgeGroup::elderly;
    if (s == "adult") return AgeGroup::adult;
    fail("unknown age group '" + s + "'");
}

void SkeletonSequence::validate() const {
    if (frames < 1) fail("sequence must have at least one frame");
    if (joints < 1 || dims < 1) fail("sequence must have positive joints and dims");
    if (bodies != 1 && bodies != 2) fail("bodies must be 1 or 2");
    if (data.size() != frames * frame_values()) fail("sequence data size inconsistent");
    for (double v : data)
        if (!std::isfinite(v)) fail("sequence contains a non-finite coordinate");
}

BoneTopology BoneTopology::kinect25() {
    BoneTopology t;
    t.parent.assign(kKinectJoints, -1);
    auto p = [&](std::size_t child, std::size_t par) { t.parent[child] = static_cast<int>(par); };
    p(1, 0);    // SpineMid <- SpineBase
    p(20, 1);   // SpineShoulder <- SpineMid
    p(2, 20);   // Neck
    p(3, 2);    // Head
    p(4, 20);   // ShoulderLeft
    p(5, 4);    // ElbowLeft
    p(6, 5);    // WristLeft
    p(7, 6);    // HandLeft
    p(21, 7);   // HandTipLeft
    p(22, 7);   // ThumbLeft
    p(8, 20);   // ShoulderRight
    p(9, 8);    // ElbowRight
    p(10, 9);   // WristRight
    p(11, 10);  // HandRight
    p(23, 11);  // HandTipRight
    p(24, 11);  // ThumbRight
    p(12, 0);   // HipLeft
    p(13, 12);  // KneeLeft
    p(14, 13);  // AnkleLeft
    p(15, 14);  // FootLeft
    p(16, 0);   // HipRight
    p(17, 16);  // KneeRight
    p(18, 17);  // AnkleRight
    p(19, 18);  // FootRight
    return t;
}

void BoneTopology::validate() const {
    const std::size_t n = parent.size();
    if (n < 2) fail("topology needs at least two joints");
    if (parent[0] != -1) fail("topology root must be joint 0");
    for (std::size_t j = 1; j < n; ++j) {
        if (parent[j] < 0 || static_cast<std::size_t>(parent[j]) >= n)
            fail("topology parent of joint " + std::to_string(j) + " out of range");
        // walk to the root; a cycle or detached component never reaches it
        std::size_t cur = j, steps = 0;
        while (cur != 0) {
            cur = static_cast<std::size_t>(parent[cur]);
            if (++steps > n) fail("topology is not a tree (cycle through joint " + std::to_string(j) + ")");
        }
    }
}

SkeletonSequence load_sequence(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("cannot open '" + path + "'");
    std::string line;
    std::size_t lineno = 0;
    auto where = [&] { return path + ":" + std::to_string(lineno); };

    if (!std::getline(in, line)) fail(path + ": empty file");
    ++lineno;
    if (line != "SKL 1") fail(where() + ": bad magic, expected 'SKL 1'");

    if (!std::getline(in, line)) fail(path + ": missing header line");
    ++lineno;
    SkeletonSequence seq;
    std::size_t pos = 0;
    seq.subject_id = static_cast<int>(parse_int(expect_kv(line, pos, "subject", where()), where()));
    seq.action_id = static_cast<int>(parse_int(expect_kv(line, pos, "action", where()), where()));
    seq.age_group = parse_age(std::string(expect_kv(line, pos, "age", where())));
    seq.bodies = static_cast<int>(parse_int(expect_kv(line, pos, "bodies", where()), where()));
    seq.joints = static_cast<std::size_t>(parse_int(expect_kv(line, pos, "joints", where()), where()));
    seq.dims = static_cast<std::size_t>(parse_int(expect_kv(line, pos, "dims", where()), where()));
    seq.frames = static_cast<std::size_t>(parse_int(expect_kv(line, pos, "frames", where()), where()));
    if (seq.bodies != 1 && seq.bodies != 2) fail(where() + ": bodies must be 1 or 2");
    if (seq.joints < 1 || seq.dims < 1 || seq.frames < 1)
        fail(where() + ": joints, dims, frames must be positive");

    const std::size_t per_frame = seq.frame_values();
    seq.data.reserve(seq.frames * per_frame);
    for (std::size_t t = 0; t < seq.frames; ++t) {
        if (!std::getline(in, line)) fail(path + ": expected " + std::to_string(seq.frames) +
                                          " frame lines, got " + std::to_string(t));
        ++lineno;
        std::size_t count = 0, i = 0;
        while (i < line.size()) {
            while (i < line.size() && line[i] == ' ') ++i;
            if (i >= line.size()) break;
            std::size_t end = line.find(' ', i);
            if (end == std::string::npos) end = line.size();
            seq.data.push_back(parse_double(std::string_view(line).substr(i, end - i), where()));
            ++count;
            i = end;
        }
        if (count != per_frame)
            fail(where() + ": frame has " + std::to_string(count) + " values, expected " +
                 std::to_string(per_frame));
    }
    seq.validate();
    return seq;
}

void save_sequence(const SkeletonSequence& seq, const std::string& path) {
    seq.validate();
    std::string out;
    out.reserve(seq.data.size() * 10 + 128);
    out += "SKL 1\n";
    out += "subject=" + std::to_string(seq.subject_id);
    out += " action=" + std::to_string(seq.action_id);
    out += " age=";
    out += age_name(seq.age_group);
    out += " bodies=" + std::to_string(seq.bodies);
    out += " joints=" + std::to_string(seq.joints);
    out += " dims=" + std::to_string(seq.dims);
    out += " frames=" + std::to_string(seq.frames);
    out += '\n';
    const std::size_t per_frame = seq.frame_values();
    for (std::size_t t = 0; t < seq.frames; ++t) {
        for (std::size_t i = 0; i < per_frame; ++i) {
            if (i) out += ' ';
            append_double(out, seq.data[t * per_frame + i]);
        }
        out += '\n';
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) fail("cannot write '" + path + "'");
    f << out;
    if (!f) fail("write failed for '" + path + "'");
}

DatasetManifest load_manifest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("cannot open manifest '" + path + "'");
    const std::filesystem::path base = std::filesystem::path(path).parent_path();
    DatasetManifest m;
    std::set<std::string> seen;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const std::string where = path + ":" + std::to_string(lineno);
        std::vector<std::string> cols;
        std::size_t start = 0;
        while (true) {
            std::size_t tab = line.find('\t', start);
            cols.push_back(line.substr(start, tab == std::string::npos ? tab : tab - start));
            if (tab == std::string::npos) break;
            start = tab + 1;
        }
        if (cols.size() != 5) fail(where + ": expected 5 tab-separated columns");
        ManifestEntry e;
        e.path = cols[0];
        std::filesystem::path p(e.path);
        e.resolved = p.is_absolute() ? e.path : (base / p).string();
        e.subject_id = static_cast<int>(parse_int(cols[1], where));
        e.action_id = static_cast<int>(parse_int(cols[2], where));
        e.age_group = parse_age(cols[3]);
        e.frames = static_cast<std::size_t>(parse_int(cols[4], where));
        if (!seen.insert(e.path).second) fail(where + ": duplicate path '" + e.path + "'");
        m.entries.push_back(std::move(e));
    }
    return m;
}

void save_manifest(const DatasetManifest& manifest, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail("cannot write manifest '" + path + "'");
    for (const auto& e : manifest.entries) {
        out << e.path << '\t' << e.subject_id << '\t' << e.action_id << '\t'
            << age_name(e.age_group) << '\t' << e.frames << '\n';
    }
}

std::vector<int> DatasetManifest::subject_ids() const {
    std::set<int> s;
    for (const auto& e : entries) s.insert(e.subject_id);
    return {s.begin(), s.end()};
}

std::vector<int> DatasetManifest::action_ids() const {
    std::set<int> s;
    for (const auto& e : entries) s.insert(e.action_id);
    return {s.begin(), s.end()};
}

SkeletonSequence normalize(const SkeletonSequence& seq, std::size_t center_joint,
                           std::size_t torso_joint) {
    seq.validate();
    if (center_joint >= seq.joint_count() || torso_joint >= seq.joint_count())
        fail("normalize reference joints out of range for " + std::to_string(seq.joint_count()) +
             " joints");
    SkeletonSequence out = seq;
    const std::size_t d = seq.dims;
    std::vector<double> center(d);
    for (std::size_t k = 0; k < d; ++k) center[k] = seq.at(0, center_joint, k);
    for (std::size_t t = 0; t < out.frames; ++t)
        for (std::size_t j = 0; j < out.joint_count(); ++j)
            for (std::size_t k = 0; k < d; ++k) out.at(t, j, k) -= center[k];

    double torso = 0.0;
    for (std::size_t t = 0; t < out.frames; ++t) {
        double s2 = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            const double diff = out.at(t, torso_joint, k) - out.at(t, center_joint, k);
            s2 += diff * diff;
        }
        torso += std::sqrt(s2);
    }
    torso /= static_cast<double>(out.frames);
    if (torso == 0.0) fail("normalize: degenerate skeleton with zero torso length");
    const double inv = 1.0 / torso;
    for (double& v : out.data) v *= inv;
    return out;
}

Tensor temporal_diff(const SkeletonSequence& seq, std::size_t gap) {
    if (gap < 1) fail("temporal gap must be >= 1");
    if (gap >= seq.frames)
        fail("sequence shorter than gap: T=" + std::to_string(seq.frames) + " gap=" +
             std::to_string(gap));
    const std::size_t rows = seq.frame_values();
    const std::size_t cols = seq.frames - gap;
    Tensor out({rows, cols});
    for (std::size_t t = 0; t < cols; ++t) {
        const double* a = seq.data.data() + t * rows;
        const double* b = seq.data.data() + (t + gap) * rows;
        for (std::size_t r = 0; r < rows; ++r) out[r * cols + t] = b[r] - a[r];
    }
    return out;
}

Tensor spatial_diff(const SkeletonSequence& seq, const BoneTopology& topo) {
    topo.validate();
    if (topo.joints() != seq.joints)
        fail("topology covers " + std::to_string(topo.joints()) + " joints, sequence has " +
             std::to_string(seq.joints) + " per body");
    const std::size_t d = seq.dims;
    const std::size_t bones_per_body = seq.joints - 1;
    const std::size_t rows = static_cast<std::size_t>(seq.bodies) * bones_per_body * d;
    Tensor out({rows, seq.frames});
    for (std::size_t t = 0; t < seq.frames; ++t) {
        std::size_t r = 0;
        for (int b = 0; b < seq.bodies; ++b) {
            const std::size_t joff = static_cast<std::size_t>(b) * seq.joints;
            for (std::size_t j = 1; j < seq.joints; ++j) {
                const std::size_t par = joff + static_cast<std::size_t>(topo.parent[j]);
                for (std::size_t k = 0; k < d; ++k, ++r)
                    out[r * seq.frames + t] = seq.at(t, joff + j, k) - seq.at(t, par, k);
            }
        }
    }
    return out;
}

FourStreamInput four_streams(const SkeletonSequence& seq, std::size_t g_s, std::size_t g_l,
                             const BoneTopology& topo) {
    if (!(g_s < g_l)) fail("four_streams requires g_s < g_l");
    if (g_l >= seq.frames)
        fail("four_streams requires g_l < T, got g_l=" + std::to_string(g_l) + " T=" +
             std::to_string(seq.frames));
    const SkeletonSequence norm = normalize(seq);
    FourStreamInput s;
    const std::size_t rows = norm.frame_values();
    s.raw = Tensor({rows, norm.frames});
    for (std::size_t t = 0; t < norm.frames; ++t)
        for (std::size_t r = 0; r < rows; ++r)
            s.raw[r * norm.frames + t] = norm.data[t * rows + r];
    s.short_diff = temporal_diff(norm, g_s);
    s.long_diff = temporal_diff(norm, g_l);
    s.spatial_diff = spatial_diff(norm, topo);
    return s;
}

namespace {
SkeletonSequence take_frames(const SkeletonSequence& seq, const std::vector<std::size_t>& idx) {
    SkeletonSequence out = seq;
    out.frames = idx.size();
    out.data.resize(idx.size() * seq.frame_values());
    const std::size_t per = seq.frame_values();
    for (std::size_t i = 0; i < idx.size(); ++i)
        std::copy_n(seq.data.data() + idx[i] * per, per, out.data.data() + i * per);
    return out;
}
}  // namespace

SkeletonSequence sample_length(const SkeletonSequence& seq, std::size_t target_len,
                               std::mt19937_64& rng) {
    if (target_len < 2) fail("sample_length target must be >= 2");
    std::vector<std::size_t> idx;
    idx.reserve(target_len);
    if (seq.frames >= target_len) {
        std::vector<std::size_t> all(seq.frames);
        for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
        std::sample(all.begin(), all.end(), std::back_inserter(idx), target_len, rng);
    } else {
        std::uniform_int_distribution<std::size_t> dist(0, seq.frames - 1);
        for (std::size_t i = 0; i < target_len; ++i) idx.push_back(dist(rng));
        std::sort(idx.begin(), idx.end());
    }
    return take_frames(seq, idx);
}

SkeletonSequence sample_length_even(const SkeletonSequence& seq, std::size_t target_len) {
    if (target_len < 1) fail("sample_length_even target must be >= 1");
    std::vector<std::size_t> idx(target_len);
    for (std::size_t i = 0; i < target_len; ++i) idx[i] = i * seq.frames / target_len;
    return take_frames(seq, idx);
}

SkeletonSequence augment(const SkeletonSequence& seq, const AugmentConfig& cfg,
                         std::mt19937_64& rng, const BoneTopology& topo) {
    seq.validate();
    if (cfg.scale_lo <= 0.0 || cfg.scale_hi < cfg.scale_lo)
        fail("augment bone-scale range must be positive and ordered");
    if (cfg.rotation_deg < 0.0) fail("augment rotation range must be >= 0");
    if (cfg.noise_sigma < 0.0) fail("augment noise sigma must be >= 0");
    SkeletonSequence out = seq;
    const std::size_t d = seq.dims;

    // 1) one rotation about the vertical axis through frame-0 SpineBase;
    //    needs a depth axis, so 2-D sequences skip it
    if (cfg.rotation_deg > 0.0 && d >= 3) {
        std::uniform_real_distribution<double> ang(-cfg.rotation_deg, cfg.rotation_deg);
        const double th = ang(rng) * std::acos(-1.0) / 180.0;
        const double c = std::cos(th), s = std::sin(th);
        const double cx = seq.at(0, kSpineBase, 0), cz = seq.at(0, kSpineBase, 2);
        for (std::size_t t = 0; t < out.frames; ++t) {
            for (std::size_t j = 0; j < out.joint_count(); ++j) {
                const double x = out.at(t, j, 0) - cx, z = out.at(t, j, 2) - cz;
                out.at(t, j, 0) = c * x + s * z + cx;
                out.at(t, j, 2) = -s * x + c * z + cz;
            }
        }
    }

    // 2) per-bone length scaling propagated down the tree; realized as
    //    accumulated offsets so scale 1 is exactly the identity
    if (cfg.scale_lo != 1.0 || cfg.scale_hi != 1.0) {
        topo.validate();
        if (topo.joints() != seq.joints)
            fail("augment topology does not match sequence joints");
        std::uniform_real_distribution<double> sd(cfg.scale_lo, cfg.scale_hi);
        std::vector<double> scale(static_cast<std::size_t>(seq.bodies) * seq.joints, 1.0);
        for (int b = 0; b < seq.bodies; ++b)
            for (std::size_t j = 1; j < seq.joints; ++j)
                scale[static_cast<std::size_t>(b) * seq.joints + j] = sd(rng);
        // children come after parents in index order for kinect25? not
        // guaranteed in general, so walk joints in topological order
        std::vector<std::size_t> order;
        order.reserve(seq.joints);
        {
            std::vector<char> placed(seq.joints, 0);
            placed[0] = 1;
            while (order.size() + 1 < seq.joints)
                for (std::size_t j = 1; j < seq.joints; ++j)
                    if (!placed[j] && placed[static_cast<std::size_t>(topo.parent[j])]) {
                        placed[j] = 1;
                        order.push_back(j);
                    }
        }
        std::vector<double> offset(seq.joint_count() * d);
        for (std::size_t t = 0; t < out.frames; ++t) {
            std::fill(offset.begin(), offset.end(), 0.0);
            for (int b = 0; b < seq.bodies; ++b) {
                const std::size_t joff = static_cast<std::size_t>(b) * seq.joints;
                for (std::size_t j : order) {
                    const std::size_t par = joff + static_cast<std::size_t>(topo.parent[j]);
                    const double s = scale[joff + j];
                    for (std::size_t k = 0; k < d; ++k) {
                        const double bone = out.at(t, joff + j, k) - out.at(t, par, k);
                        offset[(joff + j) * d + k] = offset[par * d + k] + (s - 1.0) * bone;
                    }
                }
            }
            for (std::size_t j = 0; j < out.joint_count(); ++j)
                for (std::size_t k = 0; k < d; ++k) out.at(t, j, k) += offset[j * d + k];
        }
    }

    // 3) i.i.d. coordinate noise
    if (cfg.noise_sigma > 0.0) {
        std::normal_distribution<double> nd(0.0, cfg.noise_sigma);
        for (double& v : out.data) v += nd(rng);
    }
    return out;
}

SkeletonSequence project_xy(const SkeletonSequence& seq) {
    if (seq.dims < 2) fail("project_xy needs at least 2 dims");
    SkeletonSequence out = seq;
    out.dims = 2;
    out.data.resize(seq.frames * seq.joint_count() * 2);
    for (std::size_t t = 0; t < seq.frames; ++t)
        for (std::size_t j = 0; j < seq.joint_count(); ++j)
            for (std::size_t k = 0; k < 2; ++k)
                out.data[(t * seq.joint_count() + j) * 2 + k] = seq.at(t, j, k);
    return out;
}

DatasetStats dataset_stats(const DatasetManifest& manifest, const std::vector<int>& excluded_actions,
                           std::optional<AgeGroup> group) {
    std::vector<double> lengths, motions;
    for (const auto& e : manifest.entries) {
        if (std::find(excluded_actions.begin(), excluded_actions.end(), e.action_id) !=
            excluded_actions.end())
            continue;
        if (group && e.age_group != *group) continue;
        const SkeletonSequence seq = normalize(load_sequence(e.resolved));
        lengths.push_back(static_cast<double>(seq.frames));
        double motion = 0.0;
        if (seq.frames >= 2) {
            for (std::size_t t = 0; t + 1 < seq.frames; ++t) {
                for (std::size_t j = 0; j < seq.joint_count(); ++j) {
                    double s2 = 0.0;
                    for (std::size_t k = 0; k < seq.dims; ++k) {
                        const double diff = seq.at(t + 1, j, k) - seq.at(t, j, k);
                        s2 += diff * diff;
                    }
                    motion += std::sqrt(s2);
                }
            }
            motion /= static_cast<double>(seq.frames - 1);
        }
        motions.push_back(motion);
    }
    if (lengths.empty()) fail("dataset_stats: no sequences left after exclusion");

    auto mean_var = [](const std::vector<double>& xs) {
        double mean = 0.0;
        for (double x : xs) mean += x;
        mean /= static_cast<double>(xs.size());
        double var = 0.0;
        for (double x : xs) var += (x - mean) * (x - mean);
        var /= static_cast<double>(xs.size());  // population variance
        return std::pair{mean, var};
    };
    DatasetStats st;
    std::tie(st.avg_frame_length, st.var_frame_length) = mean_var(lengths);
    std::tie(st.avg_motion_diff, st.var_motion_diff) = mean_var(motions);
    st.count = lengths.size();
    return st;
}

}  // namespace fsa
