#include "telepresence/placement.hpp"

#include <algorithm>
#include <chrono>
#include <limits>
#include <random>
#include <thread>

#include "telepresence/error.hpp"

namespace telepresence {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

CategoryDistances nearest_by_category(const std::vector<ObjectDistance>& sorted) {
    CategoryDistances out;
    for (const auto& od : sorted) out.try_emplace(od.category, od.distance);
    return out;
}

std::optional<InterpersonalFeature> interpersonal(const Placement& subject, const std::optional<Placement>& partner) {
    if (!partner) return std::nullopt;
    const Vec2 offset = rotate_yaw({partner->x - subject.x, partner->z - subject.z}, -subject.yaw);
    return InterpersonalFeature{offset, wrap_pi(partner->yaw - subject.yaw)};
}

FeatureVector features_with_spatial(const Room& room, const Placement& subject,
                                    const std::optional<Placement>& partner, const CategoryDistances& spatial) {
    const Vec3 floor{subject.x, 0.0, subject.z};
    FeatureVector f;
    f.interpersonal = interpersonal(subject, partner);
    f.pose_accommodation = height_map(room, floor, kIntimateRadius, kDefaultHeightCell, subject.yaw);
    f.visual_attention = nearest_by_category(
        objects_in_fov(room, floor, yaw_forward(subject.yaw), kAttentionHalfAngle, Projection::Horizontal));
    f.spatial = spatial;
    return f;
}

CategoryDistances spatial_at(const Room& room, double x, double z) {
    return nearest_by_category(objects_in_radius(room, {x, 0.0, z}, kSocialRadius));
}

double category_similarity(const CategoryDistances& user, const CategoryDistances& cand, double lambda) {
    if (user.empty() && cand.empty()) return 1.0;
    double sum = 0.0;
    int count = 0;
    auto u = user.begin();
    auto c = cand.begin();
    // Merge walk over the union of categories; one-sided categories contribute 0.
    while (u != user.end() || c != cand.end()) {
        ++count;
        if (c == cand.end() || (u != user.end() && u->first < c->first)) {
            ++u;
        } else if (u == user.end() || c->first < u->first) {
            ++c;
        } else {
            sum += std::exp(-std::abs(u->second - c->second) / lambda);
            ++u;
            ++c;
        }
    }
    return sum / count;
}

double height_similarity(const HeightMap& a, const HeightMap& b, double sigma) {
    if (a.half != b.half || std::abs(a.cell_size - b.cell_size) > 1e-6 || a.heights.size() != b.heights.size()) {
        throw Error(ErrorCode::InvalidConfig, "height maps have different layouts");
    }
    double sq = 0.0;
    int n = 0;
    for (std::size_t i = 0; i < a.heights.size(); ++i) {
        if (!a.valid[i] || !b.valid[i]) continue;
        const double d = a.heights[i] - b.heights[i];
        sq += d * d;
        ++n;
    }
    if (n == 0) return 1.0;
    return std::exp(-std::sqrt(sq / n) / sigma);
}

struct GridKey {
    int ix = 0;
    int iz = 0;
    int iyaw = 0;
    Pose pose = Pose::Standing;

    auto operator<=>(const GridKey&) const = default;
};

struct GridBest {
    bool found = false;
    double score = kNegInf;
    GridKey key;
    Placement placement;

    void offer(double s, const GridKey& k, const Placement& p) {
        if (!found || s > score || (s == score && k < key)) {
            found = true;
            score = s;
            key = k;
            placement = p;
        }
    }
    void merge(const GridBest& other) {
        if (other.found) offer(other.score, other.key, other.placement);
    }
};

struct GridAxes {
    int nx = 0;
    int nz = 0;
    double x(int i, const Room& r, double spacing) const { return r.extents.min.x + (i + 0.5) * spacing; }
    double z(int i, const Room& r, double spacing) const { return r.extents.min.z + (i + 0.5) * spacing; }
};

GridAxes axes_for(const Room& room, const GridConfig& cfg) {
    if (!(cfg.spacing > 0.0) || cfg.orientations < 1 || cfg.shards < 1) {
        throw Error(ErrorCode::InvalidConfig, "grid spacing, orientations and shards must be positive");
    }
    return {static_cast<int>(std::floor(room.extents.width() / cfg.spacing + 1e-9)),
            static_cast<int>(std::floor(room.extents.depth() / cfg.spacing + 1e-9))};
}

GridBest search_rows(const Room& room, const FeatureVector& user, const std::optional<Placement>& partner,
                     const SimilarityScorer& scorer, const GridConfig& cfg, const GridAxes& axes, int ix_begin,
                     int ix_end) {
    GridBest best;
    for (int ix = ix_begin; ix < ix_end; ++ix) {
        const double x = axes.x(ix, room, cfg.spacing);
        for (int iz = 0; iz < axes.nz; ++iz) {
            const double z = axes.z(iz, room, cfg.spacing);
            const bool stand = feasible(room, {x, z, 0.0, Pose::Standing});
            const bool sit = feasible(room, {x, z, 0.0, Pose::Sitting});
            if (!stand && !sit) continue;
            const CategoryDistances spatial = spatial_at(room, x, z);
            for (int iyaw = 0; iyaw < cfg.orientations; ++iyaw) {
                const double yaw = kTwoPi * iyaw / cfg.orientations;
                const FeatureVector f = features_with_spatial(room, {x, z, yaw, Pose::Standing}, partner, spatial);
                const double s = scorer.score(user, f);
                if (stand) best.offer(s, {ix, iz, iyaw, Pose::Standing}, {x, z, yaw, Pose::Standing});
                if (sit) best.offer(s, {ix, iz, iyaw, Pose::Sitting}, {x, z, yaw, Pose::Sitting});
            }
        }
    }
    return best;
}

class UnitRng {
public:
    explicit UnitRng(std::uint64_t seed) : engine_(seed) {}
    // 53-bit uniform in [0, 1); independent of the standard library's distribution algorithms.
    double next() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * next(); }

private:
    std::mt19937_64 engine_;
};

}  // namespace

std::string_view to_string(Pose pose) { return pose == Pose::Standing ? "Standing" : "Sitting"; }

FeatureVector extract_features(const Room& room, const Placement& subject, const std::optional<Placement>& partner) {
    if (!room.extents.contains(subject.x, subject.z)) {
        throw Error(ErrorCode::SubjectOutsideRoom, "subject placement lies outside room '" + room.id + "'");
    }
    return features_with_spatial(room, subject, partner, spatial_at(room, subject.x, subject.z));
}

void SimilarityParams::validate() const {
    double sum = 0.0;
    for (const double w : weights) {
        if (!(w >= 0.0)) throw Error(ErrorCode::InvalidWeights, "weights must be nonnegative");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw Error(ErrorCode::InvalidWeights, "weights must sum to 1");
    if (!(sigma_position > 0.0 && sigma_facing > 0.0 && sigma_height > 0.0 && lambda_distance > 0.0)) {
        throw Error(ErrorCode::InvalidConfig, "similarity scales must be positive");
    }
}

double default_similarity(const FeatureVector& user, const FeatureVector& candidate, const SimilarityParams& params) {
    params.validate();
    double s1 = 0.0;
    if (!user.interpersonal && !candidate.interpersonal) {
        s1 = 1.0;
    } else if (user.interpersonal && candidate.interpersonal) {
        const auto& a = *user.interpersonal;
        const auto& b = *candidate.interpersonal;
        const double dp = std::hypot(a.offset.x - b.offset.x, a.offset.z - b.offset.z);
        const double df = std::abs(wrap_pi(a.facing - b.facing));
        s1 = std::exp(-(dp / params.sigma_position + df / params.sigma_facing));
    }
    const double s2 = height_similarity(user.pose_accommodation, candidate.pose_accommodation, params.sigma_height);
    const double s3 = category_similarity(user.visual_attention, candidate.visual_attention, params.lambda_distance);
    const double s4 = category_similarity(user.spatial, candidate.spatial, params.lambda_distance);
    const auto& w = params.weights;
    return std::clamp(w[0] * s1 + w[1] * s2 + w[2] * s3 + w[3] * s4, 0.0, 1.0);
}

DefaultScorer::DefaultScorer(SimilarityParams params) : params_(params) { params_.validate(); }

double DefaultScorer::score(const FeatureVector& user, const FeatureVector& candidate) const {
    return default_similarity(user, candidate, params_);
}

const SceneObject* supporting_seat(const Room& room, const Placement& p) {
    for (const auto& object : room.objects) {
        if (!object.sittable || object.sit_height < 0.2 || object.sit_height > 0.8) continue;
        bool covered = object.footprint_contains(p.x, p.z);
        for (int k = 0; covered && k < 8; ++k) {
            const double a = kTwoPi * k / 8.0;
            covered = object.footprint_contains(p.x + kSittingFootprint * std::cos(a),
                                                p.z + kSittingFootprint * std::sin(a));
        }
        if (covered) return &object;
    }
    return nullptr;
}

bool feasible(const Room& room, const Placement& p) {
    if (!std::isfinite(p.x) || !std::isfinite(p.z) || !room.extents.contains(p.x, p.z)) return false;
    if (p.pose == Pose::Sitting) return supporting_seat(room, p) != nullptr;
    // the body footprint must stay clear of the walls too
    const Extents2& e = room.extents;
    if (p.x < e.min.x + kStandingFootprint || p.x > e.max.x - kStandingFootprint || p.z < e.min.z + kStandingFootprint ||
        p.z > e.max.z - kStandingFootprint) {
        return false;
    }
    const HeightMap footprint = height_map(room, {p.x, 0.0, p.z}, kStandingFootprint, kDefaultHeightCell);
    for (std::size_t i = 0; i < footprint.heights.size(); ++i) {
        if (footprint.valid[i] && footprint.heights[i] > kStandingClearance) return false;
    }
    return true;
}

std::vector<Placement> grid_candidates(const Room& room, Pose pose, const GridConfig& cfg) {
    const GridAxes axes = axes_for(room, cfg);
    std::vector<Placement> out;
    out.reserve(static_cast<std::size_t>(axes.nx) * axes.nz * cfg.orientations);
    for (int ix = 0; ix < axes.nx; ++ix) {
        for (int iz = 0; iz < axes.nz; ++iz) {
            for (int iyaw = 0; iyaw < cfg.orientations; ++iyaw) {
                out.push_back({axes.x(ix, room, cfg.spacing), axes.z(iz, room, cfg.spacing),
                               kTwoPi * iyaw / cfg.orientations, pose});
            }
        }
    }
    return out;
}

ScoredPlacement grid_search(const Room& room, const FeatureVector& user, const std::optional<Placement>& partner,
                            const SimilarityScorer& scorer, const GridConfig& cfg) {
    const GridAxes axes = axes_for(room, cfg);
    const int shards = std::max(1, std::min(cfg.shards, axes.nx));
    std::vector<GridBest> partial(static_cast<std::size_t>(shards));
    auto run_shard = [&](int s) {
        partial[static_cast<std::size_t>(s)] = search_rows(room, user, partner, scorer, cfg, axes,
                                                           s * axes.nx / shards, (s + 1) * axes.nx / shards);
    };
    if (shards == 1) {
        run_shard(0);
    } else {
        std::vector<std::thread> workers;
        workers.reserve(static_cast<std::size_t>(shards));
        for (int s = 0; s < shards; ++s) workers.emplace_back(run_shard, s);
        for (auto& t : workers) t.join();
    }
    GridBest best;
    for (const auto& p : partial) best.merge(p);
    if (!best.found) throw Error(ErrorCode::NoFeasiblePlacement, "no feasible grid placement in room '" + room.id + "'");
    return {best.placement, best.score};
}

void PsoConfig::validate() const {
    if (particles < 1 || iterations < 0) throw Error(ErrorCode::InvalidConfig, "PSO needs particles >= 1, iterations >= 0");
    if (!(inertia >= 0.0 && cognitive >= 0.0 && social >= 0.0)) {
        throw Error(ErrorCode::InvalidConfig, "PSO coefficients must be nonnegative");
    }
    if (!(radius >= 0.0 && yaw_radius >= 0.0)) throw Error(ErrorCode::InvalidConfig, "PSO radii must be nonnegative");
}

ScoredPlacement pso_refine(const Room& room, const Placement& seed, const FeatureVector& user,
                           const std::optional<Placement>& partner, const SimilarityScorer& scorer,
                           const PsoConfig& cfg) {
    cfg.validate();
    auto evaluate = [&](const std::array<double, 3>& pos) {
        const Placement p{pos[0], pos[1], wrap_two_pi(pos[2]), seed.pose};
        if (!feasible(room, p)) return kNegInf;
        return scorer.score(user, extract_features(room, p, partner));
    };
    const std::array<double, 3> seed_pos{seed.x, seed.z, seed.yaw};
    const double seed_score = evaluate(seed_pos);
    if (seed_score == kNegInf) throw Error(ErrorCode::NoFeasiblePlacement, "PSO seed placement is infeasible");
    if (cfg.iterations == 0) return {seed, seed_score};

    const std::array<double, 3> lo{std::max(room.extents.min.x, seed.x - cfg.radius),
                                   std::max(room.extents.min.z, seed.z - cfg.radius), seed.yaw - cfg.yaw_radius};
    const std::array<double, 3> hi{std::min(room.extents.max.x, seed.x + cfg.radius),
                                   std::min(room.extents.max.z, seed.z + cfg.radius), seed.yaw + cfg.yaw_radius};

    struct Particle {
        std::array<double, 3> pos;
        std::array<double, 3> vel;
        std::array<double, 3> best_pos;
        double best_score;
    };

    UnitRng rng(cfg.seed);
    std::vector<Particle> swarm(static_cast<std::size_t>(cfg.particles));
    std::array<double, 3> global_pos = seed_pos;
    double global_score = seed_score;
    for (std::size_t i = 0; i < swarm.size(); ++i) {
        Particle& p = swarm[i];
        for (int d = 0; d < 3; ++d) {
            const double range = hi[d] - lo[d];
            p.pos[d] = i == 0 ? seed_pos[d] : rng.uniform(lo[d], hi[d]);
            p.vel[d] = i == 0 ? 0.0 : rng.uniform(-0.25 * range, 0.25 * range);
        }
        p.best_pos = p.pos;
        p.best_score = i == 0 ? seed_score : evaluate(p.pos);
        if (p.best_score > global_score) {
            global_score = p.best_score;
            global_pos = p.best_pos;
        }
    }

    for (int it = 0; it < cfg.iterations; ++it) {
        for (auto& p : swarm) {
            for (int d = 0; d < 3; ++d) {
                const double vmax = 0.5 * (hi[d] - lo[d]);
                double v = cfg.inertia * p.vel[d] + cfg.cognitive * rng.next() * (p.best_pos[d] - p.pos[d]) +
                           cfg.social * rng.next() * (global_pos[d] - p.pos[d]);
                v = std::clamp(v, -vmax, vmax);
                p.vel[d] = v;
                p.pos[d] = std::clamp(p.pos[d] + v, lo[d], hi[d]);
            }
            const double s = evaluate(p.pos);
            if (s > p.best_score) {
                p.best_score = s;
                p.best_pos = p.pos;
            }
        }
        for (const auto& p : swarm) {
            if (p.best_score > global_score) {
                global_score = p.best_score;
                global_pos = p.best_pos;
            }
        }
    }
    if (global_pos == seed_pos) return {seed, seed_score};
    return {{global_pos[0], global_pos[1], wrap_two_pi(global_pos[2]), seed.pose}, global_score};
}

PlacementResult find_placement(const Room& remote_room, const FeatureVector& user,
                               const std::optional<Placement>& partner, const SimilarityScorer& scorer,
                               const PlacementConfig& cfg) {
    using Clock = std::chrono::steady_clock;
    PlacementResult result;
    const auto t0 = Clock::now();
    const ScoredPlacement grid = grid_search(remote_room, user, partner, scorer, cfg.grid);
    const auto t1 = Clock::now();
    const ScoredPlacement refined = pso_refine(remote_room, grid.placement, user, partner, scorer, cfg.pso);
    const auto t2 = Clock::now();
    result.grid_placement = grid.placement;
    result.grid_score = grid.score;
    result.placement = refined.placement;
    result.pso_score = refined.score;
    result.grid_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    result.pso_ms = std::chrono::duration<double, std::milli>(t2 - t1).count();
    return result;
}

}  // namespace telepresence
