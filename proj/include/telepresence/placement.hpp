#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "telepresence/geometry.hpp"
#include "telepresence/scene.hpp"

namespace telepresence {

enum class Pose : std::uint8_t { Standing, Sitting };

std::string_view to_string(Pose pose);

/// Avatar location on the floor plan.
struct Placement {
    double x = 0.0;
    double z = 0.0;
    double yaw = 0.0;  // [0, 2pi)
    Pose pose = Pose::Standing;

    friend bool operator==(const Placement&, const Placement&) = default;
};

inline constexpr double kIntimateRadius = 0.5;
inline constexpr double kSocialRadius = 3.0;
inline constexpr double kAttentionHalfAngle = deg_to_rad(20.0);

struct InterpersonalFeature {
    Vec2 offset;          // partner position in the subject's frame (x right, z forward)
    double facing = 0.0;  // partner yaw minus subject yaw, (-pi, pi]

    friend bool operator==(const InterpersonalFeature&, const InterpersonalFeature&) = default;
};

using CategoryDistances = std::map<ObjectCategory, double>;

struct FeatureVector {
    std::optional<InterpersonalFeature> interpersonal;
    HeightMap pose_accommodation;  // intimate space, subject-aligned
    CategoryDistances visual_attention;
    CategoryDistances spatial;
};

FeatureVector extract_features(const Room& room, const Placement& subject, const std::optional<Placement>& partner);

/// Pluggable placement similarity. Implementations must be pure and thread-safe, with
/// score(f, f) == 1.
class SimilarityScorer {
public:
    virtual ~SimilarityScorer() = default;
    virtual double score(const FeatureVector& user, const FeatureVector& candidate) const = 0;
};

struct SimilarityParams {
    // interpersonal, pose accommodation, visual attention, spatial
    std::array<double, 4> weights{0.25, 0.25, 0.25, 0.25};
    double sigma_position = 1.0;      // meters
    double sigma_facing = kPi / 2.0;  // radians
    double sigma_height = 0.3;        // meters
    double lambda_distance = 1.0;     // meters

    void validate() const;
};

/// Heuristic stand-in for a learned similarity: a weighted sum of four per-group scores in [0, 1].
double default_similarity(const FeatureVector& user, const FeatureVector& candidate, const SimilarityParams& params);

class DefaultScorer final : public SimilarityScorer {
public:
    explicit DefaultScorer(SimilarityParams params = {});
    double score(const FeatureVector& user, const FeatureVector& candidate) const override;
    const SimilarityParams& params() const { return params_; }

private:
    SimilarityParams params_;
};

inline constexpr double kStandingFootprint = 0.2;
inline constexpr double kStandingClearance = 0.05;
inline constexpr double kSittingFootprint = 0.1;

/// Seat supporting a sitting placement, if any.
const SceneObject* supporting_seat(const Room& room, const Placement& p);

/// Standing needs clear floor (<= 5 cm) across a 0.2 m disc inside the walls; sitting needs a seat at
/// 0.2-0.8 m covering a 0.1 m disc.
bool feasible(const Room& room, const Placement& p);

struct GridConfig {
    double spacing = 0.25;
    int orientations = 24;
    int shards = 1;  // partial maps evaluated in parallel
};

/// Every (x, z, yaw) grid tuple for one pose, before feasibility filtering, in lexicographic order.
std::vector<Placement> grid_candidates(const Room& room, Pose pose, const GridConfig& cfg = {});

struct ScoredPlacement {
    Placement placement;
    double score = 0.0;
};

/// Best feasible grid placement; ties go to the lexicographically least (x, z, yaw, pose).
ScoredPlacement grid_search(const Room& room, const FeatureVector& user, const std::optional<Placement>& partner,
                            const SimilarityScorer& scorer, const GridConfig& cfg = {});

struct PsoConfig {
    int particles = 64;
    int iterations = 30;
    double inertia = 0.72;
    double cognitive = 1.49;
    double social = 1.49;
    double radius = 0.5;                    // meters around the seed
    double yaw_radius = deg_to_rad(30.0);   // radians around the seed
    std::uint64_t seed = 1;

    void validate() const;
};

/// Global-best particle swarm over (x, z, yaw) near `seed`, pose fixed. Never returns a lower score
/// than the seed's.
ScoredPlacement pso_refine(const Room& room, const Placement& seed, const FeatureVector& user,
                           const std::optional<Placement>& partner, const SimilarityScorer& scorer,
                           const PsoConfig& cfg = {});

struct PlacementConfig {
    GridConfig grid;
    PsoConfig pso;
};

struct PlacementResult {
    Placement grid_placement;
    double grid_score = 0.0;
    Placement placement;
    double pso_score = 0.0;
    double grid_ms = 0.0;
    double pso_ms = 0.0;
};

PlacementResult find_placement(const Room& remote_room, const FeatureVector& user,
                               const std::optional<Placement>& partner, const SimilarityScorer& scorer,
                               const PlacementConfig& cfg = {});

}  // namespace telepresence
