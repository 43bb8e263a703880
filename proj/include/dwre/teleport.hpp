#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "dwre/config.hpp"
#include "dwre/estimators.hpp"
#include "dwre/lattice.hpp"

namespace dwre::cont {

using Vec = std::vector<double>;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// iid law of the field value on each open unit cell [z, z+1)^d.
struct FieldModel {
  std::size_t dimension = 2;
  std::vector<Vec> vectors;
  std::vector<double> probabilities;
  double bound = 1.0;   // L, every |v| <= L
  double delta0 = 0.0;  // directional constant
  double c = 0.0;       // cell ellipticity
};

struct TeleportConfig {
  double radius = 0.0;     // r
  double dwell = 0.0;      // t_0
  double skip = 0.5;       // c_3, probability that Y_j is the "stay" symbol
  double intensity = 0.0;  // lambda_0 per cell and jump type
  std::vector<Vec> jumps;  // u_1..u_m
};

/// Unit directions scaled to L: {+-1} for d = 1, the 8 compass directions
/// for d = 2, +-e_i and the 8 diagonals for d = 3, +-e_i otherwise.
/// delta0 is half the ellipticity constant of the set, c = 1/m.
FieldModel default_field_model(std::size_t dim, double bound = 1.0);

/// r = 0.85/(4 sqrt d), t_0 = 0.8 r/(4L), jumps (2d+1) e_i.
TeleportConfig default_teleport_config(std::size_t dim, double bound = 1.0);

/// One message per violated bound; empty when usable.
std::vector<std::string> validate_field(const FieldModel& field);
std::vector<std::string> validate_teleports(const TeleportConfig& tele, std::size_t dim, double bound);

struct Ball {
  Vec center;
  std::size_t type = 0;
  std::uint64_t id = 0;
};

/// Environment of the continuous process. All randomness is a pure function
/// of (seed, cell) or (seed, index); overrides pin cells for constructed
/// scenarios.
class TeleportWorld {
 public:
  /// Throws std::invalid_argument naming every violated bound.
  TeleportWorld(FieldModel field, TeleportConfig tele, std::uint64_t seed);

  std::size_t dim() const { return data_->field.dimension; }
  const FieldModel& field() const { return data_->field; }
  const TeleportConfig& teleports() const { return data_->tele; }
  std::uint64_t seed() const { return seed_; }
  TeleportWorld with_seed(std::uint64_t seed) const;

  Vec field_at(const LatticeVector& cell) const;
  /// Teleport centres generated in a cell, all types, ordered by type.
  std::vector<Ball> balls_in(const LatticeVector& cell) const;
  Vec initial_position() const;
  /// Y_j: nullopt is the stay symbol, otherwise a point of [0,1)^d.
  std::optional<Vec> y(std::int64_t index) const;

  void set_field(const LatticeVector& cell, Vec value);
  void set_balls(const LatticeVector& cell, std::vector<Ball> balls);
  void set_initial_position(Vec x);
  void set_y(std::int64_t index, std::optional<Vec> value);

 private:
  struct Data {
    FieldModel field;
    TeleportConfig tele;
    std::vector<double> cumulative;
  };

  std::shared_ptr<const Data> data_;
  std::uint64_t seed_;
  std::unordered_map<LatticeVector, Vec, LatticeVectorHash> field_overrides_;
  std::unordered_map<LatticeVector, std::vector<Ball>, LatticeVectorHash> ball_overrides_;
  std::optional<Vec> start_override_;
  std::map<std::int64_t, std::optional<Vec>> y_overrides_;
};

/// Lattice cube whose centre is nearest to x; ties go to the smaller index.
LatticeVector nearest_cube(const Vec& x);

enum class TraceKind { segment, cell_exit, ball_enter, ball_exit, dwell_complete, jump, suppress, rest };
std::string to_string(TraceKind kind);

struct TrajectoryEvent {
  double t = 0.0;
  TraceKind kind = TraceKind::segment;
  Vec position;
  LatticeVector cell;
  std::optional<std::uint64_t> teleport_id;
  std::optional<std::int64_t> y_index;
};

/// Linear motion on [t0, t1] from x0 with velocity v, or a jump at t0 == t1
/// from x0 to x1.
struct Piece {
  double t0 = 0.0, t1 = 0.0;
  Vec x0, v, x1;
  bool jump = false;
};

struct ContinuousState {
  Vec position;
  double time = 0.0;
  std::map<std::uint64_t, double> dwell;  // ball id -> occupancy start
  std::set<std::int64_t> consumed;        // Y indices already used
};

struct ContinuousTrajectory {
  Vec start;
  double t_max = 0.0;
  std::vector<Piece> pieces;
  std::vector<TrajectoryEvent> events;
  ContinuousState final_state;
  bool trapped_at_rest = false;
  std::size_t jumps = 0;
  std::size_t suppressed = 0;
  std::size_t dwell_decisions = 0;

  /// Right-continuous position; t in [0, t_max].
  Vec position_at(double t) const;
};

struct SimulateOptions {
  bool log_events = true;
  std::size_t max_events = 50'000'000;
};

/// Event-driven integration up to t_max. Throws std::logic_error if a Y
/// index would decide a second jump and std::runtime_error on event overflow.
ContinuousTrajectory simulate(const TeleportWorld& world, double t_max, const SimulateOptions& opt = {});

/// First t with X_t . l >= u, crossing by jumps included.
std::optional<double> hitting_time(const ContinuousTrajectory& traj, const Vec& l, double u);

/// First strict downcrossing of {x . l = 0} after the path first reaches
/// x . l >= 0, by flow or by a jump.
std::optional<double> backtrack_time(const ContinuousTrajectory& traj, const Vec& l);

/// G_0 = 0, F_i = first time after G_i with X . l <= -w, G_{i+1} = first
/// time after F_i with X . l >= 0. Times past the horizon are infinite.
struct CrossingRecord {
  Vec direction;
  double width = 0.0;
  double bound = 0.0;  // L
  std::vector<double> g, f;
  /// Pair i is flow-only when no jump happens in [G_i, F_i] and X_{G_i} . l >= 0.
  std::vector<bool> flow_only;
  std::size_t checked_pairs = 0;
};

/// Throws std::logic_error when F_i - G_i < w/L on a flow-only pair, when
/// the times are not interleaved, or when F_m < w * (flow-only pairs among
/// 1..m) / L.
CrossingRecord crossing_record(const ContinuousTrajectory& traj, const Vec& l, double w, double bound);

/// Centre cube z0 (default origin) surrounded by cells whose fields point
/// at it with speed L, teleports cleared on the 3^d block. The initial
/// position is uniform in the centre cube.
TeleportWorld trap_scenario(std::size_t dim, std::uint64_t seed, const LatticeVector& centre);
TeleportWorld trap_scenario(std::size_t dim, std::uint64_t seed);

/// True when every piece stays in the closed cube [z0, z0+1]^d.
bool stays_in_cube(const ContinuousTrajectory& traj, const LatticeVector& cube, double tol = 1e-9);

/// Corridor along e_1: cells x in [0, ceil(2L)), transverse cells in
/// [-5, 4]; fields have e_1 component delta0 and transverse components of
/// size s pushing toward the axis. Cells x = -1 push in along e_1 at speed L.
struct Tunnel {
  TeleportWorld world;
  std::int64_t length = 0;  // cells along e_1
  double speed_bound = 0.0;  // 4L / delta0
};

Tunnel tunnel_scenario(std::size_t dim, std::uint64_t seed, const Vec& start);

enum class ContinuousKind { tail, hit, hit_noback };
std::string to_string(ContinuousKind kind);
ContinuousKind parse_continuous_kind(const std::string& s);

struct ContinuousCurve {
  double t = 0.0;
  Vec direction;
  ContinuousKind kind = ContinuousKind::tail;
  std::vector<RatePoint> points;
  std::size_t tail_not_hit = 0;
  std::size_t noback_not_hit = 0;

  /// Same points in the discrete container, for the shape checks.
  RateCurve as_rate_curve() const;
};

/// (1/t) log P(event) for every (t, k); one simulation to max t per sample,
/// sample i in the world with seed sample_seed(seed, i). Curves are ordered
/// by t, then by kind.
std::vector<ContinuousCurve> estimate_continuous(const TeleportWorld& base, const McOptions& opt, const Vec& l,
                                                 const std::vector<double>& ks, const std::vector<double>& ts,
                                                 const std::vector<ContinuousKind>& kinds);

/// Field model and teleport config from [field] and [teleport] sections:
///   [field]    dimension, L, delta0, c, vector = v1 v2 : prob (repeated)
///   [teleport] r, t0, c3, lambda0, jump = u1 u2 (repeated)
/// Missing sections fall back to the defaults above.
FieldModel field_from_config(const Config& cfg);
TeleportConfig teleport_from_config(const Config& cfg, const FieldModel& field);

std::string events_jsonl(const ContinuousTrajectory& traj);
std::string continuous_rate_csv(const std::vector<ContinuousCurve>& curves);

}  // namespace dwre::cont
