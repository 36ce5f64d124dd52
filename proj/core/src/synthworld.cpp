#include "egofuture/synthworld.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "egofuture/error.hpp"
#include "egofuture/rng.hpp"

namespace egofuture {

double Box::footprint_distance(double x, double z) const {
  const double dx = std::max({min.x() - x, 0.0, x - max.x()});
  const double dz = std::max({min.z() - z, 0.0, z - max.z()});
  return std::hypot(dx, dz);
}

const char* to_string(WorldTemplate t) {
  switch (t) {
    case WorldTemplate::kOpen: return "open";
    case WorldTemplate::kSingleBox: return "single-box";
    case WorldTemplate::kCorridor: return "corridor";
    case WorldTemplate::kYJunction: return "y-junction";
    case WorldTemplate::kCornerTurn: return "corner-turn";
    case WorldTemplate::kRandom: return "random";
  }
  return "unknown";
}

WorldTemplate parse_world_template(std::string_view name) {
  for (const auto t : kAllTemplates) {
    if (name == to_string(t)) return t;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown world template '" + std::string(name) + "'");
}

void World::validate() const {
  if (!(bounds.x_max > bounds.x_min) || !(bounds.z_max > bounds.z_min)) {
    throw Error(ErrorCode::kInvalidArgument, "world bounds are degenerate");
  }
  for (const auto& b : boxes) {
    if (b.min.y() != 0.0) throw Error(ErrorCode::kInvalidArgument, "boxes must stand on the ground");
    if (!(b.max.array() > b.min.array()).all()) throw Error(ErrorCode::kInvalidArgument, "box has no volume");
  }
}

const Region* World::find_region(std::string_view name) const {
  for (const auto& r : regions) {
    if (r.name == name) return &r;
  }
  return nullptr;
}

namespace {

Box make_box(double x0, double x1, double z0, double z1, double height) {
  return Box{{std::min(x0, x1), 0.0, std::min(z0, z1)}, {std::max(x0, x1), height, std::max(z0, z1)}};
}

Rect make_rect(double x0, double x1, double z0, double z1) {
  return Rect{std::min(x0, x1), std::max(x0, x1), std::min(z0, z1), std::max(z0, z1)};
}

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

constexpr double kWall = 0.3;

void build_single_box(World& w, Rng& rng) {
  w.bounds = {-15.0, 15.0, -32.0, 32.0};
  const double sx = uniform(rng, 1.0, 2.5);
  const double sz = uniform(rng, 1.0, 2.5);
  const double h = uniform(rng, 1.0, 2.0);
  const double cx = uniform(rng, -1.0, 1.0);
  const double cz = uniform(rng, -2.0, 2.0);
  w.boxes.push_back(make_box(cx - sx / 2, cx + sx / 2, cz - sz / 2, cz + sz / 2, h));
  w.regions.push_back({"start", "endpoint", make_rect(-3.0, 3.0, -31.0, -28.0)});
  w.regions.push_back({"goal", "endpoint", make_rect(-3.0, 3.0, 28.0, 31.0)});
}

void build_corridor(World& w, Rng& rng) {
  const double width = uniform(rng, 4.0, 7.0);
  const double length = uniform(rng, 65.0, 80.0);
  const double h = uniform(rng, 2.5, 3.5);
  const double hw = width / 2;
  w.bounds = {-hw, hw, 0.0, length};
  w.boxes.push_back(make_box(-hw - kWall, -hw, -kWall, length + kWall, h));
  w.boxes.push_back(make_box(hw, hw + kWall, -kWall, length + kWall, h));
  w.boxes.push_back(make_box(-hw, hw, -kWall, 0.0, h));
  w.boxes.push_back(make_box(-hw, hw, length, length + kWall, h));
  const int pillars = std::uniform_int_distribution<int>(0, 3)(rng);
  for (int i = 0; i < pillars; ++i) {
    const double s = uniform(rng, 0.4, 1.0);
    const double z = uniform(rng, 8.0, length - 8.0);
    const double x0 = (i % 2 == 0) ? -hw : hw - s;
    w.boxes.push_back(make_box(x0, x0 + s, z, z + s, uniform(rng, 1.0, 2.5)));
  }
  w.regions.push_back({"start", "endpoint", make_rect(-hw + 1.0, hw - 1.0, 0.8, 3.0)});
  w.regions.push_back({"goal", "endpoint", make_rect(-hw + 1.0, hw - 1.0, length - 3.0, length - 0.8)});
}

void build_y_junction(World& w, Rng& rng) {
  const double stem_w = uniform(rng, 5.0, 7.0);
  const double stem_l = uniform(rng, 28.0, 32.0);
  const double junction = uniform(rng, 4.0, 6.0);
  const double divider = uniform(rng, 3.0, 5.0);
  const double branch_w = uniform(rng, 5.0, 7.0);
  const double branch_l = uniform(rng, 32.0, 36.0);
  const double h = uniform(rng, 2.5, 4.0);
  const double half = divider / 2 + branch_w;
  const double z_j = stem_l;
  const double z_b = stem_l + junction;
  const double z_end = z_b + branch_l;
  w.bounds = {-half, half, 0.0, z_end};
  w.boxes.push_back(make_box(-half - kWall, -stem_w / 2, -kWall, z_j, h));
  w.boxes.push_back(make_box(stem_w / 2, half + kWall, -kWall, z_j, h));
  w.boxes.push_back(make_box(-stem_w / 2, stem_w / 2, -kWall, 0.0, h));
  w.boxes.push_back(make_box(-half - kWall, -half, z_j, z_end + kWall, h));
  w.boxes.push_back(make_box(half, half + kWall, z_j, z_end + kWall, h));
  w.boxes.push_back(make_box(-divider / 2, divider / 2, z_b, z_end + kWall, h));
  w.boxes.push_back(make_box(-half, -divider / 2, z_end, z_end + kWall, h));
  w.boxes.push_back(make_box(divider / 2, half, z_end, z_end + kWall, h));
  w.regions.push_back({"stem", "stem", make_rect(-stem_w / 2, stem_w / 2, 0.0, z_j)});
  w.regions.push_back({"junction", "junction", make_rect(-half, half, z_j, z_b)});
  w.regions.push_back({"branch_pos_x", "branch", make_rect(divider / 2, half, z_b, z_end)});
  w.regions.push_back({"branch_neg_x", "branch", make_rect(-half, -divider / 2, z_b, z_end)});
}

void build_corner_turn(World& w, Rng& rng) {
  const double width = uniform(rng, 6.0, 9.0);
  const double leg1 = uniform(rng, 32.0, 40.0);
  const double leg2 = uniform(rng, 32.0, 40.0);
  const double h = uniform(rng, 2.5, 3.5);
  const double block_h = uniform(rng, 3.0, 5.0);
  const double s = std::bernoulli_distribution(0.5)(rng) ? 1.0 : -1.0;
  const double far = width + leg2;
  const double top = leg1 + width;
  w.bounds = make_rect(0.0, s * far, 0.0, top);
  w.boxes.push_back(make_box(0.0, -s * kWall, -kWall, top + kWall, h));
  w.boxes.push_back(make_box(-s * kWall, s * (far + kWall), top, top + kWall, h));
  w.boxes.push_back(make_box(s * width, s * (far + kWall), -kWall, leg1, block_h));
  w.boxes.push_back(make_box(0.0, s * width, -kWall, 0.0, h));
  w.boxes.push_back(make_box(s * far, s * (far + kWall), leg1, top, h));
  w.regions.push_back({"leg1", "leg", make_rect(0.0, s * width, 0.0, leg1)});
  w.regions.push_back({"corner", "corner", make_rect(0.0, s * width, leg1, top)});
  w.regions.push_back({"leg2", "leg", make_rect(s * width, s * far, leg1, top)});
}

void build_random(World& w, const WorldParams& p, Rng& rng) {
  w.bounds = {-30.0, 30.0, -30.0, 30.0};
  const int count = std::uniform_int_distribution<int>(p.box_count_min, p.box_count_max)(rng);
  constexpr double kGap = 3.0;
  for (int i = 0; i < count; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < 200 && !placed; ++attempt) {
      const double sx = uniform(rng, p.footprint_min, p.footprint_max);
      const double sz = uniform(rng, p.footprint_min, p.footprint_max);
      const double cx = uniform(rng, w.bounds.x_min + 2.0, w.bounds.x_max - 2.0);
      const double cz = uniform(rng, w.bounds.z_min + 2.0, w.bounds.z_max - 2.0);
      const Box b = make_box(cx - sx / 2, cx + sx / 2, cz - sz / 2, cz + sz / 2, uniform(rng, p.height_min, p.height_max));
      placed = std::none_of(w.boxes.begin(), w.boxes.end(), [&](const Box& o) {
        return b.min.x() < o.max.x() + kGap && o.min.x() < b.max.x() + kGap && b.min.z() < o.max.z() + kGap &&
               o.min.z() < b.max.z() + kGap;
      });
      if (placed) w.boxes.push_back(b);
    }
    if (!placed) throw Error(ErrorCode::kGeneration, "could not place box " + std::to_string(i));
  }
}

}  // namespace

World generate_world(const WorldParams& params, std::uint64_t seed) {
  if (params.box_count_min < 0 || params.box_count_max < params.box_count_min) {
    throw Error(ErrorCode::kInvalidArgument, "invalid box count range");
  }
  if (!(params.footprint_min > 0.0) || params.footprint_max < params.footprint_min || !(params.height_min > 0.0) ||
      params.height_max < params.height_min) {
    throw Error(ErrorCode::kInvalidArgument, "invalid box size range");
  }
  World w;
  w.kind = params.kind;
  w.seed = seed;
  Rng rng(derive_seed(seed, "world"));
  switch (params.kind) {
    case WorldTemplate::kOpen: w.bounds = {-30.0, 30.0, -30.0, 30.0}; break;
    case WorldTemplate::kSingleBox: build_single_box(w, rng); break;
    case WorldTemplate::kCorridor: build_corridor(w, rng); break;
    case WorldTemplate::kYJunction: build_y_junction(w, rng); break;
    case WorldTemplate::kCornerTurn: build_corner_turn(w, rng); break;
    case WorldTemplate::kRandom: build_random(w, params, rng); break;
  }
  w.validate();
  return w;
}

void to_json(nlohmann::json& j, const World& w) {
  auto rect = [](const Rect& r) {
    return nlohmann::json{{"x_min", r.x_min}, {"x_max", r.x_max}, {"z_min", r.z_min}, {"z_max", r.z_max}};
  };
  j = nlohmann::json{{"template", to_string(w.kind)}, {"seed", w.seed}, {"bounds", rect(w.bounds)}};
  j["boxes"] = nlohmann::json::array();
  for (const auto& b : w.boxes) {
    j["boxes"].push_back({{"min", {b.min.x(), b.min.y(), b.min.z()}}, {"max", {b.max.x(), b.max.y(), b.max.z()}}});
  }
  j["regions"] = nlohmann::json::array();
  for (const auto& r : w.regions) j["regions"].push_back({{"name", r.name}, {"kind", r.kind}, {"rect", rect(r.rect)}});
}

void from_json(const nlohmann::json& j, World& w) {
  auto rect = [](const nlohmann::json& r) {
    return Rect{r.at("x_min").get<double>(), r.at("x_max").get<double>(), r.at("z_min").get<double>(),
                r.at("z_max").get<double>()};
  };
  auto vec3 = [](const nlohmann::json& a) {
    return Eigen::Vector3d(a.at(0).get<double>(), a.at(1).get<double>(), a.at(2).get<double>());
  };
  w = World{};
  w.kind = parse_world_template(j.at("template").get<std::string>());
  w.seed = j.at("seed").get<std::uint64_t>();
  w.bounds = rect(j.at("bounds"));
  for (const auto& b : j.at("boxes")) w.boxes.push_back(Box{vec3(b.at("min")), vec3(b.at("max"))});
  for (const auto& r : j.at("regions")) {
    w.regions.push_back({r.at("name").get<std::string>(), r.at("kind").get<std::string>(), rect(r.at("rect"))});
  }
  w.validate();
}

double clearance(const World& world, const Eigen::Vector2d& p) {
  double c = std::min({p.x() - world.bounds.x_min, world.bounds.x_max - p.x(), p.y() - world.bounds.z_min,
                       world.bounds.z_max - p.y()});
  for (const auto& b : world.boxes) {
    if (b.contains_ground(p.x(), p.y())) {
      c = std::min(c, -std::min({p.x() - b.min.x(), b.max.x() - p.x(), p.y() - b.min.z(), b.max.z() - p.y()}));
    } else {
      c = std::min(c, b.footprint_distance(p.x(), p.y()));
    }
  }
  return c;
}

bool point_clear(const World& world, const Eigen::Vector2d& p, double radius) { return clearance(world, p) >= radius; }

bool segment_clear(const World& world, const Eigen::Vector2d& a, const Eigen::Vector2d& b, double radius) {
  const double length = (b - a).norm();
  const int steps = std::max(1, static_cast<int>(std::ceil(length / 0.02)));
  for (int i = 0; i <= steps; ++i) {
    if (!point_clear(world, a + (b - a) * (static_cast<double>(i) / steps), radius)) return false;
  }
  return true;
}

}  // namespace egofuture
