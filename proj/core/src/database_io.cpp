#include <string>

#include "egofuture/binary_io.hpp"
#include "egofuture/database.hpp"
#include "egofuture/error.hpp"

namespace egofuture {

namespace {

binary::Writer encode(const TrainingDatabase& db) {
  const GridSpec& g = db.grid();
  const TrajectoryBasis& b = db.basis();
  binary::Writer w;
  w.bytes("EGDB");
  w.u32(kEgdbVersion);
  w.u32(static_cast<std::uint32_t>(g.n_theta));
  w.u32(static_cast<std::uint32_t>(g.n_radius));
  w.f64(g.theta_min);
  w.f64(g.theta_max);
  w.f64(g.r_min);
  w.f64(g.r_max);
  w.f64(g.phi_max);
  w.u32(static_cast<std::uint32_t>(b.horizon));
  w.u32(static_cast<std::uint32_t>(b.size()));
  w.f32(static_cast<float>(b.dt));
  for (Eigen::Index i = 0; i < b.mean.size(); ++i) w.f32(static_cast<float>(b.mean(i)));
  for (Eigen::Index c = 0; c < b.basis.cols(); ++c) {
    for (Eigen::Index r = 0; r < b.basis.rows(); ++r) w.f32(static_cast<float>(b.basis(r, c)));
  }
  w.f32(static_cast<float>(db.pitch_edges()[0]));
  w.f32(static_cast<float>(db.pitch_edges()[1]));
  w.u32(static_cast<std::uint32_t>(db.size()));
  for (const auto& e : db.entries()) {
    w.u32(e.scene_id);
    w.u32(e.frame_id);
    w.u8(e.pitch_bin);
    w.f32(static_cast<float>(e.pitch));
    for (Eigen::Index i = 0; i < e.feature.size(); ++i) w.f32(static_cast<float>(e.feature(i)));
    for (Eigen::Index i = 0; i < e.beta.size(); ++i) w.f32(static_cast<float>(e.beta(i)));
    for (Eigen::Index i = 0; i < e.traj_cost.size(); ++i) w.f32(static_cast<float>(e.traj_cost(i)));
  }
  return w;
}

Eigen::VectorXd read_vector(binary::Reader& r, Eigen::Index n) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = r.f32();
  return v;
}

}  // namespace

std::vector<std::uint8_t> encode_egdb(const TrainingDatabase& db) { return encode(db).buffer(); }

TrainingDatabase decode_egdb(std::vector<std::uint8_t> bytes) {
  binary::Reader r(std::move(bytes));
  if (r.bytes(4) != "EGDB") throw Error(ErrorCode::kFormat, "bad EGDB magic");
  const std::uint32_t version = r.u32();
  if (version != kEgdbVersion) throw Error(ErrorCode::kFormat, "unsupported EGDB version " + std::to_string(version));

  GridSpec g;
  g.n_theta = static_cast<int>(r.u32());
  g.n_radius = static_cast<int>(r.u32());
  g.theta_min = r.f64();
  g.theta_max = r.f64();
  g.r_min = r.f64();
  g.r_max = r.f64();
  g.phi_max = r.f64();
  g.validate();

  TrajectoryBasis b;
  b.horizon = static_cast<int>(r.u32());
  const auto k = static_cast<Eigen::Index>(r.u32());
  b.dt = r.f32();
  const Eigen::Index dim = 2 * static_cast<Eigen::Index>(b.horizon);
  if (dim <= 0 || k <= 0 || k > dim) throw Error(ErrorCode::kFormat, "EGDB basis header is inconsistent");
  b.mean = read_vector(r, dim);
  b.basis.resize(dim, k);
  for (Eigen::Index c = 0; c < k; ++c) b.basis.col(c) = read_vector(r, dim);

  PitchEdges edges{static_cast<double>(r.f32()), static_cast<double>(r.f32())};
  const std::uint32_t count = r.u32();
  const std::size_t entry_bytes = 4 + 4 + 1 + 4 + 4 * static_cast<std::size_t>(g.cell_count() + k + b.horizon);
  if (r.remaining() != entry_bytes * count) throw Error(ErrorCode::kFormat, "EGDB entry payload size mismatch");

  std::vector<TrainingEntry> entries(count);
  for (auto& e : entries) {
    e.scene_id = r.u32();
    e.frame_id = r.u32();
    e.pitch_bin = r.u8();
    e.pitch = r.f32();
    e.feature = read_vector(r, g.cell_count());
    e.beta = read_vector(r, k);
    e.traj_cost = read_vector(r, b.horizon);
  }
  return TrainingDatabase(g, std::move(b), edges, std::move(entries));
}

void save_database(const std::filesystem::path& path, const TrainingDatabase& db) { encode(db).save(path); }

TrainingDatabase load_database(const std::filesystem::path& path) {
  return decode_egdb(binary::read_file(path));
}

}  // namespace egofuture
