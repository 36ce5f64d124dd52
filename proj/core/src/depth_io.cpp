#include "egofuture/depth_io.hpp"

#include "egofuture/binary_io.hpp"
#include "egofuture/error.hpp"

namespace egofuture {

namespace {

binary::Writer encode(const DepthImage& depth) {
  const auto& k = depth.intrinsics();
  binary::Writer w;
  w.bytes("EGOD");
  w.u32(kEgodVersion);
  w.u32(static_cast<std::uint32_t>(k.width));
  w.u32(static_cast<std::uint32_t>(k.height));
  w.f32(static_cast<float>(k.fx));
  w.f32(static_cast<float>(k.fy));
  w.f32(static_cast<float>(k.cx));
  w.f32(static_cast<float>(k.cy));
  for (double z : depth.data()) w.f32(static_cast<float>(z));
  return w;
}

DepthImage decode(binary::Reader& r) {
  if (r.bytes(4) != "EGOD") throw Error(ErrorCode::kFormat, "bad EGOD magic");
  const std::uint32_t version = r.u32();
  if (version != kEgodVersion) throw Error(ErrorCode::kFormat, "unsupported EGOD version " + std::to_string(version));
  CameraIntrinsics k;
  k.width = static_cast<int>(r.u32());
  k.height = static_cast<int>(r.u32());
  k.fx = r.f32();
  k.fy = r.f32();
  k.cx = r.f32();
  k.cy = r.f32();
  const std::size_t count = static_cast<std::size_t>(k.width) * static_cast<std::size_t>(k.height);
  if (r.remaining() != count * 4) throw Error(ErrorCode::kFormat, "EGOD payload size does not match header");
  std::vector<double> depth(count);
  for (auto& z : depth) z = r.f32();
  return DepthImage(k, std::move(depth));
}

}  // namespace

std::vector<std::uint8_t> encode_egod(const DepthImage& depth) { return encode(depth).buffer(); }

DepthImage decode_egod(std::vector<std::uint8_t> bytes) {
  binary::Reader r(std::move(bytes));
  return decode(r);
}

void write_egod(const std::filesystem::path& path, const DepthImage& depth) { encode(depth).save(path); }

DepthImage read_egod(const std::filesystem::path& path) {
  auto r = binary::Reader::open(path);
  return decode(r);
}

}  // namespace egofuture
