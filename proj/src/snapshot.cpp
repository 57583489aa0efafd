#include "ids/snapshot.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>

#include <zlib.h>

#include "ids/errors.hpp"

namespace ids {

namespace {

constexpr std::array<std::uint8_t, 4> kMagic{'I', 'D', 'S', 'X'};
constexpr std::size_t kPlaneHeaderBytes = 4 + 4 + 9 * 8 + 1;

class Writer {
 public:
  void bytes(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) { le(v, 2); }
  void u32(std::uint32_t v) { le(v, 4); }
  void f64(double v) { le(std::bit_cast<std::uint64_t>(v), 8); }
  std::vector<std::uint8_t>& data() { return out_; }

 private:
  void le(std::uint64_t v, int n) {
    for (int k = 0; k < n; ++k) out_.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
  }
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : buf_(b) {}
  std::uint8_t u8() { return static_cast<std::uint8_t>(le(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(le(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
  double f64() { return std::bit_cast<double>(le(8)); }
  std::size_t remaining() const { return buf_.size() - pos_; }

 private:
  std::uint64_t le(std::size_t n) {
    if (remaining() < n) throw SnapshotError("snapshot truncated");
    std::uint64_t v = 0;
    for (std::size_t k = 0; k < n; ++k) v |= static_cast<std::uint64_t>(buf_[pos_ + k]) << (8 * k);
    pos_ += n;
    return v;
  }
  std::span<const std::uint8_t> buf_;
  std::size_t pos_ = 0;
};

std::uint32_t checked_u32(std::size_t v, const char* what) {
  if (v > std::numeric_limits<std::uint32_t>::max()) throw std::length_error(std::string("snapshot: ") + what);
  return static_cast<std::uint32_t>(v);
}

}  // namespace

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks.
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    const std::size_t chunk = std::min<std::size_t>(bytes.size() - pos, 1u << 30);
    crc = ::crc32(crc, bytes.data() + pos, static_cast<uInt>(chunk));
    pos += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

std::vector<std::uint8_t> encode_model(const Model& model) {
  Writer w;
  w.bytes(kMagic);
  w.u16(kSnapshotVersion);
  w.u32(checked_u32(model.planes.size(), "too many planes"));
  const auto& r = model.readout;
  for (double v : {r.v_in, r.v_dd, r.r_res, r.r_x, r.delta_threshold}) w.f64(v);
  w.f64(model.pulse.v0);
  w.f64(model.pulse.t0);
  w.u32(checked_u32(model.pulse.steps, "pulse steps"));
  w.f64(model.epsilon_weight);
  for (const auto& p : model.planes) {
    w.u32(checked_u32(p.rows(), "rows"));
    w.u32(checked_u32(p.cols(), "cols"));
    const auto& d = p.params();
    for (double v : {d.r_on, d.r_off, d.d, d.mu_v, p.r_couple(), p.x_quant().lo, p.x_quant().hi, p.y_quant().lo,
                     p.y_quant().hi})
      w.f64(v);
    w.u8(p.rectify() ? 1 : 0);
  }
  for (const auto& p : model.planes)
    for (Eigen::Index i = 0; i < p.w().rows(); ++i)
      for (Eigen::Index j = 0; j < p.w().cols(); ++j) w.f64(p.w()(i, j));
  w.u32(crc32_of(w.data()));
  return std::move(w.data());
}

Model decode_model(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kMagic.size() + 2 + 4) throw SnapshotError("snapshot truncated");
  if (!std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) throw SnapshotError("not an IDS state file (bad magic)");
  const std::uint16_t version = static_cast<std::uint16_t>(bytes[4] | (bytes[5] << 8));
  if (version != kSnapshotVersion)
    throw SnapshotError("unsupported snapshot version " + std::to_string(version) + " (expected " +
                        std::to_string(kSnapshotVersion) + ")");

  const auto body = bytes.first(bytes.size() - 4);
  Reader tail(bytes.last(4));
  if (crc32_of(body) != tail.u32()) throw SnapshotError("snapshot checksum mismatch");

  try {
    Reader in(body);
    in.u32();  // magic
    in.u16();
    const std::uint32_t n_planes = in.u32();
    if (n_planes == 0) throw SnapshotError("snapshot holds no planes");
    if (static_cast<std::uint64_t>(n_planes) * kPlaneHeaderBytes > in.remaining())
      throw SnapshotError("snapshot truncated");

    Model model;
    model.readout.v_in = in.f64();
    model.readout.v_dd = in.f64();
    model.readout.r_res = in.f64();
    model.readout.r_x = in.f64();
    model.readout.delta_threshold = in.f64();
    model.pulse.v0 = in.f64();
    model.pulse.t0 = in.f64();
    model.pulse.steps = in.u32();
    model.epsilon_weight = in.f64();

    for (std::uint32_t k = 0; k < n_planes; ++k) {
      const std::uint32_t rows = in.u32();
      const std::uint32_t cols = in.u32();
      DeviceParams dp;
      dp.r_on = in.f64();
      dp.r_off = in.f64();
      dp.d = in.f64();
      dp.mu_v = in.f64();
      const double r_couple = in.f64();
      Quantizer xq{in.f64(), in.f64(), cols};
      Quantizer yq{in.f64(), in.f64(), rows};
      const bool rectify = in.u8() != 0;
      model.planes.emplace_back(rows, cols, dp, r_couple, xq, yq, rectify);
    }

    std::uint64_t cells = 0;
    for (const auto& p : model.planes) cells += static_cast<std::uint64_t>(p.rows()) * p.cols();
    if (cells * 8 != in.remaining()) throw SnapshotError("snapshot length does not match its header");

    for (auto& p : model.planes) {
      Eigen::MatrixXd w(p.w().rows(), p.w().cols());
      for (Eigen::Index i = 0; i < w.rows(); ++i)
        for (Eigen::Index j = 0; j < w.cols(); ++j) {
          w(i, j) = in.f64();
          if (!(w(i, j) >= 0.0 && w(i, j) <= p.params().d)) throw SnapshotError("snapshot state outside [0, d]");
        }
      p.assign_w(w);
    }
    model.validate();
    return model;
  } catch (const SnapshotError&) {
    throw;
  } catch (const std::exception& e) {
    throw SnapshotError(std::string("invalid snapshot contents: ") + e.what());
  }
}

void save_model(const Model& model, const std::filesystem::path& path) {
  const auto bytes = encode_model(model);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_model(bytes);
}

}  // namespace ids
