#include "adobi/mrid_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace adobi {
namespace {

constexpr char kMagic[4] = {'M', 'R', 'I', 'D'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path)
      : stream_(path, std::ios::binary | std::ios::trunc) {
    if (!stream_) throw FormatError("cannot open for writing: " + path.string(), 0);
  }
  void bytes(const void* data, std::size_t n) {
    stream_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
    if (!stream_) throw FormatError("write failed", offset_);
    offset_ += n;
  }
  void u8(std::uint8_t v) { bytes(&v, 1); }
  void u32(std::uint32_t v) {
    std::uint8_t b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<std::uint8_t>(v >> (8 * i));
    bytes(b, 4);
  }
  void u64(std::uint64_t v) {
    std::uint8_t b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<std::uint8_t>(v >> (8 * i));
    bytes(b, 8);
  }
  void f32(float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    u32(bits);
  }
  void complex64(const Complex& v) {
    f32(static_cast<float>(v.real()));
    f32(static_cast<float>(v.imag()));
  }
  void header(MridKind kind, MridDtype dtype, const std::vector<std::uint64_t>& dims) {
    bytes(kMagic, 4);
    u32(kVersion);
    u8(static_cast<std::uint8_t>(kind));
    u32(static_cast<std::uint32_t>(dims.size()));
    for (std::uint64_t d : dims) u64(d);
    u8(static_cast<std::uint8_t>(dtype));
  }

 private:
  std::ofstream stream_;
  std::uint64_t offset_ = 0;
};

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path)
      : stream_(path, std::ios::binary) {
    if (!stream_) throw FormatError("cannot open for reading: " + path.string(), 0);
  }
  std::uint64_t offset() const { return offset_; }
  void bytes(void* data, std::size_t n) {
    stream_.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
    if (stream_.gcount() != static_cast<std::streamsize>(n))
      throw FormatError("truncated file", offset_);
    offset_ += n;
  }
  std::uint8_t u8() {
    std::uint8_t v;
    bytes(&v, 1);
    return v;
  }
  std::uint32_t u32() {
    std::uint8_t b[4];
    bytes(b, 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    std::uint8_t b[8];
    bytes(b, 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
  }
  float f32() {
    const std::uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
  Complex complex64() {
    const float re = f32();
    const float im = f32();
    return {static_cast<double>(re), static_cast<double>(im)};
  }
  MridHeader header() {
    char magic[4];
    bytes(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0)
      throw FormatError("bad magic; not an MRID file", 0);
    MridHeader h;
    h.version = u32();
    if (h.version != kVersion)
      throw FormatError("unsupported version " + std::to_string(h.version), 4);
    const std::uint8_t kind = u8();
    if (kind > static_cast<std::uint8_t>(MridKind::kDenoiser))
      throw FormatError("unknown kind " + std::to_string(kind), 8);
    h.kind = static_cast<MridKind>(kind);
    const std::uint32_t ndim = u32();
    if (ndim == 0 || ndim > 8) throw FormatError("implausible ndim", 9);
    for (std::uint32_t i = 0; i < ndim; ++i) {
      const std::uint64_t d = u64();
      if (d == 0 || d > (1ull << 32)) throw FormatError("implausible dim", offset_ - 8);
      h.dims.push_back(d);
    }
    const std::uint8_t dtype = u8();
    if (dtype > static_cast<std::uint8_t>(MridDtype::kUint8))
      throw FormatError("unknown dtype " + std::to_string(dtype), offset_ - 1);
    h.dtype = static_cast<MridDtype>(dtype);
    return h;
  }
  void expect_eof() {
    char extra;
    stream_.read(&extra, 1);
    if (stream_.gcount() != 0)
      throw FormatError("trailing bytes after payload", offset_);
  }

 private:
  std::ifstream stream_;
  std::uint64_t offset_ = 0;
};

void expect(bool cond, const std::string& what, std::uint64_t offset) {
  if (!cond) throw FormatError(what, offset);
}

}  // namespace

MridHeader mrid_peek(const std::filesystem::path& path) {
  Reader r(path);
  return r.header();
}

void save_image(const std::filesystem::path& path, const ComplexImage& image) {
  Writer w(path);
  w.header(MridKind::kImage, MridDtype::kComplex64,
           {static_cast<std::uint64_t>(image.height()),
            static_cast<std::uint64_t>(image.width())});
  for (std::size_t i = 0; i < image.size(); ++i) w.complex64(image.data()[i]);
}

ComplexImage load_image(const std::filesystem::path& path) {
  Reader r(path);
  const MridHeader h = r.header();
  expect(h.kind == MridKind::kImage, "expected an image file", 8);
  expect(h.dtype == MridDtype::kComplex64, "expected complex64 payload", r.offset());
  expect(h.dims.size() == 2, "image must be 2-D", r.offset());
  ComplexImage img(static_cast<int>(h.dims[0]), static_cast<int>(h.dims[1]));
  for (std::size_t i = 0; i < img.size(); ++i) img.data()[i] = r.complex64();
  r.expect_eof();
  return img;
}

void save_real_image(const std::filesystem::path& path,
                     const std::vector<double>& values, int height, int width) {
  if (values.size() != static_cast<std::size_t>(height) * width)
    throw DimensionError("save_real_image: size mismatch");
  Writer w(path);
  w.header(MridKind::kImage, MridDtype::kFloat32,
           {static_cast<std::uint64_t>(height), static_cast<std::uint64_t>(width)});
  for (double v : values) w.f32(static_cast<float>(v));
}

std::vector<double> load_real_image(const std::filesystem::path& path, int* height,
                                    int* width) {
  Reader r(path);
  const MridHeader h = r.header();
  expect(h.kind == MridKind::kImage, "expected an image file", 8);
  expect(h.dtype == MridDtype::kFloat32, "expected float32 payload", r.offset());
  expect(h.dims.size() == 2, "image must be 2-D", r.offset());
  *height = static_cast<int>(h.dims[0]);
  *width = static_cast<int>(h.dims[1]);
  std::vector<double> values(static_cast<std::size_t>(h.dims[0] * h.dims[1]));
  for (double& v : values) v = static_cast<double>(r.f32());
  r.expect_eof();
  return values;
}

void save_kspace_planes(const std::filesystem::path& path, const MultiCoilKSpace& y) {
  Writer w(path);
  w.header(MridKind::kKspaceStack, MridDtype::kComplex64,
           {static_cast<std::uint64_t>(y.n_coils()),
            static_cast<std::uint64_t>(y.height()),
            static_cast<std::uint64_t>(y.width())});
  for (int i = 0; i < y.n_coils(); ++i)
    for (std::size_t k = 0; k < y.plane(i).size(); ++k)
      w.complex64(y.plane(i).data()[k]);
}

MultiCoilKSpace load_kspace(const std::filesystem::path& planes_path,
                            const std::filesystem::path& mask_path) {
  SamplingMask mask = load_mask(mask_path);
  Reader r(planes_path);
  const MridHeader h = r.header();
  expect(h.kind == MridKind::kKspaceStack, "expected a k-space stack", 8);
  expect(h.dtype == MridDtype::kComplex64, "expected complex64 payload", r.offset());
  expect(h.dims.size() == 3, "k-space stack must be 3-D", r.offset());
  expect(h.dims[1] == static_cast<std::uint64_t>(mask.height()) &&
             h.dims[2] == static_cast<std::uint64_t>(mask.width()),
         "k-space shape does not match mask", r.offset());
  std::vector<ComplexImage> planes;
  for (std::uint64_t i = 0; i < h.dims[0]; ++i) {
    ComplexImage plane(static_cast<int>(h.dims[1]), static_cast<int>(h.dims[2]));
    for (std::size_t k = 0; k < plane.size(); ++k) plane.data()[k] = r.complex64();
    planes.push_back(std::move(plane));
  }
  r.expect_eof();
  return MultiCoilKSpace(std::move(planes), std::move(mask));
}

void save_mask(const std::filesystem::path& path, const SamplingMask& mask) {
  Writer w(path);
  w.header(MridKind::kMask, MridDtype::kUint8,
           {static_cast<std::uint64_t>(mask.height()),
            static_cast<std::uint64_t>(mask.width())});
  // Cell values: 0 dropped, 1 kept, 2 kept ACS. Column-constant.
  const int acs_lo = mask.acs_start();
  const int acs_hi = acs_lo + mask.acs_width();
  std::vector<std::uint8_t> row(static_cast<std::size_t>(mask.width()), 0);
  for (int c = 0; c < mask.width(); ++c)
    if (mask.keeps(c))
      row[static_cast<std::size_t>(c)] = (c >= acs_lo && c < acs_hi) ? 2 : 1;
  for (int r = 0; r < mask.height(); ++r) w.bytes(row.data(), row.size());
}

SamplingMask load_mask(const std::filesystem::path& path) {
  Reader r(path);
  const MridHeader h = r.header();
  expect(h.kind == MridKind::kMask, "expected a mask file", 8);
  expect(h.dtype == MridDtype::kUint8, "expected u8 payload", r.offset());
  expect(h.dims.size() == 2, "mask must be 2-D", r.offset());
  const int height = static_cast<int>(h.dims[0]);
  const int width = static_cast<int>(h.dims[1]);
  std::vector<std::uint8_t> first(static_cast<std::size_t>(width));
  r.bytes(first.data(), first.size());
  std::vector<std::uint8_t> row(static_cast<std::size_t>(width));
  for (int rr = 1; rr < height; ++rr) {
    r.bytes(row.data(), row.size());
    if (row != first) throw FormatError("mask cells are not column-constant", r.offset());
  }
  r.expect_eof();
  std::vector<int> kept;
  int acs_count = 0;
  for (int c = 0; c < width; ++c) {
    if (first[static_cast<std::size_t>(c)] > 2)
      throw FormatError("mask cell out of range", 0);
    if (first[static_cast<std::size_t>(c)] != 0) kept.push_back(c);
    if (first[static_cast<std::size_t>(c)] == 2) ++acs_count;
  }
  return SamplingMask(height, width, std::move(kept), std::max(acs_count, 1));
}

void save_maps(const std::filesystem::path& path, const SensitivityMaps& maps) {
  Writer w(path);
  w.header(MridKind::kMaps, MridDtype::kComplex64,
           {static_cast<std::uint64_t>(maps.n_coils()),
            static_cast<std::uint64_t>(maps.height()),
            static_cast<std::uint64_t>(maps.width())});
  for (int i = 0; i < maps.n_coils(); ++i)
    for (std::size_t k = 0; k < maps.map(i).size(); ++k)
      w.complex64(maps.map(i).data()[k]);
}

SensitivityMaps load_maps(const std::filesystem::path& path) {
  Reader r(path);
  const MridHeader h = r.header();
  expect(h.kind == MridKind::kMaps, "expected a maps file", 8);
  expect(h.dtype == MridDtype::kComplex64, "expected complex64 payload", r.offset());
  expect(h.dims.size() == 3, "maps must be 3-D", r.offset());
  std::vector<ComplexImage> maps;
  for (std::uint64_t i = 0; i < h.dims[0]; ++i) {
    ComplexImage m(static_cast<int>(h.dims[1]), static_cast<int>(h.dims[2]));
    for (std::size_t k = 0; k < m.size(); ++k) m.data()[k] = r.complex64();
    maps.push_back(std::move(m));
  }
  r.expect_eof();
  SensitivityMaps loaded(std::move(maps));
  // Restore the normalized flag when the invariant demonstrably holds.
  if (loaded.normalization_defect() <= 1e-6)
    return SensitivityMaps(loaded.maps(), true);
  return loaded;
}

void save_denoiser(const std::filesystem::path& path, const RidgeDenoiser& d) {
  Writer w(path);
  const int taps = d.taps();
  // Row layout: taps weights | bias | (train_mse, solve_residual)
  // | (ridge_weight, trained flag).
  w.header(MridKind::kDenoiser, MridDtype::kComplex64,
           {static_cast<std::uint64_t>(d.time_bins),
            static_cast<std::uint64_t>(taps) + 3});
  for (int bin = 0; bin < d.time_bins; ++bin) {
    for (int t = 0; t < taps; ++t)
      w.complex64(d.weights[static_cast<std::size_t>(bin)][static_cast<std::size_t>(t)]);
    w.complex64(d.bias[static_cast<std::size_t>(bin)]);
    w.complex64(Complex(d.train_mse[static_cast<std::size_t>(bin)],
                        d.solve_residual[static_cast<std::size_t>(bin)]));
    w.complex64(Complex(d.ridge_weight,
                        d.trained[static_cast<std::size_t>(bin)] ? 1.0 : 0.0));
  }
}

void save_denoiser(const std::filesystem::path& path, const GaussianPairModel& m) {
  Writer w(path);
  // Slabs: mean0, meanz, var0, varz, cov0z.
  w.header(MridKind::kDenoiser, MridDtype::kComplex64,
           {5, static_cast<std::uint64_t>(m.height), static_cast<std::uint64_t>(m.width)});
  for (const Complex& v : m.mean0) w.complex64(v);
  for (const Complex& v : m.meanz) w.complex64(v);
  for (double v : m.var0) w.complex64(Complex(v, 0.0));
  for (double v : m.varz) w.complex64(Complex(v, 0.0));
  for (const Complex& v : m.cov0z) w.complex64(v);
}

LoadedDenoiser load_denoiser(const std::filesystem::path& path) {
  Reader r(path);
  const MridHeader h = r.header();
  expect(h.kind == MridKind::kDenoiser, "expected a denoiser file", 8);
  expect(h.dtype == MridDtype::kComplex64, "expected complex64 payload", r.offset());
  LoadedDenoiser out;
  if (h.dims.size() == 2) {
    RidgeDenoiser d;
    d.time_bins = static_cast<int>(h.dims[0]);
    const int taps = static_cast<int>(h.dims[1]) - 3;
    const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(taps))));
    expect(taps >= 1 && side * side == taps, "ridge taps are not a square patch",
           r.offset());
    d.patch_radius = (side - 1) / 2;
    d.weights.assign(static_cast<std::size_t>(d.time_bins),
                     std::vector<Complex>(static_cast<std::size_t>(taps)));
    d.bias.assign(static_cast<std::size_t>(d.time_bins), Complex(0, 0));
    d.train_mse.assign(static_cast<std::size_t>(d.time_bins), 0.0);
    d.solve_residual.assign(static_cast<std::size_t>(d.time_bins), 0.0);
    d.trained.assign(static_cast<std::size_t>(d.time_bins), 0);
    for (int bin = 0; bin < d.time_bins; ++bin) {
      for (int t = 0; t < taps; ++t)
        d.weights[static_cast<std::size_t>(bin)][static_cast<std::size_t>(t)] =
            r.complex64();
      d.bias[static_cast<std::size_t>(bin)] = r.complex64();
      const Complex diag = r.complex64();
      d.train_mse[static_cast<std::size_t>(bin)] = diag.real();
      d.solve_residual[static_cast<std::size_t>(bin)] = diag.imag();
      const Complex meta = r.complex64();
      d.ridge_weight = meta.real();
      d.trained[static_cast<std::size_t>(bin)] = meta.imag() != 0.0 ? 1 : 0;
    }
    r.expect_eof();
    out.ridge = std::move(d);
  } else if (h.dims.size() == 3 && h.dims[0] == 5) {
    GaussianPairModel m;
    m.height = static_cast<int>(h.dims[1]);
    m.width = static_cast<int>(h.dims[2]);
    const std::size_t n = static_cast<std::size_t>(m.height) * m.width;
    m.mean0.resize(n);
    m.meanz.resize(n);
    m.var0.resize(n);
    m.varz.resize(n);
    m.cov0z.resize(n);
    for (Complex& v : m.mean0) v = r.complex64();
    for (Complex& v : m.meanz) v = r.complex64();
    for (double& v : m.var0) v = r.complex64().real();
    for (double& v : m.varz) v = r.complex64().real();
    for (Complex& v : m.cov0z) v = r.complex64();
    r.expect_eof();
    m.validate();
    out.gaussian = std::move(m);
  } else {
    throw FormatError("unrecognized denoiser layout", r.offset());
  }
  return out;
}

void write_pgm(const std::filesystem::path& path, const std::vector<double>& values,
               int height, int width) {
  if (values.size() != static_cast<std::size_t>(height) * width)
    throw DimensionError("write_pgm: size mismatch");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open for writing: " + path.string(), 0);
  double peak = 0.0;
  for (double v : values) peak = std::max(peak, v);
  out << "P5\n" << width << " " << height << "\n255\n";
  for (double v : values) {
    const double scaled = peak > 0.0 ? std::clamp(v / peak, 0.0, 1.0) : 0.0;
    out.put(static_cast<char>(static_cast<unsigned char>(std::lround(scaled * 255.0))));
  }
}

}  // namespace adobi
