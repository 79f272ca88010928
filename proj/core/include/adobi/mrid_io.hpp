#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "adobi/core_types.hpp"
#include "adobi/denoiser.hpp"

namespace adobi {

// MRID binary container, little-endian throughout:
//   magic "MRID" | u32 version | u8 kind | u32 ndim | u64 dims[ndim]
//   | u8 dtype | payload (row-major)
// dtype 0 = complex64 (interleaved float32 re/im), 1 = float32, 2 = u8.
// Payload conventions per kind are documented in the README.
enum class MridKind : std::uint8_t {
  kImage = 0,
  kKspaceStack = 1,
  kMask = 2,
  kMaps = 3,
  kDenoiser = 4,
};

enum class MridDtype : std::uint8_t {
  kComplex64 = 0,
  kFloat32 = 1,
  kUint8 = 2,
};

struct MridHeader {
  std::uint32_t version = 1;
  MridKind kind = MridKind::kImage;
  MridDtype dtype = MridDtype::kComplex64;
  std::vector<std::uint64_t> dims;
};

MridHeader mrid_peek(const std::filesystem::path& path);

void save_image(const std::filesystem::path& path, const ComplexImage& image);
ComplexImage load_image(const std::filesystem::path& path);

// Real-valued image stored as float32 (magnitude, error, or std maps).
void save_real_image(const std::filesystem::path& path, const std::vector<double>& values,
                     int height, int width);
std::vector<double> load_real_image(const std::filesystem::path& path, int* height,
                                    int* width);

// K-space planes and the mask live in separate files; a stack is reassembled
// from both.
void save_kspace_planes(const std::filesystem::path& path, const MultiCoilKSpace& y);
MultiCoilKSpace load_kspace(const std::filesystem::path& planes_path,
                            const std::filesystem::path& mask_path);

void save_mask(const std::filesystem::path& path, const SamplingMask& mask);
SamplingMask load_mask(const std::filesystem::path& path);

void save_maps(const std::filesystem::path& path, const SensitivityMaps& maps);
SensitivityMaps load_maps(const std::filesystem::path& path);

void save_denoiser(const std::filesystem::path& path, const RidgeDenoiser& denoiser);
void save_denoiser(const std::filesystem::path& path, const GaussianPairModel& model);

struct LoadedDenoiser {
  std::optional<RidgeDenoiser> ridge;
  std::optional<GaussianPairModel> gaussian;
};
LoadedDenoiser load_denoiser(const std::filesystem::path& path);

// 8-bit binary portable graymap, values scaled by the image maximum.
void write_pgm(const std::filesystem::path& path, const std::vector<double>& values,
               int height, int width);

}  // namespace adobi
