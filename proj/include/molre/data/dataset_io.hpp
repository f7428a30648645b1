// Copyright (c) 2026, molre contributors
// SPDX-License-Identifier: Apache-2.0
//
// On-disk dataset: one manifest.json plus one voxel file per sample.
//
// Voxel file layout, all little-endian:
//   char[4]  magic "MLVX"
//   u32      version
//   u32      S, H, W
//   f64      spacing x, y, z
//   f32      S*H*W voxels, W fastest

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "molre/data/synth.hpp"
#include "molre/data/volume.hpp"

namespace molre {

inline constexpr std::uint32_t kVoxelFormatVersion = 1;
inline constexpr std::uint32_t kManifestVersion = 1;

/// Voxels are stored as float32; values must already be float32-representable
/// for the round trip to be exact.
void write_volume(const std::filesystem::path& path, const VolumeSample& volume);
/// Reads voxels and spacing; labels and ids come from the manifest.
VolumeSample read_volume(const std::filesystem::path& path);

enum class Split { Train, Val, Test };
std::string_view split_name(Split s) noexcept;
Split parse_split(std::string_view name);

struct SplitFractions {
    double train = 0.8;
    double val = 0.1;
    double test = 0.1;
    void validate() const;
};

/// Deterministic shuffled partition of [0, n) into train / val / test.
std::array<std::vector<std::size_t>, 3> split_indices(std::size_t n, const SplitFractions& fractions,
                                                      std::uint64_t seed);

struct ManifestEntry {
    std::string id;
    std::string file;  // relative to the manifest directory
    Split split = Split::Train;
    std::vector<std::uint8_t> labels;
    std::uint64_t stream_id = 0;
};

struct Manifest {
    std::uint32_t version = kManifestVersion;
    std::uint64_t seed = 0;
    std::vector<std::string> class_names;
    std::vector<double> prevalence;           // configured
    std::vector<double> observed_prevalence;  // over all samples
    std::array<std::size_t, 3> dims{};        // S, H, W
    Spacing spacing{};
    std::vector<ManifestEntry> entries;

    std::size_t classes() const noexcept { return class_names.size(); }
    std::vector<std::size_t> indices(Split split) const;
};

void write_manifest(const std::filesystem::path& path, const Manifest& manifest);
/// Throws DataError on a missing file, malformed JSON or version mismatch.
Manifest read_manifest(const std::filesystem::path& path);

/// Loads entry `index` with its labels, id and stream id filled in.
VolumeSample load_sample(const std::filesystem::path& dataset_dir, const Manifest& manifest, std::size_t index);

/// Labels of the given entries as a [n x C] 0/1 tensor.
Tensor label_matrix(const Manifest& manifest, const std::vector<std::size_t>& indices);

}  // namespace molre
