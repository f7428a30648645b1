// Copyright (c) 2026, molre contributors
// SPDX-License-Identifier: Apache-2.0

#include "molre/data/dataset_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "molre/core/errors.hpp"
#include "molre/core/rng.hpp"
#include "molre/train/sampling.hpp"

namespace molre {

namespace {

constexpr char kVoxelMagic[4] = {'M', 'L', 'V', 'X'};

template <typename T>
void put_le(std::ostream& os, T value) {
    using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
    auto bits = std::bit_cast<U>(value);
    unsigned char buf[sizeof(U)];
    for (std::size_t i = 0; i < sizeof(U); ++i) buf[i] = static_cast<unsigned char>(bits >> (8 * i));
    os.write(reinterpret_cast<const char*>(buf), sizeof buf);
}

template <typename T>
T get_le(std::istream& is, const std::filesystem::path& path) {
    using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
    unsigned char buf[sizeof(U)];
    if (!is.read(reinterpret_cast<char*>(buf), sizeof buf)) throw DataError(path.string() + ": truncated file");
    U bits = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) bits |= static_cast<U>(buf[i]) << (8 * i);
    return std::bit_cast<T>(bits);
}

}  // namespace

void write_volume(const std::filesystem::path& path, const VolumeSample& volume) {
    volume.validate();
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw DataError("cannot open '" + path.string() + "' for writing");
    os.write(kVoxelMagic, 4);
    put_le<std::uint32_t>(os, kVoxelFormatVersion);
    for (std::size_t a = 0; a < 3; ++a) put_le<std::uint32_t>(os, static_cast<std::uint32_t>(volume.voxels.dim(a)));
    for (double s : volume.spacing) put_le<double>(os, s);
    for (double v : volume.voxels.data()) put_le<float>(os, static_cast<float>(v));
    if (!os) throw DataError("write failed for '" + path.string() + "'");
}

VolumeSample read_volume(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open volume file '" + path.string() + "'");
    char magic[4];
    if (!is.read(magic, 4) || std::memcmp(magic, kVoxelMagic, 4) != 0) {
        throw DataError(path.string() + ": not a voxel file");
    }
    const auto version = get_le<std::uint32_t>(is, path);
    if (version != kVoxelFormatVersion) {
        throw DataError(path.string() + ": voxel format version " + std::to_string(version) + ", expected " +
                        std::to_string(kVoxelFormatVersion));
    }
    std::array<std::size_t, 3> dims{};
    for (auto& d : dims) d = get_le<std::uint32_t>(is, path);
    VolumeSample out;
    for (double& s : out.spacing) s = get_le<double>(is, path);
    out.voxels = Tensor({dims[0], dims[1], dims[2]});
    for (double& v : out.voxels.data()) v = static_cast<double>(get_le<float>(is, path));
    out.sample_id = path.stem().string();
    out.validate();
    return out;
}

std::string_view split_name(Split s) noexcept {
    switch (s) {
        case Split::Train: return "train";
        case Split::Val: return "val";
        case Split::Test: return "test";
    }
    return "train";
}

Split parse_split(std::string_view name) {
    if (name == "train") return Split::Train;
    if (name == "val") return Split::Val;
    if (name == "test") return Split::Test;
    throw ConfigError("unknown split '" + std::string(name) + "' (expected train, val or test)");
}

void SplitFractions::validate() const {
    if (train < 0.0 || val < 0.0 || test < 0.0 || std::abs(train + val + test - 1.0) > 1e-9) {
        throw ConfigError("split fractions must be nonnegative and sum to 1");
    }
}

std::array<std::vector<std::size_t>, 3> split_indices(std::size_t n, const SplitFractions& fractions,
                                                      std::uint64_t seed) {
    fractions.validate();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    RngStream rng(seed, stream_key("split"));
    shuffle_indices(order, rng);
    const auto n_train = static_cast<std::size_t>(std::llround(fractions.train * static_cast<double>(n)));
    const auto n_val = std::min(n - n_train, static_cast<std::size_t>(std::llround(fractions.val * static_cast<double>(n))));
    std::array<std::vector<std::size_t>, 3> out;
    out[0].assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    out[1].assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
                  order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
    out[2].assign(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), order.end());
    for (auto& part : out) std::sort(part.begin(), part.end());
    return out;
}

std::vector<std::size_t> Manifest::indices(Split split) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < entries.size(); ++i)
        if (entries[i].split == split) out.push_back(i);
    return out;
}

void write_manifest(const std::filesystem::path& path, const Manifest& m) {
    nlohmann::ordered_json j;
    j["version"] = m.version;
    j["seed"] = m.seed;
    j["dims"] = m.dims;
    j["spacing"] = m.spacing;
    j["class_names"] = m.class_names;
    nlohmann::ordered_json table = nlohmann::ordered_json::array();
    for (std::size_t c = 0; c < m.classes(); ++c) {
        table.push_back({{"class", m.class_names[c]},
                         {"configured", c < m.prevalence.size() ? m.prevalence[c] : 0.0},
                         {"observed", c < m.observed_prevalence.size() ? m.observed_prevalence[c] : 0.0}});
    }
    j["prevalence"] = table;
    nlohmann::ordered_json samples = nlohmann::ordered_json::array();
    for (const auto& e : m.entries) {
        samples.push_back({{"id", e.id},
                           {"file", e.file},
                           {"split", split_name(e.split)},
                           {"stream_id", e.stream_id},
                           {"labels", e.labels}});
    }
    j["samples"] = samples;
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw DataError("cannot open '" + path.string() + "' for writing");
    os << j.dump(1) << '\n';
    if (!os) throw DataError("write failed for '" + path.string() + "'");
}

Manifest read_manifest(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw DataError("cannot open manifest '" + path.string() + "'");
    Manifest m;
    try {
        const auto j = nlohmann::json::parse(is);
        m.version = j.at("version").get<std::uint32_t>();
        if (m.version != kManifestVersion) {
            throw DataError(path.string() + ": manifest version " + std::to_string(m.version) + ", expected " +
                            std::to_string(kManifestVersion));
        }
        m.seed = j.at("seed").get<std::uint64_t>();
        m.dims = j.at("dims").get<std::array<std::size_t, 3>>();
        m.spacing = j.at("spacing").get<Spacing>();
        m.class_names = j.at("class_names").get<std::vector<std::string>>();
        for (const auto& row : j.at("prevalence")) {
            m.prevalence.push_back(row.at("configured").get<double>());
            m.observed_prevalence.push_back(row.at("observed").get<double>());
        }
        for (const auto& s : j.at("samples")) {
            ManifestEntry e;
            e.id = s.at("id").get<std::string>();
            e.file = s.at("file").get<std::string>();
            e.split = parse_split(s.at("split").get<std::string>());
            e.stream_id = s.at("stream_id").get<std::uint64_t>();
            e.labels = s.at("labels").get<std::vector<std::uint8_t>>();
            if (e.labels.size() != m.classes()) throw DataError(path.string() + ": sample '" + e.id + "' label length mismatch");
            for (auto l : e.labels)
                if (l > 1) throw DataError(path.string() + ": sample '" + e.id + "' has a non-binary label");
            m.entries.push_back(std::move(e));
        }
    } catch (const nlohmann::json::exception& ex) {
        throw DataError(path.string() + ": malformed manifest: " + ex.what());
    } catch (const ConfigError& ex) {
        throw DataError(path.string() + ": " + ex.what());
    }
    return m;
}

VolumeSample load_sample(const std::filesystem::path& dataset_dir, const Manifest& manifest, std::size_t index) {
    const auto& e = manifest.entries.at(index);
    VolumeSample v = read_volume(dataset_dir / e.file);
    v.sample_id = e.id;
    v.labels = e.labels;
    v.stream_id = e.stream_id;
    return v;
}

Tensor label_matrix(const Manifest& manifest, const std::vector<std::size_t>& indices) {
    const std::size_t C = manifest.classes();
    Tensor out({indices.size(), C});
    for (std::size_t r = 0; r < indices.size(); ++r)
        for (std::size_t c = 0; c < C; ++c) out.at(r, c) = manifest.entries.at(indices[r]).labels[c];
    return out;
}

}  // namespace molre
