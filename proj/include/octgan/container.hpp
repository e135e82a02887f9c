#pragma once

// Single-file binary container for fringe, tomogram and patch stacks.
// Byte layout is documented in docs/container_format.md.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "octgan/array.hpp"

namespace octgan::io {

inline constexpr std::size_t kHeaderBytes = 64;
inline constexpr char kMagic[8] = {'O', 'C', 'T', 'C', 'N', 'T', 'R', '\0'};
inline constexpr std::uint32_t kFormatVersion = 1;

enum class DType : std::uint32_t { Float32 = 1, Float64 = 2 };

enum class Kind : std::uint32_t { Generic = 0, Fringe = 1, Tomogram = 2, PatchStack = 3 };

struct ContainerHeader {
    DType dtype = DType::Float64;
    Kind kind = Kind::Generic;
    std::array<std::uint64_t, 3> dims{0, 0, 0};
    double axial_pitch_um = 0.0;
    double lateral_pitch_um = 0.0;
};

struct Container {
    ContainerHeader header;
    Volume data;
    // Optional JSON trailer stored after the sample data.
    std::optional<nlohmann::json> metadata;
};

void write_container(const std::filesystem::path& path, const Container& container);
Container read_container(const std::filesystem::path& path);
ContainerHeader read_header(const std::filesystem::path& path);

}  // namespace octgan::io
