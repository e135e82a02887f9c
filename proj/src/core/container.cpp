#include "octgan/container.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

namespace octgan::io {

static_assert(std::endian::native == std::endian::little,
              "container I/O assumes a little-endian host");

namespace {

constexpr char kTrailerMagic[4] = {'M', 'E', 'T', 'A'};

template <typename T>
void put(char* dst, T value) {
    std::memcpy(dst, &value, sizeof(T));
}

template <typename T>
T get(const char* src) {
    T value;
    std::memcpy(&value, src, sizeof(T));
    return value;
}

std::size_t dtype_bytes(DType dtype) {
    switch (dtype) {
        case DType::Float32: return 4;
        case DType::Float64: return 8;
    }
    throw Error("container: unknown dtype code");
}

ContainerHeader decode_header(const char* buf, const std::filesystem::path& path) {
    if (std::memcmp(buf, kMagic, sizeof(kMagic)) != 0) {
        throw Error("container: bad magic in " + path.string());
    }
    const auto version = get<std::uint32_t>(buf + 8);
    if (version != kFormatVersion) {
        throw Error("container: unsupported version " + std::to_string(version));
    }
    ContainerHeader h;
    const auto dtype = get<std::uint32_t>(buf + 12);
    if (dtype != 1 && dtype != 2) {
        throw Error("container: unknown dtype code " + std::to_string(dtype));
    }
    h.dtype = static_cast<DType>(dtype);
    h.dims = {get<std::uint64_t>(buf + 16), get<std::uint64_t>(buf + 24), get<std::uint64_t>(buf + 32)};
    h.axial_pitch_um = get<double>(buf + 40);
    h.lateral_pitch_um = get<double>(buf + 48);
    const auto kind = get<std::uint32_t>(buf + 56);
    if (kind > 3) {
        throw Error("container: unknown kind code " + std::to_string(kind));
    }
    h.kind = static_cast<Kind>(kind);
    return h;
}

}  // namespace

void write_container(const std::filesystem::path& path, const Container& container) {
    const auto& d = container.data;
    ContainerHeader h = container.header;
    h.dims = {d.dim(0), d.dim(1), d.dim(2)};

    char header[kHeaderBytes] = {};
    std::memcpy(header, kMagic, sizeof(kMagic));
    put<std::uint32_t>(header + 8, kFormatVersion);
    put<std::uint32_t>(header + 12, static_cast<std::uint32_t>(h.dtype));
    put<std::uint64_t>(header + 16, h.dims[0]);
    put<std::uint64_t>(header + 24, h.dims[1]);
    put<std::uint64_t>(header + 32, h.dims[2]);
    put<double>(header + 40, h.axial_pitch_um);
    put<double>(header + 48, h.lateral_pitch_um);
    put<std::uint32_t>(header + 56, static_cast<std::uint32_t>(h.kind));
    put<std::uint32_t>(header + 60, 0);

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error("container: cannot open " + path.string() + " for writing");
    }
    out.write(header, kHeaderBytes);

    const auto& values = d.values();
    if (h.dtype == DType::Float64) {
        out.write(reinterpret_cast<const char*>(values.data()),
                  static_cast<std::streamsize>(values.size() * sizeof(double)));
    } else {
        std::vector<float> narrow(values.begin(), values.end());
        out.write(reinterpret_cast<const char*>(narrow.data()),
                  static_cast<std::streamsize>(narrow.size() * sizeof(float)));
    }

    if (container.metadata) {
        const std::string text = container.metadata->dump();
        char len[8];
        put<std::uint64_t>(len, text.size());
        out.write(kTrailerMagic, sizeof(kTrailerMagic));
        out.write(len, sizeof(len));
        out.write(text.data(), static_cast<std::streamsize>(text.size()));
    }
    if (!out) {
        throw Error("container: write failed for " + path.string());
    }
}

ContainerHeader read_header(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("container: cannot open " + path.string());
    }
    char header[kHeaderBytes];
    if (!in.read(header, kHeaderBytes)) {
        throw Error("container: truncated header in " + path.string());
    }
    return decode_header(header, path);
}

Container read_container(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("container: cannot open " + path.string());
    }
    char header[kHeaderBytes];
    if (!in.read(header, kHeaderBytes)) {
        throw Error("container: truncated header in " + path.string());
    }
    Container c;
    c.header = decode_header(header, path);
    const auto& dims = c.header.dims;
    c.data = Volume(dims[0], dims[1], dims[2]);
    const std::size_t count = c.data.size();
    auto& values = c.data.values();
    if (c.header.dtype == DType::Float64) {
        in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(count * 8));
    } else {
        std::vector<float> narrow(count);
        in.read(reinterpret_cast<char*>(narrow.data()), static_cast<std::streamsize>(count * 4));
        std::copy(narrow.begin(), narrow.end(), values.begin());
    }
    if (static_cast<std::size_t>(in.gcount()) != count * dtype_bytes(c.header.dtype)) {
        throw Error("container: truncated data in " + path.string());
    }

    char magic[4];
    if (in.read(magic, sizeof(magic))) {
        if (std::memcmp(magic, kTrailerMagic, sizeof(magic)) != 0) {
            throw Error("container: unexpected bytes after data in " + path.string());
        }
        char len[8];
        if (!in.read(len, sizeof(len))) {
            throw Error("container: truncated metadata length in " + path.string());
        }
        std::string text(get<std::uint64_t>(len), '\0');
        if (!in.read(text.data(), static_cast<std::streamsize>(text.size()))) {
            throw Error("container: truncated metadata in " + path.string());
        }
        c.metadata = nlohmann::json::parse(text);
    }
    return c;
}

}  // namespace octgan::io
