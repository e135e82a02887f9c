#include "octgan/container.hpp"
#include "octgan/fringe_lab.hpp"

namespace octgan::fringe {

void save_fringes(const std::filesystem::path& path, const FringeVolume& volume) {
    io::Container c;
    c.header.dtype = io::DType::Float64;
    c.header.kind = io::Kind::Fringe;
    c.header.axial_pitch_um = volume.axial_pixel_um;
    c.header.lateral_pitch_um = volume.lateral_pitch_um;
    c.data = volume.fringes;
    c.metadata = nlohmann::json{{"source",
                                 {{"center_wavenumber", volume.source.center_wavenumber},
                                  {"fwhm_wavenumber", volume.source.fwhm_wavenumber},
                                  {"samples", volume.source.samples}}}};
    io::write_container(path, c);
}

FringeVolume load_fringes(const std::filesystem::path& path) {
    auto c = io::read_container(path);
    if (c.header.kind != io::Kind::Fringe) {
        throw Error("load_fringes: " + path.string() + " is not a fringe container");
    }
    if (!c.metadata || !c.metadata->contains("source")) {
        throw Error("load_fringes: missing source metadata in " + path.string());
    }
    FringeVolume v;
    const auto& s = (*c.metadata)["source"];
    v.source.center_wavenumber = s.at("center_wavenumber").get<double>();
    v.source.fwhm_wavenumber = s.at("fwhm_wavenumber").get<double>();
    v.source.samples = s.at("samples").get<std::size_t>();
    v.axial_pixel_um = c.header.axial_pitch_um;
    v.lateral_pitch_um = c.header.lateral_pitch_um;
    v.fringes = std::move(c.data);
    v.validate();
    return v;
}

void save_tomogram(const std::filesystem::path& path, const TomogramVolume& volume) {
    io::Container c;
    c.header.dtype = io::DType::Float32;
    c.header.kind = io::Kind::Tomogram;
    c.header.axial_pitch_um = volume.axial_pixel_um;
    c.header.lateral_pitch_um = volume.lateral_pitch_um;
    c.data = volume.intensity_db;
    c.metadata = nlohmann::json{{"dynamic_range_db", volume.dynamic_range_db}};
    io::write_container(path, c);
}

TomogramVolume load_tomogram(const std::filesystem::path& path) {
    auto c = io::read_container(path);
    if (c.header.kind != io::Kind::Tomogram) {
        throw Error("load_tomogram: " + path.string() + " is not a tomogram container");
    }
    TomogramVolume t;
    t.axial_pixel_um = c.header.axial_pitch_um;
    t.lateral_pitch_um = c.header.lateral_pitch_um;
    if (c.metadata && c.metadata->contains("dynamic_range_db")) {
        t.dynamic_range_db = (*c.metadata)["dynamic_range_db"].get<double>();
    }
    t.intensity_db = std::move(c.data);
    return t;
}

}  // namespace octgan::fringe
