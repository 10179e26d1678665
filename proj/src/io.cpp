#include "spr/io.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "spr/errors.hpp"

namespace fs = std::filesystem;

namespace spr {

namespace {

constexpr char kMagic[6] = {'S', 'P', 'F', 'V', '1', '\0'};
constexpr std::size_t kHeaderBytes = 18;

void put_u32_le(std::string& buf, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32_le(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void write_volume(const Volume& v, const std::string& path) {
    const std::size_t count = v.dims.count();
    for (double x : v.data)
        if (!std::isfinite(x)) throw DataError("write_volume: non-finite value");

    std::string buf;
    buf.reserve(kHeaderBytes + 4 * count);
    buf.append(kMagic, sizeof(kMagic));
    put_u32_le(buf, static_cast<std::uint32_t>(v.dims.nx));
    put_u32_le(buf, static_cast<std::uint32_t>(v.dims.ny));
    put_u32_le(buf, static_cast<std::uint32_t>(v.dims.nz));
    for (std::size_t i = 0; i < count; ++i) {
        const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v.data[i]));
        put_u32_le(buf, bits);
    }

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("write_volume: cannot open " + path);
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    out.flush();
    if (!out) throw IoError("write_volume: write failed for " + path);
}

Volume read_volume(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("read_volume: cannot open " + path);
    std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (buf.size() < kHeaderBytes) throw LengthError("read_volume: truncated header in " + path);
    if (std::memcmp(buf.data(), kMagic, sizeof(kMagic)) != 0)
        throw FormatError("read_volume: bad magic in " + path);

    const auto* p = reinterpret_cast<const unsigned char*>(buf.data());
    Dims dims{static_cast<int>(get_u32_le(p + 6)), static_cast<int>(get_u32_le(p + 10)),
              static_cast<int>(get_u32_le(p + 14))};
    const std::size_t count = dims.count();
    if (buf.size() != kHeaderBytes + 4 * count)
        throw LengthError("read_volume: payload length mismatch in " + path);

    Volume v(dims);
    for (std::size_t i = 0; i < count; ++i) {
        const std::uint32_t bits = get_u32_le(p + kHeaderBytes + 4 * i);
        const float f = std::bit_cast<float>(bits);
        if (!std::isfinite(f)) throw DataError("read_volume: non-finite value in " + path);
        v.data[i] = static_cast<double>(f);
    }
    return v;
}

std::string save_dataset(const ViewSet& set, const std::string& dir, const SimConfig* echo) {
    if (set.views.empty()) throw ArgumentError("save_dataset: no views");
    if (set.true_poses && set.true_poses->size() != set.views.size())
        throw ArgumentError("save_dataset: pose count mismatch");

    fs::create_directories(fs::path(dir) / "views");
    write_volume(set.psf, (fs::path(dir) / "psf.spfv").string());

    std::ostringstream manifest;
    manifest << "spfd 1\n";
    manifest << "psf psf.spfv\n";
    manifest << "n_views " << set.views.size() << "\n";
    for (std::size_t l = 0; l < set.views.size(); ++l) {
        char name[64];
        std::snprintf(name, sizeof(name), "views/view_%03zu.spfv", l);
        write_volume(set.views[l], (fs::path(dir) / name).string());
        manifest << "view " << name << "\n";
    }
    if (set.true_poses) {
        for (std::size_t l = 0; l < set.true_poses->size(); ++l) {
            const Pose& p = (*set.true_poses)[l];
            manifest << "pose " << l << ' ' << fmt17(p.orientation.phi1) << ' '
                     << fmt17(p.orientation.phi2) << ' ' << fmt17(p.orientation.psi) << ' '
                     << fmt17(p.translation[0]) << ' ' << fmt17(p.translation[1]) << ' '
                     << fmt17(p.translation[2]) << "\n";
        }
    }
    if (echo) {
        manifest << "seed " << echo->seed << "\n";
        manifest << "noise_sigma " << fmt17(echo->noise_sigma) << "\n";
        manifest << "dol_spots " << echo->dol_spots << "\n";
        manifest << "spot_sigma_lo " << fmt17(echo->spot_sigma_lo) << "\n";
        manifest << "spot_sigma_hi " << fmt17(echo->spot_sigma_hi) << "\n";
        manifest << "spot_intensity_lo " << fmt17(echo->spot_intensity_lo) << "\n";
        manifest << "spot_intensity_hi " << fmt17(echo->spot_intensity_hi) << "\n";
        manifest << "t_max_frac " << fmt17(echo->t_max_frac) << "\n";
        manifest << "psf_sigma_xy " << fmt17(echo->psf.sigma_xy) << "\n";
        manifest << "psf_sigma_z " << fmt17(echo->psf.sigma_z) << "\n";
        manifest << "force_identity_poses " << (echo->force_identity_poses ? 1 : 0) << "\n";
    }

    const std::string manifest_path = (fs::path(dir) / "manifest.txt").string();
    std::ofstream out(manifest_path, std::ios::trunc);
    if (!out) throw IoError("save_dataset: cannot open " + manifest_path);
    out << manifest.str();
    out.flush();
    if (!out) throw IoError("save_dataset: write failed for " + manifest_path);
    return manifest_path;
}

namespace {

Volume pad_to_cube(const Volume& v, int target, bool* padded) {
    if (v.dims.nx == target && v.dims.ny == target && v.dims.nz == target) return v;
    *padded = true;
    Volume out(Dims{target, target, target});
    const int ox = (target - v.dims.nx) / 2;
    const int oy = (target - v.dims.ny) / 2;
    const int oz = (target - v.dims.nz) / 2;
    for (int z = 0; z < v.dims.nz; ++z)
        for (int y = 0; y < v.dims.ny; ++y)
            for (int x = 0; x < v.dims.nx; ++x) out.at(x + ox, y + oy, z + oz) = v.at(x, y, z);
    return out;
}

}  // namespace

ViewSet load_dataset(const std::string& manifest_path, LoadReport* report) {
    std::ifstream in(manifest_path);
    if (!in) throw IoError("load_dataset: cannot open " + manifest_path);
    const fs::path base = fs::path(manifest_path).parent_path();

    std::string psf_rel;
    std::vector<std::string> view_rels;
    std::vector<Pose> poses;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string key;
        if (!(ls >> key) || key.empty() || key[0] == '#') continue;
        if (key == "psf") {
            ls >> psf_rel;
        } else if (key == "view") {
            std::string rel;
            ls >> rel;
            view_rels.push_back(rel);
        } else if (key == "pose") {
            std::size_t index;
            Pose p;
            if (!(ls >> index >> p.orientation.phi1 >> p.orientation.phi2 >> p.orientation.psi >>
                  p.translation[0] >> p.translation[1] >> p.translation[2]))
                throw FormatError("load_dataset: malformed pose line");
            if (index != poses.size()) throw FormatError("load_dataset: pose lines out of order");
            poses.push_back(p);
        }
        // other keys are provenance echo
    }
    if (psf_rel.empty()) throw FormatError("load_dataset: manifest lacks a psf entry");
    if (view_rels.empty()) throw FormatError("load_dataset: manifest lists no views");
    if (!poses.empty() && poses.size() != view_rels.size())
        throw FormatError("load_dataset: pose count does not match view count");

    auto resolve = [&](const std::string& rel) {
        const fs::path p = fs::path(rel).is_absolute() ? fs::path(rel) : base / rel;
        if (!fs::exists(p)) throw IoError("load_dataset: missing file " + p.string());
        return p.string();
    };

    ViewSet set;
    set.psf = read_volume(resolve(psf_rel));
    for (const auto& rel : view_rels) set.views.push_back(read_volume(resolve(rel)));
    if (!poses.empty()) set.true_poses = std::move(poses);

    int target = 0;
    auto grow = [&](const Dims& d) { target = std::max({target, d.nx, d.ny, d.nz}); };
    grow(set.psf.dims);
    for (const auto& v : set.views) grow(v.dims);

    bool padded = false;
    set.psf = pad_to_cube(set.psf, target, &padded);
    for (auto& v : set.views) v = pad_to_cube(v, target, &padded);
    if (report) {
        report->padded = padded;
        if (padded)
            report->notes.push_back("volumes zero-padded symmetrically to " + std::to_string(target) +
                                    " cubed");
    }
    return set;
}

}  // namespace spr
