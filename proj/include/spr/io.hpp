#ifndef SPR_IO_HPP
#define SPR_IO_HPP

#include <string>
#include <vector>

#include "spr/forward.hpp"
#include "spr/volume.hpp"

namespace spr {

// Volume file layout (normative, little-endian regardless of host):
//   bytes 0..5   magic "SPFV1\0"
//   bytes 6..17  nx, ny, nz as uint32
//   bytes 18..   nx*ny*nz float32, x fastest, z slowest
void write_volume(const Volume& v, const std::string& path);
Volume read_volume(const std::string& path);

struct LoadReport {
    bool padded = false;
    std::vector<std::string> notes;
};

// Writes psf.spfv, views/view_###.spfv and manifest.txt under dir; echoes the
// generator configuration when given. Returns the manifest path.
std::string save_dataset(const ViewSet& set, const std::string& dir, const SimConfig* echo = nullptr);

// Loads a manifest; volumes of differing dims are zero-padded symmetrically
// to the smallest common cube (recorded in the report).
ViewSet load_dataset(const std::string& manifest_path, LoadReport* report = nullptr);

}  // namespace spr

#endif
