#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

#include "helpers.hpp"
#include "spr/errors.hpp"
#include "spr/io.hpp"

using namespace spr;
using namespace spr::test;
namespace fs = std::filesystem;

namespace {

std::string temp_dir(const char* name) {
    const fs::path p = fs::temp_directory_path() / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p.string();
}

std::vector<unsigned char> slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::vector<unsigned char>((std::istreambuf_iterator<char>(in)),
                                      std::istreambuf_iterator<char>());
}

void spit(const std::string& path, const std::vector<unsigned char>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST_CASE("volume files: byte layout pinned against a golden image") {
    // 2x2x2 volume; expected bytes frozen from the normative layout:
    // magic, little-endian uint32 dims, little-endian float32 payload.
    Volume v(Dims{2, 2, 2});
    const double vals[8] = {0.0, 1.0, -2.5, 0.25, 3.75, -0.125, 100.0, 0.001};
    for (int i = 0; i < 8; ++i) v.data[static_cast<std::size_t>(i)] = vals[i];

    const std::vector<unsigned char> golden = {
        0x53, 0x50, 0x46, 0x56, 0x31, 0x00, 0x02, 0x00, 0x00, 0x00, 0x02, 0x00, 0x00,
        0x00, 0x02, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x80, 0x3F,
        0x00, 0x00, 0x20, 0xC0, 0x00, 0x00, 0x80, 0x3E, 0x00, 0x00, 0x70, 0x40, 0x00,
        0x00, 0x00, 0xBE, 0x00, 0x00, 0xC8, 0x42, 0x6F, 0x12, 0x83, 0x3A};

    const std::string path = temp_dir("spr_io_golden") + "/v.spfv";
    write_volume(v, path);
    CHECK(slurp(path) == golden);

    const Volume back = read_volume(path);
    CHECK(back.dims == v.dims);
    CHECK(back.data[6] == 100.0);
    CHECK(back.data[7] == doctest::Approx(0.001).epsilon(1e-7));  // float32 rounding
}

TEST_CASE("volume files: write-read round trip is float32-exact") {
    Rng rng(91);
    const Volume v = random_volume(16, rng);
    const std::string dir = temp_dir("spr_io_rt");
    write_volume(v, dir + "/a.spfv");
    const Volume back = read_volume(dir + "/a.spfv");
    write_volume(back, dir + "/b.spfv");
    CHECK(slurp(dir + "/a.spfv") == slurp(dir + "/b.spfv"));  // bit-identical
    for (std::size_t i = 0; i < v.data.size(); ++i)
        CHECK(back.data[i] == static_cast<double>(static_cast<float>(v.data[i])));
}

TEST_CASE("volume files: corruption is rejected") {
    Rng rng(92);
    const Volume v = random_volume(4, rng);
    const std::string dir = temp_dir("spr_io_corrupt");
    const std::string path = dir + "/v.spfv";
    write_volume(v, path);

    auto bytes = slurp(path);
    auto bad_magic = bytes;
    bad_magic[0] = 'X';
    spit(dir + "/bad_magic.spfv", bad_magic);
    CHECK_THROWS_AS(read_volume(dir + "/bad_magic.spfv"), FormatError);

    auto truncated = bytes;
    truncated.resize(bytes.size() - 4);  // 63 floats declared as 4x4x4
    spit(dir + "/short.spfv", truncated);
    CHECK_THROWS_AS(read_volume(dir + "/short.spfv"), LengthError);

    auto padded = bytes;
    padded.push_back(0);
    spit(dir + "/long.spfv", padded);
    CHECK_THROWS_AS(read_volume(dir + "/long.spfv"), LengthError);

    auto nan_payload = bytes;
    nan_payload[18] = 0x00;
    nan_payload[19] = 0x00;
    nan_payload[20] = 0xC0;
    nan_payload[21] = 0x7F;  // quiet NaN
    spit(dir + "/nan.spfv", nan_payload);
    CHECK_THROWS_AS(read_volume(dir + "/nan.spfv"), DataError);

    CHECK_THROWS_AS(read_volume(dir + "/absent.spfv"), IoError);

    Volume with_nan = v;
    with_nan.data[3] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(write_volume(with_nan, dir + "/reject.spfv"), DataError);
}

TEST_CASE("datasets: save then load returns equal volumes and poses") {
    const Volume gt = blob_phantom(10, 93);
    SimConfig cfg;
    cfg.n_views = 5;
    cfg.seed = 1234;
    cfg.psf = PsfSpec{1.0, 2.0};
    const ViewSet set = generate_dataset(gt, cfg);

    const std::string dir = temp_dir("spr_io_ds");
    const std::string manifest = save_dataset(set, dir, &cfg);
    LoadReport report;
    const ViewSet loaded = load_dataset(manifest, &report);
    CHECK(!report.padded);
    REQUIRE(loaded.views.size() == set.views.size());
    for (std::size_t l = 0; l < set.views.size(); ++l) {
        for (std::size_t i = 0; i < set.views[l].data.size(); ++i)
            CHECK(loaded.views[l].data[i] == static_cast<double>(static_cast<float>(set.views[l].data[i])));
    }
    REQUIRE(loaded.true_poses.has_value());
    for (std::size_t l = 0; l < set.views.size(); ++l) {
        // poses round-trip through %.17g exactly
        CHECK((*loaded.true_poses)[l].orientation.phi1 == (*set.true_poses)[l].orientation.phi1);
        CHECK((*loaded.true_poses)[l].orientation.phi2 == (*set.true_poses)[l].orientation.phi2);
        CHECK((*loaded.true_poses)[l].orientation.psi == (*set.true_poses)[l].orientation.psi);
        CHECK((*loaded.true_poses)[l].translation == (*set.true_poses)[l].translation);
    }
}

TEST_CASE("datasets: missing files and pose mismatches are errors") {
    const Volume gt = blob_phantom(8, 94);
    SimConfig cfg;
    cfg.n_views = 2;
    cfg.psf = PsfSpec{1.0, 1.5};
    const ViewSet set = generate_dataset(gt, cfg);
    const std::string dir = temp_dir("spr_io_err");
    const std::string manifest = save_dataset(set, dir);

    fs::remove(fs::path(dir) / "views/view_001.spfv");
    CHECK_THROWS_AS(load_dataset(manifest), IoError);

    std::ofstream bad(dir + "/bad_manifest.txt");
    bad << "spfd 1\npsf psf.spfv\nview views/view_000.spfv\n"
        << "pose 0 0 0 0 0 0 0\npose 1 0 0 0 0 0 0\n";
    bad.close();
    CHECK_THROWS_AS(load_dataset(dir + "/bad_manifest.txt"), FormatError);

    CHECK_THROWS_AS(load_dataset(dir + "/absent_manifest.txt"), IoError);
}

TEST_CASE("datasets: mixed dims are padded to the smallest common cube") {
    const std::string dir = temp_dir("spr_io_pad");
    fs::create_directories(fs::path(dir) / "views");
    Volume small = Volume::constant(Dims{6, 6, 6}, 1.0);
    Volume large = Volume::constant(Dims{8, 8, 8}, 2.0);
    Volume psf(Dims{8, 8, 8});
    psf.at(3, 3, 3) = 1.0;
    write_volume(small, dir + "/views/view_000.spfv");
    write_volume(large, dir + "/views/view_001.spfv");
    write_volume(psf, dir + "/psf.spfv");
    std::ofstream manifest(dir + "/manifest.txt");
    manifest << "spfd 1\npsf psf.spfv\nview views/view_000.spfv\nview views/view_001.spfv\n";
    manifest.close();

    LoadReport report;
    const ViewSet loaded = load_dataset(dir + "/manifest.txt", &report);
    CHECK(report.padded);
    CHECK(loaded.views[0].dims == Dims{8, 8, 8});
    CHECK(loaded.views[1].dims == Dims{8, 8, 8});
    // symmetric placement: offset (8-6)/2 = 1 per axis
    CHECK(loaded.views[0].at(0, 0, 0) == 0.0);
    CHECK(loaded.views[0].at(1, 1, 1) == 1.0);
    CHECK(loaded.views[0].at(6, 6, 6) == 1.0);
    CHECK(loaded.views[0].at(7, 7, 7) == 0.0);
    double mass_small = 0.0;
    for (double x : loaded.views[0].data) mass_small += x;
    CHECK(mass_small == doctest::Approx(216.0));
}
