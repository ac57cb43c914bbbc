#include <cstdio>
#include <filesystem>
#include <fstream>

#include "beamcorr/rng.hpp"
#include "beamcorr/tagio.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace beamcorr;
namespace fs = std::filesystem;

namespace {
fs::path temp_file(const char* name) {
    fs::path dir = fs::temp_directory_path() / "beamcorr_tests";
    fs::create_directories(dir);
    return dir / name;
}
}  // namespace

TEST_CASE("attg round trip is lossless, empty streams included") {
    Rng rng(11);
    for (std::size_t count : {std::size_t{0}, std::size_t{1}, std::size_t{100000}}) {
        TimeTagStream stream = testsup::random_stream(count, 1'000'000'000'000, rng, 3);
        stream.resolution_ps = 1;
        auto path = temp_file("roundtrip.attg");
        write_tags(stream, path.string());
        TimeTagStream back = read_tags(path.string());
        CHECK(back.channel_id == stream.channel_id);
        CHECK(back.resolution_ps == stream.resolution_ps);
        CHECK(back.duration_ps == stream.duration_ps);
        CHECK(back.tags == stream.tags);
    }
}

TEST_CASE("attg corruption paths raise explicit errors") {
    Rng rng(5);
    TimeTagStream stream = testsup::random_stream(1000, 1'000'000'000, rng);
    auto path = temp_file("corrupt.attg");
    write_tags(stream, path.string());

    SUBCASE("truncated payload") {
        auto size = fs::file_size(path);
        fs::resize_file(path, size - 9);
        CHECK_THROWS_AS(read_tags(path.string()), corruption_error);
    }
    SUBCASE("bad magic") {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(0);
        f.write("NOPE", 4);
        f.close();
        CHECK_THROWS_AS(read_tags(path.string()), corruption_error);
    }
    SUBCASE("unsorted payload") {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(32);  // first tag
        std::int64_t huge = stream.duration_ps;
        f.write(reinterpret_cast<const char*>(&huge), 8);
        f.close();
        CHECK_THROWS_AS(read_tags(path.string()), corruption_error);
    }
    SUBCASE("unsorted stream refuses to write") {
        TimeTagStream bad = stream;
        std::swap(bad.tags[0], bad.tags[1]);
        CHECK_THROWS_AS(write_tags(bad, path.string()), validation_error);
    }
}

TEST_CASE("csv write/read round trip") {
    auto path = temp_file("table.csv");
    csv::write(path.string(), {"tau_s", "counts", "g2"},
               {{1e-9, 10, 1.5}, {2e-9, 0, 0.0}, {3e-9, 7, 0.875}});
    csv::Table table = csv::read(path.string());
    REQUIRE(table.header.size() == 3);
    CHECK(table.column("g2") == 2);
    REQUIRE(table.rows.size() == 3);
    CHECK(table.rows[0][2] == doctest::Approx(1.5));
    CHECK(table.rows[2][1] == doctest::Approx(7));
}
