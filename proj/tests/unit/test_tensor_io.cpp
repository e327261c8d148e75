#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "psad/rng.hpp"
#include "psad/tensor_io.hpp"

using namespace psad;

namespace {

std::filesystem::path temp_dir() {
    auto dir = std::filesystem::temp_directory_path() / "psad_tensor_io_tests";
    std::filesystem::create_directories(dir);
    return dir;
}

Tensor random_tensor(Rng& rng, std::vector<std::size_t> shape) {
    Tensor t(std::move(shape));
    for (std::size_t i = 0; i < t.size(); ++i)
        t.data()[i] = static_cast<float>(rng.uniform(-10.0, 10.0));
    return t;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

} // namespace

TEST_CASE("tensor file header arithmetic") {
    const auto path = temp_dir() / "header.pft";
    write_tensor(Tensor({2, 2}, {0.f, 1.f, 2.f, 3.f}), path);
    // 4 magic + 1 ndim + 2*8 dims + 16 payload
    CHECK(std::filesystem::file_size(path) == 37);
}

TEST_CASE("tensor single element round-trip") {
    const auto path = temp_dir() / "single.pft";
    const Tensor t({1}, {0.0f});
    write_tensor(t, path);
    CHECK(bitwise_equal(read_tensor(path), t));
}

TEST_CASE("tensor seeded round-trip is bit exact") {
    Rng rng(41);
    const auto path = temp_dir() / "seeded.pft";
    const Tensor t = random_tensor(rng, {3, 4, 5});
    write_tensor(t, path);
    CHECK(bitwise_equal(read_tensor(path), t));
}

TEST_CASE("tensor read rejects corrupt files") {
    const auto dir = temp_dir();

    SUBCASE("bad magic") {
        const auto path = dir / "bad_magic.pft";
        std::ofstream(path, std::ios::binary) << "XXXX1234";
        CHECK_THROWS_AS(read_tensor(path), FormatError);
    }
    SUBCASE("truncated payload") {
        const auto good = dir / "good.pft";
        write_tensor(Tensor({4, 4}), good);
        std::string bytes = slurp(good);
        bytes.resize(bytes.size() - 8 * sizeof(float)); // drop half the floats
        const auto path = dir / "truncated.pft";
        std::ofstream(path, std::ios::binary) << bytes;
        CHECK_THROWS_AS(read_tensor(path), FormatError);
    }
    SUBCASE("zero dimensions") {
        const auto path = dir / "ndim0.pft";
        std::string bytes = "PFT1";
        bytes.push_back('\0'); // ndim = 0
        std::ofstream(path, std::ios::binary) << bytes;
        CHECK_THROWS_AS(read_tensor(path), FormatError);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(read_tensor(dir / "does_not_exist.pft"), IoError);
    }
}

TEST_CASE("segmap round-trip and label validation") {
    const auto dir = temp_dir();
    SegMap m(2, 2, 3);
    m.labels = {0, 0, 1, 2};
    const auto path = dir / "small.psm";
    write_segmap(m, path);
    CHECK(read_segmap(path) == m);

    SUBCASE("label beyond the declared class count") {
        SegMap bad(1, 1, 3);
        bad.labels = {5};
        CHECK_THROWS_AS(write_segmap(bad, dir / "bad.psm"), ContractError);
        // Forge the same condition on disk.
        std::string bytes = slurp(path);
        bytes[bytes.size() - 2] = 5; // last label little-endian low byte
        const auto forged = dir / "forged.psm";
        std::ofstream(forged, std::ios::binary) << bytes;
        CHECK_THROWS_AS(read_segmap(forged), FormatError);
    }
}

TEST_CASE("segmap seeded 64x64 round-trip") {
    Rng rng(1234);
    SegMap m(64, 64, 7);
    for (auto& v : m.labels) v = static_cast<std::uint16_t>(rng.uniform_int(0, 6));
    const auto path = temp_dir() / "seeded.psm";
    write_segmap(m, path);
    CHECK(read_segmap(path) == m);
}

TEST_CASE("round-trip property over random shapes") {
    Rng rng(99);
    const auto dir = temp_dir();
    for (int trial = 0; trial < 60; ++trial) {
        const auto ndim = static_cast<std::size_t>(rng.uniform_int(1, 4));
        std::vector<std::size_t> shape(ndim);
        for (auto& d : shape) d = static_cast<std::size_t>(rng.uniform_int(1, 32));
        const Tensor t = random_tensor(rng, shape);
        const auto path = dir / "prop.pft";
        write_tensor(t, path);
        REQUIRE(bitwise_equal(read_tensor(path), t));
    }
    for (int trial = 0; trial < 40; ++trial) {
        const auto h = static_cast<std::size_t>(rng.uniform_int(1, 32));
        const auto w = static_cast<std::size_t>(rng.uniform_int(1, 32));
        const auto classes = static_cast<std::uint16_t>(rng.uniform_int(1, 9));
        SegMap m(h, w, classes);
        for (auto& v : m.labels)
            v = static_cast<std::uint16_t>(rng.uniform_int(0, classes - 1));
        const auto path = dir / "prop.psm";
        write_segmap(m, path);
        REQUIRE(read_segmap(path) == m);
    }
}

TEST_CASE("tensor shape invariants") {
    CHECK_THROWS_AS(Tensor({2, 3}, {1.f, 2.f}), ContractError);
    CHECK_THROWS_AS(Tensor({0, 3}), ContractError);
    CHECK_THROWS_AS(Tensor(std::vector<std::size_t>{}), ContractError);
}
