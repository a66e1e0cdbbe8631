#include <doctest.h>

#include <bit>
#include <filesystem>
#include <limits>
#include <random>

#include "oracles.hpp"
#include "ped/error.hpp"
#include "ped/io.hpp"

using namespace ped;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("ped_io_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

ErrorCode code_of(auto &&fn) {
    try {
        fn();
    } catch (const Error &e) {
        return e.code();
    }
    FAIL("expected a ped::Error");
    return ErrorCode::InvalidArgument;
}

io::Bytes f32_dump(std::uint64_t n, std::uint64_t d, std::size_t values) {
    io::Bytes b = {'P', 'E', 'D', 'F', 1, 0, 0, 0};
    for (int i = 0; i < 8; ++i)
        b.push_back(static_cast<std::uint8_t>(n >> (8 * i)));
    for (int i = 0; i < 8; ++i)
        b.push_back(static_cast<std::uint8_t>(d >> (8 * i)));
    for (std::size_t k = 0; k < values; ++k) {
        const float v = 0.5f * static_cast<float>(k);
        const auto bits = std::bit_cast<std::uint32_t>(v);
        for (int i = 0; i < 4; ++i)
            b.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
    }
    return b;
}

} // namespace

TEST_CASE("feature dump with declared 2x3 f32 payload loads") {
    const auto fm = io::decode_feature_dump(f32_dump(2, 3, 6));
    CHECK(fm.n() == 2);
    CHECK(fm.d() == 3);
    CHECK(fm.storage == StorageType::F32);
    CHECK(fm.data(1, 2) == 2.5);
}

TEST_CASE("feature dump errors") {
    auto bytes = f32_dump(2, 3, 6);
    auto bad = bytes;
    std::copy_n("XXXX", 4, bad.begin());
    CHECK(code_of([&] { io::decode_feature_dump(bad); }) == ErrorCode::BadMagic);

    CHECK(code_of([&] { io::decode_feature_dump(f32_dump(2, 3, 5)); }) == ErrorCode::TruncatedPayload);
    CHECK(code_of([&] { io::decode_feature_dump(f32_dump(2, 3, 7)); }) == ErrorCode::TrailingBytes);
    CHECK(code_of([&] { io::decode_feature_dump(f32_dump(0, 3, 0)); }) == ErrorCode::EmptyMatrix);
    CHECK(code_of([&] { io::decode_feature_dump(io::Bytes{'P', 'E', 'D', 'F', 1}); }) ==
          ErrorCode::TruncatedPayload);

    bad = bytes;
    bad[4] = 2;
    CHECK(code_of([&] { io::decode_feature_dump(bad); }) == ErrorCode::UnsupportedVersion);
    bad = bytes;
    bad[5] = 7;
    CHECK(code_of([&] { io::decode_feature_dump(bad); }) == ErrorCode::UnsupportedDtype);

    // huge declared shape must not overflow into a false "fits"
    CHECK(code_of([&] { io::decode_feature_dump(f32_dump(1ull << 62, 1ull << 62, 6)); }) ==
          ErrorCode::TruncatedPayload);
}

TEST_CASE("non-finite value reports its byte offset") {
    auto bytes = f32_dump(2, 3, 6);
    const auto nan_bits = std::bit_cast<std::uint32_t>(std::numeric_limits<float>::quiet_NaN());
    const std::size_t offset = io::kFeatureHeaderSize + 4 * 4;
    for (int i = 0; i < 4; ++i)
        bytes[offset + i] = static_cast<std::uint8_t>(nan_bits >> (8 * i));
    try {
        io::decode_feature_dump(bytes, "dump.pedf");
        FAIL("expected NonFiniteValue");
    } catch (const Error &e) {
        CHECK(e.code() == ErrorCode::NonFiniteValue);
        REQUIRE(e.offset());
        CHECK(*e.offset() == offset);
        CHECK(std::string(e.what()).find("dump.pedf") != std::string::npos);
    }
}

TEST_CASE("round trip is byte-identical for both storage precisions") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 40; ++trial) {
        std::uniform_int_distribution<int> dim(1, 9);
        MatrixXd m = oracle::random_matrix(rng, dim(rng), dim(rng), 100.0);
        const auto storage = trial % 2 ? StorageType::F32 : StorageType::F64;
        if (storage == StorageType::F32)
            m = m.cast<float>().cast<double>();
        const auto bytes = io::encode_feature_dump(FeatureMatrix(m, storage));
        const auto loaded = io::decode_feature_dump(bytes);
        CHECK(loaded.storage == storage);
        CHECK(loaded.data == m);
        CHECK(io::encode_feature_dump(loaded) == bytes);
    }
}

TEST_CASE("labels") {
    SUBCASE("[1,2,1,2] has p = 2") {
        const auto y = io::decode_labels(io::encode_labels(io::make_labels({1, 2, 1, 2})));
        CHECK(y.n() == 4);
        CHECK(y.p == 2);
    }
    SUBCASE("gap in the alphabet") {
        try {
            io::make_labels({1, 3, 1});
            FAIL("expected MissingClass");
        } catch (const Error &e) {
            CHECK(e.code() == ErrorCode::MissingClass);
            CHECK(std::string(e.what()).find("class 2") != std::string::npos);
        }
    }
    SUBCASE("zero label in a file names its offset") {
        LabelVector raw{{0, 1}, 1};
        try {
            io::decode_labels(io::encode_labels(raw), "y.pedl");
            FAIL("expected ZeroLabel");
        } catch (const Error &e) {
            CHECK(e.code() == ErrorCode::ZeroLabel);
            CHECK(*e.offset() == io::kLabelHeaderSize);
        }
    }
    SUBCASE("bad magic and truncation") {
        auto bytes = io::encode_labels(io::make_labels({1, 2}));
        auto bad = bytes;
        bad[3] = 'X';
        CHECK(code_of([&] { io::decode_labels(bad); }) == ErrorCode::BadMagic);
        bytes.pop_back();
        CHECK(code_of([&] { io::decode_labels(bytes); }) == ErrorCode::TruncatedPayload);
    }
    SUBCASE("round trip") {
        const auto bytes = io::encode_labels(io::make_labels({3, 1, 2, 2, 3}));
        CHECK(io::encode_labels(io::decode_labels(bytes)) == bytes);
    }
}

TEST_CASE("validate_pair") {
    const FeatureMatrix f4(MatrixXd::Zero(4, 2));
    CHECK_NOTHROW(io::validate_pair(f4, io::make_labels({1, 2, 1, 2})));
    CHECK(code_of([&] { io::validate_pair(f4, io::make_labels({1, 2, 1})); }) == ErrorCode::LengthMismatch);
    CHECK_NOTHROW(io::validate_pair(FeatureMatrix(MatrixXd::Zero(1, 1)), io::make_labels({1})));
}

TEST_CASE("csv with and without header") {
    const auto a = io::parse_feature_csv("x,y\n1,2\n3.5,-4\n");
    const auto b = io::parse_feature_csv("1,2\n3.5,-4\n");
    CHECK(a.n() == 2);
    CHECK(a.d() == 2);
    CHECK(a.data == b.data);
    CHECK(a.data(1, 1) == -4.0);
    CHECK(code_of([] { io::parse_feature_csv("1,2\n3\n"); }) == ErrorCode::ShapeMismatch);
    CHECK(code_of([] { io::parse_feature_csv("1,2\n3,nan\n"); }) == ErrorCode::NonFiniteValue);

    const auto y = io::parse_label_csv("label\n1\n2\n2\n");
    CHECK(y.labels == std::vector<int>{1, 2, 2});
    CHECK(code_of([] { io::parse_label_csv("1\n0\n"); }) == ErrorCode::ZeroLabel);
}

TEST_CASE("files dispatch on magic, then extension") {
    TempDir dir;
    const FeatureMatrix fm(MatrixXd::Constant(3, 2, 1.25), StorageType::F64);
    io::write_feature_dump(dir.path / "a.pedf", fm);
    CHECK(io::load_feature_dump(dir.path / "a.pedf").data == fm.data);

    io::write_text(dir.path / "b.csv", "1.25,1.25\n1.25,1.25\n1.25,1.25\n");
    CHECK(io::load_feature_dump(dir.path / "b.csv").data == fm.data);

    io::write_text(dir.path / "c.bin", "XXXXjunk");
    CHECK(code_of([&] { io::load_feature_dump(dir.path / "c.bin"); }) == ErrorCode::BadMagic);
    CHECK(code_of([&] { io::load_feature_dump(dir.path / "missing.pedf"); }) == ErrorCode::FileError);

    io::write_labels(dir.path / "y.pedl", io::make_labels({1, 2, 2}));
    CHECK(io::load_labels(dir.path / "y.pedl").p == 2);
    io::write_text(dir.path / "y.csv", "2\n1\n");
    CHECK(io::load_labels(dir.path / "y.csv").labels == std::vector<int>{2, 1});
}
