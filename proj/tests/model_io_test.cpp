#include <doctest.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "bnat/dbn.hpp"
#include "bnat/model_io.hpp"

using namespace bnat;
namespace fs = std::filesystem;

namespace {

DbnModel sample_model(std::uint64_t seed = 77) {
    Architecture arch;
    arch.input_dim = 5;
    arch.hidden = {6, 3};
    arch.classes = 4;
    return init_model(arch, seed);
}

} // namespace

TEST_CASE("serialized models parse back identically") {
    const DbnModel model = sample_model();
    const std::vector<std::uint8_t> bytes = serialize_model(model);
    const DbnModel back = parse_model(bytes);
    CHECK(flatten(back) == flatten(model));
    CHECK(back.arch == model.arch);

    // serialization is deterministic
    CHECK(serialize_model(model) == bytes);
}

TEST_CASE("header layout: magic, version, dimension chain") {
    const DbnModel model = sample_model();
    const std::vector<std::uint8_t> bytes = serialize_model(model);
    CHECK(bytes[0] == 'B');
    CHECK(bytes[1] == 'N');
    CHECK(bytes[2] == 'D');
    CHECK(bytes[3] == 'M');
    CHECK(bytes[4] == 0x01);
    // dim count 4, then dims 5, 6, 3, 4 as u32 LE
    CHECK(bytes[5] == 4);
    CHECK(bytes[9] == 5);
    CHECK(bytes[13] == 6);
    CHECK(bytes[17] == 3);
    CHECK(bytes[21] == 4);
}

TEST_CASE("corruption and foreign files are told apart") {
    const DbnModel model = sample_model();
    std::vector<std::uint8_t> bytes = serialize_model(model);

    SUBCASE("flipped payload byte fails the checksum") {
        bytes[30] ^= 0x40;
        try {
            parse_model(bytes);
            FAIL("expected DataError");
        } catch (const DataError& e) {
            CHECK(std::string(e.what()).find("corrupt") != std::string::npos);
        }
    }
    SUBCASE("wrong magic is a foreign file") {
        bytes[0] = 'X';
        try {
            parse_model(bytes);
            FAIL("expected DataError");
        } catch (const DataError& e) {
            CHECK(std::string(e.what()).find("not a model file") != std::string::npos);
        }
    }
    SUBCASE("unsupported version") {
        bytes[4] = 0x02;
        CHECK_THROWS_AS(parse_model(bytes), DataError);
    }
    SUBCASE("truncation") {
        bytes.resize(bytes.size() - 3);
        CHECK_THROWS_AS(parse_model(bytes), DataError);
    }
    SUBCASE("trailing garbage") {
        bytes.push_back(0);
        CHECK_THROWS_AS(parse_model(bytes), DataError);
    }
}

TEST_CASE("file round trip and load errors name the path") {
    const fs::path p = fs::temp_directory_path() / "bnat_test_model.bndm";
    fs::remove(p);
    const DbnModel model = sample_model(3);
    save_model(p.string(), model);
    const DbnModel back = load_model(p.string());
    CHECK(flatten(back) == flatten(model));

    // corrupt the file on disk: load reports path and corruption
    {
        std::fstream f(p, std::ios::in | std::ios::out | std::ios::binary);
        f.seekg(40);
        const char old = static_cast<char>(f.get());
        f.seekp(40);
        f.put(static_cast<char>(old ^ 0x55));
    }
    try {
        load_model(p.string());
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find(p.filename().string()) != std::string::npos);
    }
    fs::remove(p);

    CHECK_THROWS_AS(load_model((fs::temp_directory_path() / "bnat_missing.bndm").string()),
                    DataError);
}
