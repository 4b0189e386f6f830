#include "bnat/model_io.hpp"

#include <cstdio>
#include <limits>
#include <memory>

#include "bnat/crc32.hpp"
#include "bnat/errors.hpp"
#include "bytes.hpp"

namespace bnat {

namespace {

constexpr std::uint8_t kMagic[4] = {'B', 'N', 'D', 'M'};
constexpr std::uint8_t kVersion = 0x01;

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

} // namespace

std::vector<std::uint8_t> serialize_model(const DbnModel& model) {
    model.validate();
    const std::vector<std::size_t> dims = model.arch.dims();
    if (dims.size() > std::numeric_limits<std::uint32_t>::max())
        throw ConfigError("serialize model: dimension chain too long");

    std::vector<std::uint8_t> out;
    out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
    out.push_back(kVersion);
    detail::put_u32(out, static_cast<std::uint32_t>(dims.size()));
    for (std::size_t d : dims) {
        if (d > std::numeric_limits<std::uint32_t>::max())
            throw ConfigError("serialize model: dimension exceeds u32");
        detail::put_u32(out, static_cast<std::uint32_t>(d));
    }
    for (double v : flatten(model)) detail::put_f64(out, v);
    detail::put_u32(out, crc32(out));
    return out;
}

DbnModel parse_model(std::span<const std::uint8_t> bytes) {
    constexpr std::size_t kHeader = 4 + 1 + 4;
    if (bytes.size() < kHeader + 4) throw DataError("model file: truncated header");
    for (std::size_t i = 0; i < 4; ++i)
        if (bytes[i] != kMagic[i]) throw DataError("model file: bad magic, not a model file");
    if (bytes[4] != kVersion)
        throw DataError("model file: unsupported version " + std::to_string(bytes[4]));

    const std::uint32_t dim_count = detail::get_u32(bytes, 5);
    if (dim_count < 3)
        throw DataError("model file: dimension chain needs input, hidden, classes");
    const std::size_t dims_end = kHeader + std::size_t{4} * dim_count;
    if (bytes.size() < dims_end + 4) throw DataError("model file: truncated dimension chain");

    Architecture arch;
    arch.input_dim = detail::get_u32(bytes, kHeader);
    arch.hidden.clear();
    for (std::uint32_t i = 1; i + 1 < dim_count; ++i)
        arch.hidden.push_back(detail::get_u32(bytes, kHeader + std::size_t{4} * i));
    arch.classes = detail::get_u32(bytes, kHeader + std::size_t{4} * (dim_count - 1));
    try {
        arch.validate();
    } catch (const ConfigError& e) {
        throw DataError(std::string("model file: ") + e.what());
    }

    const std::size_t expected = dims_end + 8 * arch.param_count() + 4;
    if (bytes.size() != expected)
        throw DataError("model file: size " + std::to_string(bytes.size()) +
                        " does not match dimension chain (expected " +
                        std::to_string(expected) + ")");

    const std::uint32_t stored = detail::get_u32(bytes, bytes.size() - 4);
    const std::uint32_t actual = crc32(bytes.first(bytes.size() - 4));
    if (stored != actual) throw DataError("model file: CRC mismatch, file corrupt");

    std::vector<double> flat(arch.param_count());
    for (std::size_t i = 0; i < flat.size(); ++i)
        flat[i] = detail::get_f64(bytes, dims_end + 8 * i);
    DbnModel model = unflatten_model(flat, arch);
    model.validate();
    return model;
}

void save_model(const std::string& path, const DbnModel& model) {
    const std::vector<std::uint8_t> bytes = serialize_model(model);
    FilePtr f(std::fopen(path.c_str(), "wb"));
    if (!f) throw DataError("cannot open " + path + " for writing");
    if (std::fwrite(bytes.data(), 1, bytes.size(), f.get()) != bytes.size())
        throw DataError("short write to " + path);
    if (std::fflush(f.get()) != 0) throw DataError("flush failed for " + path);
}

DbnModel load_model(const std::string& path) {
    FilePtr f(std::fopen(path.c_str(), "rb"));
    if (!f) throw DataError("cannot open model file " + path);
    std::vector<std::uint8_t> bytes;
    std::uint8_t buf[65536];
    std::size_t got;
    while ((got = std::fread(buf, 1, sizeof buf, f.get())) > 0)
        bytes.insert(bytes.end(), buf, buf + got);
    if (std::ferror(f.get())) throw DataError("read error on model file " + path);
    try {
        return parse_model(bytes);
    } catch (const DataError& e) {
        throw DataError(path + ": " + e.what());
    }
}

} // namespace bnat
