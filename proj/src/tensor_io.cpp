#include "psad/tensor_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace psad {
namespace detail {

void ByteReader::need(std::size_t n) {
    if (pos_ + n > bytes_.size())
        throw FormatError(context_ + ": truncated (wanted " + std::to_string(n) +
                          " bytes at offset " + std::to_string(pos_) + ")");
}

std::uint8_t ByteReader::u8() {
    need(1);
    return static_cast<std::uint8_t>(bytes_[pos_++]);
}

std::uint16_t ByteReader::u16() {
    need(2);
    std::uint16_t v = 0;
    for (int i = 0; i < 2; ++i) v |= std::uint16_t(std::uint8_t(bytes_[pos_++])) << (8 * i);
    return v;
}

std::uint32_t ByteReader::u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(std::uint8_t(bytes_[pos_++])) << (8 * i);
    return v;
}

std::uint64_t ByteReader::u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(std::uint8_t(bytes_[pos_++])) << (8 * i);
    return v;
}

float ByteReader::f32() { return std::bit_cast<float>(u32()); }
double ByteReader::f64() { return std::bit_cast<double>(u64()); }

void ByteReader::raw(void* out, std::size_t n) {
    need(n);
    std::memcpy(out, bytes_.data() + pos_, n);
    pos_ += n;
}

void ByteReader::expect_magic(const char (&magic)[5]) {
    need(4);
    if (std::memcmp(bytes_.data() + pos_, magic, 4) != 0)
        throw FormatError(context_ + ": bad magic, expected \"" + std::string(magic, 4) + "\"");
    pos_ += 4;
}

void ByteReader::require_exhausted() {
    if (pos_ != bytes_.size())
        throw FormatError(context_ + ": trailing bytes after payload");
}

void put_u8(std::string& out, std::uint8_t v) { out.push_back(static_cast<char>(v)); }

void put_u16(std::string& out, std::uint16_t v) {
    for (int i = 0; i < 2; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }
void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("read failed for " + path.string());
    return bytes;
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw IoError("write failed for " + path.string());
}

} // namespace detail

using namespace detail;

void write_tensor(const Tensor& t, const std::filesystem::path& path) {
    if (t.ndim() == 0) throw ContractError("cannot write an empty tensor");
    std::string out;
    out.reserve(5 + 8 * t.ndim() + 4 * t.size());
    out += "PFT1";
    put_u8(out, static_cast<std::uint8_t>(t.ndim()));
    for (std::size_t d : t.shape()) put_u64(out, d);
    for (std::size_t i = 0; i < t.size(); ++i) put_f32(out, t.data()[i]);
    write_file(path, out);
}

Tensor read_tensor(const std::filesystem::path& path) {
    const std::string bytes = read_file(path);
    ByteReader in(bytes, path.string());
    in.expect_magic("PFT1");
    const std::uint8_t ndim = in.u8();
    if (ndim == 0) throw FormatError(path.string() + ": tensor with zero dimensions");
    std::vector<std::size_t> shape(ndim);
    for (auto& d : shape) {
        const std::uint64_t v = in.u64();
        if (v == 0) throw FormatError(path.string() + ": zero-sized dimension");
        d = static_cast<std::size_t>(v);
    }
    std::size_t count;
    try {
        count = Tensor::checked_size(shape);
    } catch (const ContractError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
    std::vector<float> data(count);
    for (auto& v : data) v = in.f32();
    in.require_exhausted();
    return Tensor(std::move(shape), std::move(data));
}

void write_segmap(const SegMap& m, const std::filesystem::path& path) {
    m.validate();
    std::string out;
    out.reserve(5 + 16 + 2 + 2 * m.size());
    out += "PSM1";
    put_u8(out, 2);
    put_u64(out, m.height);
    put_u64(out, m.width);
    put_u16(out, m.n_classes);
    for (std::uint16_t v : m.labels) put_u16(out, v);
    write_file(path, out);
}

SegMap read_segmap(const std::filesystem::path& path) {
    const std::string bytes = read_file(path);
    ByteReader in(bytes, path.string());
    in.expect_magic("PSM1");
    const std::uint8_t ndim = in.u8();
    if (ndim != 2) throw FormatError(path.string() + ": segmap must be 2-d");
    const std::uint64_t h = in.u64();
    const std::uint64_t w = in.u64();
    if (h == 0 || w == 0) throw FormatError(path.string() + ": zero-sized dimension");
    if (h > (1u << 20) || w > (1u << 20) || h * w > (1u << 28))
        throw FormatError(path.string() + ": segmap too large");
    SegMap m(static_cast<std::size_t>(h), static_cast<std::size_t>(w), 0);
    m.n_classes = in.u16();
    for (auto& v : m.labels) {
        v = in.u16();
        if (v >= m.n_classes)
            throw FormatError(path.string() + ": label " + std::to_string(v) +
                              " >= n_classes " + std::to_string(m.n_classes));
    }
    in.require_exhausted();
    return m;
}

} // namespace psad
