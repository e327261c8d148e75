#pragma once

#include <filesystem>

#include "psad/tensor.hpp"

namespace psad {

// Portable little-endian container formats.
//
//   PFT1 tensor file:  "PFT1" | u8 ndim | ndim x u64 dims | f32 payload (row-major)
//   PSM1 segmap file:  "PSM1" | u8 ndim (=2) | 2 x u64 dims | u16 n_classes | u16 labels
//
// Round-trips are bit-exact; encoding is fixed little-endian regardless of host.

void write_tensor(const Tensor& t, const std::filesystem::path& path);
Tensor read_tensor(const std::filesystem::path& path);

void write_segmap(const SegMap& m, const std::filesystem::path& path);
SegMap read_segmap(const std::filesystem::path& path);

namespace detail {

/// Cursor over an in-memory file image; all reads bounds-checked.
class ByteReader {
public:
    ByteReader(const std::string& bytes, std::string context)
        : bytes_(bytes), context_(std::move(context)) {}

    std::uint8_t u8();
    std::uint16_t u16();
    std::uint32_t u32();
    std::uint64_t u64();
    float f32();
    double f64();
    void raw(void* out, std::size_t n);
    void expect_magic(const char (&magic)[5]);
    bool exhausted() const { return pos_ == bytes_.size(); }
    void require_exhausted();

private:
    void need(std::size_t n);
    const std::string& bytes_;
    std::string context_;
    std::size_t pos_ = 0;
};

void put_u8(std::string& out, std::uint8_t v);
void put_u16(std::string& out, std::uint16_t v);
void put_u32(std::string& out, std::uint32_t v);
void put_u64(std::string& out, std::uint64_t v);
void put_f32(std::string& out, float v);
void put_f64(std::string& out, double v);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& bytes);

} // namespace detail

} // namespace psad
