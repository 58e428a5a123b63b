#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "mopatch/common.hpp"

namespace mopatch::binio {

// All on-disk formats are little-endian. Values are packed byte by byte so
// the files are identical regardless of host endianness.

inline void put_u32(std::ostream& os, uint32_t v) {
    unsigned char b[4] = {(unsigned char)(v), (unsigned char)(v >> 8),
                          (unsigned char)(v >> 16), (unsigned char)(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

inline void put_f32(std::ostream& os, float v) {
    uint32_t u;
    std::memcpy(&u, &v, 4);
    put_u32(os, u);
}

inline void put_f32s(std::ostream& os, const float* v, size_t n) {
    for (size_t i = 0; i < n; ++i) put_f32(os, v[i]);
}

inline void put_str(std::ostream& os, const std::string& s) {
    put_u32(os, uint32_t(s.size()));
    os.write(s.data(), std::streamsize(s.size()));
}

inline uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) fail("binio: unexpected end of file");
    return uint32_t(b[0]) | uint32_t(b[1]) << 8 | uint32_t(b[2]) << 16 | uint32_t(b[3]) << 24;
}

inline float get_f32(std::istream& is) {
    uint32_t u = get_u32(is);
    float v;
    std::memcpy(&v, &u, 4);
    return v;
}

inline void get_f32s(std::istream& is, float* v, size_t n) {
    for (size_t i = 0; i < n; ++i) v[i] = get_f32(is);
}

inline std::string get_str(std::istream& is) {
    uint32_t n = get_u32(is);
    std::string s(n, '\0');
    is.read(s.data(), n);
    if (!is) fail("binio: unexpected end of file");
    return s;
}

inline void expect_magic(std::istream& is, const char magic[4], const std::string& what) {
    char b[4];
    is.read(b, 4);
    if (!is || std::memcmp(b, magic, 4) != 0) fail(what + ": bad magic");
}

inline std::ofstream open_out(const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) fail("cannot open for writing: " + path);
    return os;
}

inline std::ifstream open_in(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) fail("cannot open for reading: " + path);
    return is;
}

}  // namespace mopatch::binio
