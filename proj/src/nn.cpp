#include "sonarmatch/nn.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>

namespace sonarmatch::nn {

namespace {

constexpr char kMagic[4] = {'T', 'F', 'W', '1'};

void write_u32(std::ostream& os, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    os.write(reinterpret_cast<char*>(b), 4);
}

void write_u16(std::ostream& os, uint16_t v) {
    unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff)};
    os.write(reinterpret_cast<char*>(b), 2);
}

bool read_bytes(std::istream& is, void* dst, size_t n) {
    is.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    return static_cast<size_t>(is.gcount()) == n;
}

uint32_t parse_u32(const unsigned char* b) {
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

} // namespace

void save_tensors(const std::string& path, const std::vector<NamedTensor>& tensors) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("save_tensors: cannot open " + path);
    os.write(kMagic, 4);
    write_u32(os, static_cast<uint32_t>(tensors.size()));
    for (const auto& t : tensors) {
        write_u16(os, static_cast<uint16_t>(t.name.size()));
        os.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
        os.put(static_cast<char>(t.dims.size()));
        for (uint32_t d : t.dims) write_u32(os, d);
        if (t.data.size() != t.element_count())
            throw TensorShapeError("save_tensors: data size mismatch for tensor " + t.name);
        // float32 little-endian; this build targets little-endian hosts
        for (float f : t.data) {
            uint32_t bits;
            std::memcpy(&bits, &f, 4);
            write_u32(os, bits);
        }
    }
    if (!os) throw Error("save_tensors: write failed for " + path);
}

std::vector<NamedTensor> load_tensors(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("load_tensors: cannot open " + path);

    char magic[4];
    if (!read_bytes(is, magic, 4)) throw TruncatedFileError("load_tensors: truncated header");
    if (std::memcmp(magic, kMagic, 4) != 0)
        throw BadMagicError("load_tensors: bad magic bytes in " + path);

    unsigned char buf[4];
    if (!read_bytes(is, buf, 4)) throw TruncatedFileError("load_tensors: truncated tensor count");
    const uint32_t count = parse_u32(buf);

    std::vector<NamedTensor> tensors;
    tensors.reserve(count);
    for (uint32_t i = 0; i < count; ++i) {
        NamedTensor t;
        unsigned char len_buf[2];
        if (!read_bytes(is, len_buf, 2)) throw TruncatedFileError("load_tensors: truncated name length");
        const uint16_t name_len = static_cast<uint16_t>(len_buf[0] | (len_buf[1] << 8));
        t.name.resize(name_len);
        if (!read_bytes(is, t.name.data(), name_len))
            throw TruncatedFileError("load_tensors: truncated name");
        unsigned char rank;
        if (!read_bytes(is, &rank, 1)) throw TruncatedFileError("load_tensors: truncated rank");
        t.dims.resize(rank);
        for (int d = 0; d < rank; ++d) {
            if (!read_bytes(is, buf, 4)) throw TruncatedFileError("load_tensors: truncated dims");
            t.dims[d] = parse_u32(buf);
        }
        const size_t n = t.element_count();
        t.data.resize(n);
        for (size_t e = 0; e < n; ++e) {
            if (!read_bytes(is, buf, 4))
                throw TruncatedFileError("load_tensors: truncated data in tensor " + t.name);
            uint32_t bits = parse_u32(buf);
            std::memcpy(&t.data[e], &bits, 4);
        }
        tensors.push_back(std::move(t));
    }
    // Anything after the last tensor is a malformed file.
    char extra;
    if (is.read(&extra, 1); is.gcount() != 0)
        throw FormatError("load_tensors: trailing bytes after last tensor in " + path);
    return tensors;
}

} // namespace sonarmatch::nn
