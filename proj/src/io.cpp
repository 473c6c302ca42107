#include "mfseg/io.hpp"

#include <bit>
#include <cmath>
#include <cctype>
#include <cstring>
#include <fstream>
#include <iterator>
#include <vector>

#include "mfseg/errors.hpp"

namespace mfseg::io {

namespace {

std::vector<unsigned char> read_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::kIo, "cannot open '" + path.string() + "' for reading");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::filesystem::path& path, const void* data, std::size_t size) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::kIo, "cannot open '" + path.string() + "' for writing");
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
    if (!out) throw Error(ErrorKind::kIo, "write to '" + path.string() + "' failed");
}

void put_u32_le(std::vector<unsigned char>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

std::uint32_t get_u32(const unsigned char* p, bool little) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
        const int shift = little ? 8 * i : 8 * (3 - i);
        v |= static_cast<std::uint32_t>(p[i]) << shift;
    }
    return v;
}

void require_square_power_of_two(std::uint32_t width, std::uint32_t height, const std::string& what) {
    if (width != height) {
        throw Error(ErrorKind::kDimension, what + " must be square, got " + std::to_string(width) + "x" +
                                               std::to_string(height));
    }
    if (width > (1u << 16) || !is_power_of_two(static_cast<int>(width))) {
        throw Error(ErrorKind::kDimension, what + " width " + std::to_string(width) + " is not a power of two");
    }
}

}  // namespace

void write_image(const std::filesystem::path& path, const Image& image) {
    std::vector<unsigned char> out{'M', 'F', 'R', 'W', 'L', 0, 0, 0};
    const auto side = static_cast<std::uint32_t>(image.side());
    put_u32_le(out, side);
    put_u32_le(out, side);
    out.reserve(out.size() + 4 * image.size());
    for (double v : image) {
        const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
        put_u32_le(out, bits);
    }
    write_bytes(path, out.data(), out.size());
}

Image read_image(const std::filesystem::path& path) {
    const auto bytes = read_bytes(path);
    if (bytes.size() < 16 || std::memcmp(bytes.data(), "MFRW", 4) != 0) {
        throw Error(ErrorKind::kIo, "'" + path.string() + "' is not an MFRW image");
    }
    const unsigned char order = bytes[4];
    if (order != 'L' && order != 'B') throw Error(ErrorKind::kIo, "unknown byte order in '" + path.string() + "'");
    const bool little = order == 'L';
    const std::uint32_t width = get_u32(&bytes[8], little);
    const std::uint32_t height = get_u32(&bytes[12], little);
    require_square_power_of_two(width, height, "image");
    const std::size_t n = static_cast<std::size_t>(width) * height;
    if (bytes.size() != 16 + 4 * n) throw Error(ErrorKind::kIo, "truncated image '" + path.string() + "'");
    Image image(static_cast<int>(width));
    for (std::size_t i = 0; i < n; ++i) {
        const float v = std::bit_cast<float>(get_u32(&bytes[16 + 4 * i], little));
        if (!std::isfinite(v)) throw Error(ErrorKind::kNumeric, "non-finite pixel in '" + path.string() + "'");
        image[i] = v;
    }
    return image;
}

void write_mask(const std::filesystem::path& path, const Grid<std::uint8_t>& mask) {
    std::string header = "P5\n" + std::to_string(mask.side()) + " " + std::to_string(mask.side()) + "\n255\n";
    std::string data = header;
    data.append(reinterpret_cast<const char*>(mask.data()), mask.size());
    write_bytes(path, data.data(), data.size());
}

Grid<std::uint8_t> read_mask(const std::filesystem::path& path) {
    const auto bytes = read_bytes(path);
    std::size_t pos = 0;
    auto bad = [&] { return Error(ErrorKind::kIo, "'" + path.string() + "' is not a binary 8-bit graymap"); };
    auto skip_space = [&] {
        while (pos < bytes.size()) {
            if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (std::isspace(bytes[pos])) {
                ++pos;
            } else {
                break;
            }
        }
    };
    auto number = [&] {
        skip_space();
        std::uint32_t v = 0;
        const std::size_t start = pos;
        while (pos < bytes.size() && std::isdigit(bytes[pos]) && pos - start < 9) v = 10 * v + (bytes[pos++] - '0');
        if (pos == start) throw bad();
        return v;
    };
    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') throw bad();
    pos = 2;
    const std::uint32_t width = number();
    const std::uint32_t height = number();
    const std::uint32_t maxval = number();
    if (maxval == 0 || maxval > 255 || pos >= bytes.size() || !std::isspace(bytes[pos])) throw bad();
    ++pos;
    require_square_power_of_two(width, height, "mask");
    const std::size_t n = static_cast<std::size_t>(width) * height;
    if (bytes.size() - pos != n) throw Error(ErrorKind::kIo, "truncated mask '" + path.string() + "'");
    Grid<std::uint8_t> mask(static_cast<int>(width));
    std::memcpy(mask.data(), bytes.data() + pos, n);
    return mask;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    write_bytes(path, text.data(), text.size());
}

}  // namespace mfseg::io
