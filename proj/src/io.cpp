#include "qdc/io.hpp"

#include "qdc/errors.hpp"

#include <openssl/evp.h>

#include <array>
#include <charconv>
#include <fstream>
#include <memory>
#include <ostream>
#include <sstream>

namespace qdc::io {

std::string fmt(double x) {
    if (x == 0.0) return "0";  // folds -0
    std::array<char, 64> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
    if (ec != std::errc{}) throw Error("fmt: number formatting failed");
    return std::string(buf.data(), end);
}

void write_row(std::ostream& os, std::initializer_list<std::string_view> fields) {
    bool first = true;
    for (auto f : fields) {
        if (!first) os << ',';
        os << f;
        first = false;
    }
    os << '\n';
}

void write_pgm16(std::ostream& os, int width, int height, std::uint16_t maxval,
                 std::span<const std::uint16_t> pixels) {
    if (static_cast<std::size_t>(width) * static_cast<std::size_t>(height) != pixels.size())
        throw InvalidArgument("write_pgm16: pixel count does not match image size");
    if (maxval == 0) maxval = 1;
    os << "P5\n" << width << ' ' << height << '\n' << maxval << '\n';
    for (std::uint16_t p : pixels) {
        const char bytes[2] = {static_cast<char>(p >> 8), static_cast<char>(p & 0xff)};
        os.write(bytes, 2);
    }
}

std::string sha256_hex(std::string_view bytes) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1)
        throw Error("sha256: digest failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[md[i] >> 4]);
        out.push_back(hex[md[i] & 0xf]);
    }
    return out;
}

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error("cannot open '" + p.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string sha256_file(const std::filesystem::path& p) { return sha256_hex(read_file(p)); }

}  // namespace qdc::io
