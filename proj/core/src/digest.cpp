#include "synthwave/digest.hpp"

#include <array>
#include <cstdint>
#include <cstring>
#include <sstream>

namespace synthwave::io {

namespace {

uint32_t rol(uint32_t v, int bits) { return (v << bits) | (v >> (32 - bits)); }

}  // namespace

std::string sha1_hex(const std::string& bytes) {
    std::array<uint32_t, 5> h{0x67452301u, 0xEFCDAB89u, 0x98BADCFEu, 0x10325476u, 0xC3D2E1F0u};

    std::string msg = bytes;
    const uint64_t bit_length = uint64_t(bytes.size()) * 8;
    msg.push_back(char(0x80));
    while (msg.size() % 64 != 56) msg.push_back('\0');
    for (int i = 7; i >= 0; --i) msg.push_back(char((bit_length >> (8 * i)) & 0xff));

    for (size_t chunk = 0; chunk < msg.size(); chunk += 64) {
        uint32_t w[80];
        for (int i = 0; i < 16; ++i)
            w[i] = (uint32_t(uint8_t(msg[chunk + 4 * i])) << 24) |
                   (uint32_t(uint8_t(msg[chunk + 4 * i + 1])) << 16) |
                   (uint32_t(uint8_t(msg[chunk + 4 * i + 2])) << 8) |
                   uint32_t(uint8_t(msg[chunk + 4 * i + 3]));
        for (int i = 16; i < 80; ++i)
            w[i] = rol(w[i - 3] ^ w[i - 8] ^ w[i - 14] ^ w[i - 16], 1);

        uint32_t a = h[0], b = h[1], c = h[2], d = h[3], e = h[4];
        for (int i = 0; i < 80; ++i) {
            uint32_t f, k;
            if (i < 20) { f = (b & c) | (~b & d); k = 0x5A827999u; }
            else if (i < 40) { f = b ^ c ^ d; k = 0x6ED9EBA1u; }
            else if (i < 60) { f = (b & c) | (b & d) | (c & d); k = 0x8F1BBCDCu; }
            else { f = b ^ c ^ d; k = 0xCA62C1D6u; }
            const uint32_t tmp = rol(a, 5) + f + e + k + w[i];
            e = d;
            d = c;
            c = rol(b, 30);
            b = a;
            a = tmp;
        }
        h[0] += a; h[1] += b; h[2] += c; h[3] += d; h[4] += e;
    }

    std::ostringstream os;
    os << std::hex;
    for (uint32_t v : h)
        for (int i = 7; i >= 0; --i) os << ((v >> (4 * i)) & 0xf);
    return os.str();
}

std::string git_blob_hash(const std::string& content) {
    std::string header = "blob " + std::to_string(content.size());
    header.push_back('\0');
    return sha1_hex(header + content);
}

}  // namespace synthwave::io
