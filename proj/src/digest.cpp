#include "pefusion/digest.hpp"

#include "pefusion/error.hpp"

#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <memory>
#include <sstream>

namespace pefusion {

namespace {

struct DigestContext {
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx{EVP_MD_CTX_new(), &EVP_MD_CTX_free};

    DigestContext() {
        if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
            throw Error("failed to initialise SHA-256");
        }
    }
    void update(const char *data, std::size_t n) { EVP_DigestUpdate(ctx.get(), data, n); }
    std::string finish() {
        std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
        unsigned int len = 0;
        EVP_DigestFinal_ex(ctx.get(), md.data(), &len);
        static constexpr char hex[] = "0123456789abcdef";
        std::string out;
        out.reserve(2 * len);
        for (unsigned int i = 0; i < len; ++i) {
            out.push_back(hex[md[i] >> 4]);
            out.push_back(hex[md[i] & 0xf]);
        }
        return out;
    }
};

}  // namespace

std::string sha256_hex(std::string_view bytes) {
    DigestContext d;
    d.update(bytes.data(), bytes.size());
    return d.finish();
}

std::string sha256_file(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    DigestContext d;
    std::array<char, 1 << 16> buf{};
    while (in) {
        in.read(buf.data(), buf.size());
        d.update(buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    return d.finish();
}

ChecksumRegistry read_checksum_registry(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open checksum registry " + path.string());
    }
    ChecksumRegistry registry;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        std::istringstream fields(line);
        std::string name;
        std::string digest;
        if (!(fields >> name)) {
            continue;
        }
        if (!(fields >> digest) || digest.size() != 64) {
            throw FormatError(FormatError::Kind::bad_value,
                              path.string() + ":" + std::to_string(lineno) + ": expected '<name> <sha256>'");
        }
        registry[name] = digest;
    }
    return registry;
}

bool verify_checksum(const std::filesystem::path &file, const ChecksumRegistry &registry) {
    const auto it = registry.find(file.filename().string());
    if (it == registry.end()) {
        return false;
    }
    const auto actual = sha256_file(file);
    if (actual != it->second) {
        throw FormatError(FormatError::Kind::bad_value,
                          "checksum mismatch for " + file.string() + ": expected " + it->second + ", got " + actual);
    }
    return true;
}

}  // namespace pefusion
