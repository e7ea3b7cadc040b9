#include "pefusion/svm/model_file.hpp"

#include "pefusion/binary_io.hpp"
#include "pefusion/error.hpp"
#include "pefusion/feature_file.hpp"

#include <bit>
#include <string>
#include <vector>

namespace pefusion::svm {

namespace {

constexpr std::string_view magic = "PESV";

[[noreturn]] void bad_header(const std::string &source, const std::string &what) {
    throw FormatError(FormatError::Kind::bad_header, source + ": " + what);
}

}  // namespace

std::string encode_model(const MulticlassModel &model) {
    model.validate();
    nlohmann::json header;
    header["classes"] = model.classes;
    header["scheme"] = std::string(to_string(model.scheme));
    header["C"] = model.C;
    header["gamma"] = model.params.gamma;
    header["fingerprint"] = model.fingerprint;
    header["dimension"] = model.pool.cols();
    header["pool_rows"] = model.pool.rows();
    header["standardizer"] = model.standardizer ? model.standardizer->to_json() : nlohmann::json(nullptr);
    nlohmann::json machines = nlohmann::json::array();
    for (const auto &m : model.machines) {
        machines.push_back({{"positive", m.positive},
                            {"negative", m.negative == Machine::rest ? nlohmann::json(nullptr) : nlohmann::json(m.negative)},
                            {"bias", m.bias},
                            {"coefs", m.coefs},
                            {"sv_ids", m.sv_ids},
                            {"iterations", m.iterations},
                            {"converged", m.converged}});
    }
    header["machines"] = machines;
    const std::string text = header.dump();

    std::string out;
    out.append(magic);
    binary::put_u16(out, model_file_version);
    binary::put_u64(out, text.size());
    out.append(text);
    for (const auto &m : model.machines) {
        for (const auto id : m.sv_ids) {
            const auto row = model.pool.row(static_cast<Eigen::Index>(id));
            for (Eigen::Index c = 0; c < row.size(); ++c) {
                binary::put_f32(out, static_cast<float>(row[c]));
            }
        }
    }
    return out;
}

MulticlassModel decode_model(std::string_view bytes, const std::string &source) {
    binary::Reader in(bytes, source);
    if (bytes.size() < magic.size() || in.take(magic.size()) != magic) {
        throw FormatError(FormatError::Kind::bad_magic, source + ": not a PESV model file");
    }
    const auto version = in.u16();
    if (version != model_file_version) {
        throw FormatError(FormatError::Kind::unsupported_version,
                          source + ": unsupported PESV version " + std::to_string(version));
    }
    const auto header_len = in.u64();
    if (header_len > in.remaining()) {
        throw FormatError(FormatError::Kind::truncated, source + ": header length exceeds file size");
    }
    const auto header_text = in.take(header_len);

    MulticlassModel model;
    std::uint64_t dim = 0;
    std::uint64_t pool_rows = 0;
    try {
        const auto h = nlohmann::json::parse(header_text);
        model.classes = h.at("classes").get<std::vector<ClassLabel>>();
        model.scheme = scheme_from_string(h.at("scheme").get<std::string>());
        model.C = h.at("C").get<double>();
        model.params.gamma = h.at("gamma").get<double>();
        model.fingerprint = h.at("fingerprint").get<std::string>();
        dim = h.at("dimension").get<std::uint64_t>();
        pool_rows = h.at("pool_rows").get<std::uint64_t>();
        if (!h.at("standardizer").is_null()) {
            model.standardizer = fusion::Standardizer::from_json(h.at("standardizer"));
        }
        for (const auto &mj : h.at("machines")) {
            Machine m;
            m.positive = mj.at("positive").get<std::size_t>();
            m.negative = mj.at("negative").is_null() ? Machine::rest : mj.at("negative").get<std::size_t>();
            m.bias = mj.at("bias").get<double>();
            m.coefs = mj.at("coefs").get<std::vector<double>>();
            m.sv_ids = mj.at("sv_ids").get<std::vector<std::size_t>>();
            m.iterations = mj.at("iterations").get<std::size_t>();
            m.converged = mj.at("converged").get<bool>();
            model.machines.push_back(std::move(m));
        }
    } catch (const nlohmann::json::exception &e) {
        bad_header(source, std::string("malformed model header: ") + e.what());
    } catch (const ConfigError &e) {
        bad_header(source, e.what());
    }
    if (dim == 0 || dim > (std::uint64_t{1} << 32) || pool_rows > (std::uint64_t{1} << 32)) {
        bad_header(source, "implausible support-vector dimensions");
    }
    std::uint64_t total_svs = 0;
    for (const auto &m : model.machines) {
        total_svs += m.sv_ids.size();
    }
    if (pool_rows > total_svs) {
        throw FormatError(FormatError::Kind::count_mismatch, source + ": more pool rows than stored support vectors");
    }
    if (total_svs > in.remaining() / 4 / dim) {
        throw FormatError(FormatError::Kind::truncated, source + ": support-vector blocks shorter than declared");
    }

    model.pool.resize(static_cast<Eigen::Index>(pool_rows), static_cast<Eigen::Index>(dim));
    std::vector<bool> seen(pool_rows, false);
    std::vector<float> row(dim);
    for (const auto &m : model.machines) {
        for (const auto id : m.sv_ids) {
            for (auto &v : row) {
                v = in.f32();
            }
            if (id >= pool_rows) {
                throw FormatError(FormatError::Kind::bad_value, source + ": support-vector id out of range");
            }
            const auto r = static_cast<Eigen::Index>(id);
            if (seen[id]) {
                for (std::size_t c = 0; c < dim; ++c) {
                    if (std::bit_cast<std::uint32_t>(static_cast<float>(model.pool(r, static_cast<Eigen::Index>(c)))) !=
                        std::bit_cast<std::uint32_t>(row[c])) {
                        throw FormatError(FormatError::Kind::bad_value,
                                          source + ": support vector " + std::to_string(id) +
                                              " stored inconsistently across machines");
                    }
                }
            } else {
                seen[id] = true;
                for (std::size_t c = 0; c < dim; ++c) {
                    model.pool(r, static_cast<Eigen::Index>(c)) = row[c];
                }
            }
        }
    }
    in.expect_end();
    for (std::size_t r = 0; r < pool_rows; ++r) {
        if (!seen[r]) {
            throw FormatError(FormatError::Kind::count_mismatch,
                              source + ": support-vector pool row " + std::to_string(r) + " is never stored");
        }
    }
    model.validate();
    return model;
}

void write_model(const std::filesystem::path &path, const MulticlassModel &model) {
    fusion::write_file_bytes(path, encode_model(model));
}

MulticlassModel read_model(const std::filesystem::path &path) {
    return decode_model(fusion::read_file_bytes(path), path.string());
}

}  // namespace pefusion::svm
