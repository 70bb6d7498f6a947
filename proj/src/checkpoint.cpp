#include "mmfusion/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "mmfusion/errors.hpp"

namespace mmfusion {

namespace {

constexpr char kMagic[16] = {'M', 'M', 'F', 'U', 'S', 'I', 'O', 'N',
                             'C', 'H', 'E', 'C', 'K', 'P', 'T', '1'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
    const char b[4] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                       static_cast<char>((v >> 16) & 0xFF),
                       static_cast<char>((v >> 24) & 0xFF)};
    out.write(b, 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
    put_u32(out, static_cast<std::uint32_t>(v & 0xFFFFFFFFu));
    put_u32(out, static_cast<std::uint32_t>(v >> 32));
}

void put_f64(std::ostream& out, double v) {
    std::uint64_t u;
    std::memcpy(&u, &v, 8);
    put_u64(out, u);
}

bool get_u32(std::istream& in, std::uint32_t& v) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) return false;
    v = static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
        (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
    return true;
}

bool get_u64(std::istream& in, std::uint64_t& v) {
    std::uint32_t lo, hi;
    if (!get_u32(in, lo) || !get_u32(in, hi)) return false;
    v = static_cast<std::uint64_t>(hi) << 32 | lo;
    return true;
}

bool get_f64(std::istream& in, double& v) {
    std::uint64_t u;
    if (!get_u64(in, u)) return false;
    std::memcpy(&v, &u, 8);
    return true;
}

[[noreturn]] void truncated(const std::string& path) {
    throw FormatError("checkpoint '" + path + "' is truncated");
}

}  // namespace

std::uint64_t architecture_fingerprint(const Graph& g) {
    const std::string sig = g.architecture_signature();
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (unsigned char c : sig) {
        h ^= c;
        h *= 0x100000001B3ull;
    }
    return h;
}

void save_checkpoint(Graph& g, const std::string& model_id,
                     const std::vector<EpochStats>& history, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out.write(kMagic, 16);
    put_u32(out, kVersion);
    put_u32(out, static_cast<std::uint32_t>(model_id.size()));
    out.write(model_id.data(), static_cast<std::streamsize>(model_id.size()));
    put_u64(out, architecture_fingerprint(g));
    const std::vector<ParamRef> params = g.parameters();
    put_u64(out, params.size());
    for (const ParamRef& p : params) {
        put_u64(out, p.value->size());
        for (std::size_t i = 0; i < p.value->size(); ++i) put_f64(out, (*p.value)[i]);
    }
    put_u64(out, history.size());
    for (const EpochStats& e : history) {
        put_f64(out, e.train_loss);
        put_f64(out, e.val_loss);
    }
    if (!out) throw IoError("failed writing '" + path + "'");
}

CheckpointInfo load_checkpoint(Graph& g, const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    char magic[16];
    if (!in.read(magic, 16) || std::memcmp(magic, kMagic, 16) != 0) {
        throw FormatError("'" + path + "' is not a checkpoint file");
    }
    std::uint32_t version = 0;
    if (!get_u32(in, version)) truncated(path);
    if (version != kVersion) {
        throw FormatError("unsupported checkpoint version " + std::to_string(version) +
                          " in '" + path + "'");
    }
    std::uint32_t id_len = 0;
    if (!get_u32(in, id_len)) truncated(path);
    if (id_len > 4096) throw FormatError("implausible model id length in '" + path + "'");
    CheckpointInfo info;
    info.model_id.resize(id_len);
    if (id_len > 0 &&
        !in.read(info.model_id.data(), static_cast<std::streamsize>(id_len))) {
        truncated(path);
    }
    std::uint64_t stored_fp = 0;
    if (!get_u64(in, stored_fp)) truncated(path);
    const std::uint64_t want_fp = architecture_fingerprint(g);
    if (stored_fp != want_fp) {
        throw IncompatibilityError("checkpoint '" + path + "' (model '" + info.model_id +
                                   "') was saved for a different architecture");
    }
    const std::vector<ParamRef> params = g.parameters();
    std::uint64_t n_tensors = 0;
    if (!get_u64(in, n_tensors)) truncated(path);
    if (n_tensors != params.size()) {
        throw IncompatibilityError("checkpoint '" + path + "' holds " +
                                   std::to_string(n_tensors) + " tensors, graph has " +
                                   std::to_string(params.size()));
    }
    // Stage everything before touching the graph so a bad file cannot leave
    // it half restored.
    std::vector<std::vector<double>> staged(params.size());
    for (std::size_t t = 0; t < params.size(); ++t) {
        std::uint64_t count = 0;
        if (!get_u64(in, count)) truncated(path);
        if (count != params[t].value->size()) {
            throw IncompatibilityError("checkpoint '" + path +
                                       "' tensor size mismatch for parameter " +
                                       std::string(params[t].name));
        }
        staged[t].resize(count);
        for (std::size_t i = 0; i < count; ++i) {
            if (!get_f64(in, staged[t][i])) truncated(path);
        }
    }
    std::uint64_t n_epochs = 0;
    if (!get_u64(in, n_epochs)) truncated(path);
    if (n_epochs > (1ull << 32)) {
        throw FormatError("implausible history length in '" + path + "'");
    }
    info.history.resize(n_epochs);
    for (EpochStats& e : info.history) {
        if (!get_f64(in, e.train_loss) || !get_f64(in, e.val_loss)) truncated(path);
    }
    if (in.get() != std::ifstream::traits_type::eof()) {
        throw FormatError("trailing bytes in checkpoint '" + path + "'");
    }
    for (std::size_t t = 0; t < params.size(); ++t) {
        params[t].value->vec() = std::move(staged[t]);
    }
    return info;
}

}  // namespace mmfusion
