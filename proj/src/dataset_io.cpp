#include <algorithm>
#include <cctype>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <utility>
#include <vector>

#include "mmfusion/data.hpp"
#include "mmfusion/errors.hpp"
#include "mmfusion/png_io.hpp"

namespace fs = std::filesystem;

namespace mmfusion {

namespace {

std::optional<long> numeric_name(const fs::path& p) {
    const std::string name = p.filename().string();
    if (name.empty() || name.size() > 9) return std::nullopt;
    for (char c : name) {
        if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
    }
    return std::stol(name);
}

std::vector<std::pair<long, fs::path>> numbered_subdirs(const fs::path& dir,
                                                        const char* what) {
    std::vector<std::pair<long, fs::path>> out;
    for (const fs::directory_entry& e : fs::directory_iterator(dir)) {
        if (!e.is_directory()) {
            throw IngestionError("unexpected entry '" + e.path().string() + "' among " +
                                 what + " directories");
        }
        const std::optional<long> idx = numeric_name(e.path());
        if (!idx) {
            throw IngestionError("non-numeric " + std::string(what) + " directory '" +
                                 e.path().string() + "'");
        }
        out.emplace_back(*idx, e.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

fs::path require_file(const fs::path& dir, const char* name) {
    const fs::path p = dir / name;
    std::error_code ec;
    if (!fs::is_regular_file(p, ec)) {
        throw IngestionError("missing modality file '" + p.string() + "'");
    }
    return p;
}

}  // namespace

void scan_icub_dataset(const std::string& root,
                       const std::function<void(RawSample&&)>& fn) {
    std::error_code ec;
    if (!fs::is_directory(root, ec)) {
        throw IngestionError("dataset root '" + root + "' is not a directory");
    }
    const auto objects = numbered_subdirs(root, "object");
    if (objects.empty()) {
        throw IngestionError("no object directories under '" + root + "'");
    }
    // Labels are the rank of the (numeric) object directory name, so a tree
    // with objects 1..N still yields contiguous class indices.
    for (std::size_t rank = 0; rank < objects.size(); ++rank) {
        const auto views = numbered_subdirs(objects[rank].second, "view");
        if (views.empty()) {
            throw IngestionError("object directory '" + objects[rank].second.string() +
                                 "' has no views");
        }
        for (const auto& [view_idx, view_dir] : views) {
            RawSample raw;
            raw.rgb_left = read_png_rgb(require_file(view_dir, "left.png").string());
            raw.rgb_right = read_png_rgb(require_file(view_dir, "right.png").string());
            raw.rgb_realsense = read_png_rgb(require_file(view_dir, "rs_rgb.png").string());
            const std::size_t h = raw.rgb_left.dim(0);
            const std::size_t w = raw.rgb_left.dim(1);
            if (raw.rgb_right.dim(0) != h || raw.rgb_right.dim(1) != w ||
                raw.rgb_realsense.dim(0) != h || raw.rgb_realsense.dim(1) != w) {
                throw IngestionError("camera images under '" + view_dir.string() +
                                     "' differ in size");
            }
            raw.depth = read_depth_raw(require_file(view_dir, "depth.bin").string(), h, w);
            raw.label = static_cast<int>(rank);
            raw.view_angle = static_cast<double>(view_idx) * 5.0;
            fn(std::move(raw));
        }
    }
}

std::vector<RawSample> load_icub_dataset(const std::string& root) {
    std::vector<RawSample> out;
    scan_icub_dataset(root, [&](RawSample&& s) { out.push_back(std::move(s)); });
    return out;
}

std::vector<MultimodalSample> load_and_preprocess_icub(const std::string& root) {
    std::vector<MultimodalSample> out;
    scan_icub_dataset(root, [&](RawSample&& s) {
        out.push_back(preprocess_sample(s, out.size()));
    });
    return out;
}

namespace {

constexpr char kMagic[16] = {'M', 'M', 'F', 'U', 'S', 'I', 'O', 'N',
                             'S', 'Y', 'N', 'T', 'H', 'S', 'E', 'T'};
constexpr unsigned char kVersion = 1;

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

void put_f32(std::ostream& out, double v) {
    const float f = static_cast<float>(v);
    std::uint32_t u;
    std::memcpy(&u, &f, 4);
    put_u32(out, u);
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

bool get_f32(std::istream& in, double& v) {
    std::uint32_t u;
    if (!get_u32(in, u)) return false;
    float f;
    std::memcpy(&f, &u, 4);
    v = static_cast<double>(f);
    return true;
}

void put_plane(std::ostream& out, const Tensor& t, std::size_t expected,
               const char* name) {
    if (t.size() != expected) {
        throw ArgumentError(std::string(name) + " must hold " + std::to_string(expected) +
                            " values, got " + std::to_string(t.size()));
    }
    for (std::size_t i = 0; i < t.size(); ++i) put_f32(out, t[i]);
}

bool get_plane(std::istream& in, Tensor& t) {
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (!get_f32(in, t[i])) return false;
    }
    return true;
}

}  // namespace

void write_sample_container(const std::vector<MultimodalSample>& samples,
                            const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out.write(kMagic, 16);
    out.put(static_cast<char>(kVersion));
    put_u64(out, samples.size());
    for (const MultimodalSample& s : samples) {
        put_u32(out, static_cast<std::uint32_t>(s.label));
        put_plane(out, s.cam_left, 1024, "cam_left");
        put_plane(out, s.cam_right, 1024, "cam_right");
        put_plane(out, s.cam_rs, 1024, "cam_rs");
        put_plane(out, s.depth_vec, 1024, "depth_vec");
    }
    if (!out) throw IoError("failed writing '" + path + "'");
}

std::vector<MultimodalSample> read_sample_container(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    char magic[16];
    if (!in.read(magic, 16) || std::memcmp(magic, kMagic, 16) != 0) {
        throw FormatError("'" + path + "' is not a sample container");
    }
    const int version = in.get();
    if (version != kVersion) {
        throw FormatError("unsupported container version " + std::to_string(version) +
                          " in '" + path + "'");
    }
    std::uint64_t count = 0;
    if (!get_u64(in, count)) throw FormatError("truncated container '" + path + "'");
    std::vector<MultimodalSample> out;
    out.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        MultimodalSample s;
        std::uint32_t label = 0;
        bool ok = get_u32(in, label);
        s.label = static_cast<std::int32_t>(label);
        s.cam_left = Tensor({1, 32, 32});
        s.cam_right = Tensor({1, 32, 32});
        s.cam_rs = Tensor({1, 32, 32});
        s.depth_vec = Tensor({1, 1024});
        ok = ok && get_plane(in, s.cam_left) && get_plane(in, s.cam_right) &&
             get_plane(in, s.cam_rs) && get_plane(in, s.depth_vec);
        if (!ok) {
            throw FormatError("container '" + path + "' truncated at sample " +
                              std::to_string(i));
        }
        if (s.label < 0) {
            throw FormatError("negative label in container '" + path + "'");
        }
        s.sample_id = i;
        out.push_back(std::move(s));
    }
    if (in.get() != std::ifstream::traits_type::eof()) {
        throw FormatError("trailing bytes after sample " + std::to_string(count) +
                          " in container '" + path + "'");
    }
    return out;
}

void write_split_containers(const DatasetSplit& split, const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    write_sample_container(split.train, (fs::path(dir) / "train.bin").string());
    write_sample_container(split.validation, (fs::path(dir) / "validation.bin").string());
    write_sample_container(split.test, (fs::path(dir) / "test.bin").string());
}

DatasetSplit read_split_containers(const std::string& dir) {
    DatasetSplit split;
    split.train = read_sample_container((fs::path(dir) / "train.bin").string());
    split.validation = read_sample_container((fs::path(dir) / "validation.bin").string());
    split.test = read_sample_container((fs::path(dir) / "test.bin").string());
    // Container files do not persist ids; reassign so the three lists stay
    // disjoint for the leakage guard.
    std::uint64_t id = 0;
    for (auto* list : {&split.train, &split.validation, &split.test}) {
        for (MultimodalSample& s : *list) s.sample_id = id++;
    }
    return split;
}

}  // namespace mmfusion
