#include "mssr/weights_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

namespace mssr {

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t x) {
    out.push_back(static_cast<std::uint8_t>(x));
    out.push_back(static_cast<std::uint8_t>(x >> 8));
    out.push_back(static_cast<std::uint8_t>(x >> 16));
    out.push_back(static_cast<std::uint8_t>(x >> 24));
}

void put_f32(std::vector<std::uint8_t>& out, float v) {
    put_u32(out, std::bit_cast<std::uint32_t>(v));
}

class Reader {
public:
    Reader(const std::filesystem::path& path) : path_(path.string()), in_(path, std::ios::binary) {
        if (!in_) {
            throw IoError("cannot open weight file " + path_);
        }
    }

    std::uint32_t u32(const std::string& what) {
        std::uint8_t b[4];
        if (!in_.read(reinterpret_cast<char*>(b), 4)) {
            throw FormatError(path_ + ": truncated while reading " + what);
        }
        return static_cast<std::uint32_t>(b[0]) | static_cast<std::uint32_t>(b[1]) << 8 |
               static_cast<std::uint32_t>(b[2]) << 16 | static_cast<std::uint32_t>(b[3]) << 24;
    }

    void payload(float* dst, std::size_t count, const std::string& what) {
        std::vector<std::uint8_t> buf(count * 4);
        if (!in_.read(reinterpret_cast<char*>(buf.data()),
                      static_cast<std::streamsize>(buf.size()))) {
            throw FormatError(path_ + ": truncated payload of " + what);
        }
        for (std::size_t i = 0; i < count; ++i) {
            const std::uint32_t raw = static_cast<std::uint32_t>(buf[i * 4]) |
                                      static_cast<std::uint32_t>(buf[i * 4 + 1]) << 8 |
                                      static_cast<std::uint32_t>(buf[i * 4 + 2]) << 16 |
                                      static_cast<std::uint32_t>(buf[i * 4 + 3]) << 24;
            dst[i] = std::bit_cast<float>(raw);
        }
    }

    void check_magic() {
        char magic[4];
        if (!in_.read(magic, 4) || std::memcmp(magic, kWeightMagic, 4) != 0) {
            throw FormatError(path_ + ": bad magic (not a weight file)");
        }
    }

    const std::string& path() const { return path_; }

private:
    std::string path_;
    std::ifstream in_;
};

WeightHeader read_header(Reader& reader) {
    reader.check_magic();
    const std::uint32_t version = reader.u32("version");
    if (version != kWeightVersion) {
        throw FormatError(reader.path() + ": unsupported weight format version " +
                          std::to_string(version));
    }
    WeightHeader header;
    header.cfg.n = static_cast<int>(reader.u32("n"));
    header.cfg.m = static_cast<int>(reader.u32("m"));
    header.cfg.c = static_cast<int>(reader.u32("c"));
    header.scale = reader.u32("scale");
    if (!header.cfg.valid()) {
        throw FormatError(reader.path() + ": invalid network config in header (n=" +
                          std::to_string(header.cfg.n) + ", m=" + std::to_string(header.cfg.m) +
                          ", c=" + std::to_string(header.cfg.c) + ")");
    }
    return header;
}

template <typename T>
void save_impl(const MSSRNet<T>& net, std::uint32_t scale, const std::filesystem::path& path) {
    std::vector<std::uint8_t> out;
    out.reserve(static_cast<std::size_t>(weight_file_size(net.cfg)));
    out.insert(out.end(), kWeightMagic, kWeightMagic + 4);
    put_u32(out, kWeightVersion);
    put_u32(out, static_cast<std::uint32_t>(net.cfg.n));
    put_u32(out, static_cast<std::uint32_t>(net.cfg.m));
    put_u32(out, static_cast<std::uint32_t>(net.cfg.c));
    put_u32(out, scale);

    detail::visit_parameters(net, [&](ParamView<const T> view) {
        put_u32(out, static_cast<std::uint32_t>(view.record_dims.size()));
        for (const std::uint32_t d : view.record_dims) {
            put_u32(out, d);
        }
        for (std::size_t i = 0; i < view.size; ++i) {
            put_f32(out, static_cast<float>(view.data[i]));
        }
    });

    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    file.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!file) {
        throw IoError("failed writing " + path.string());
    }
}

template <typename T>
MSSRNet<T> load_impl(const std::filesystem::path& path, std::uint32_t* scale_out) {
    Reader reader(path);
    const WeightHeader header = read_header(reader);
    if (scale_out != nullptr) {
        *scale_out = header.scale;
    }

    NetConfig cfg = header.cfg;
    MSSRNet<T> net = build_network<T>(cfg);
    std::int64_t total = 0;
    int record_index = 0;
    std::vector<float> scratch;
    detail::visit_parameters(net, [&](ParamView<T> view) {
        const std::string what = "record " + std::to_string(record_index);
        const std::uint32_t rank = reader.u32(what + " rank");
        if (rank != view.record_dims.size()) {
            throw FormatError(reader.path() + ": " + what + " rank " + std::to_string(rank) +
                              " != expected " + std::to_string(view.record_dims.size()));
        }
        for (std::size_t i = 0; i < view.record_dims.size(); ++i) {
            const std::uint32_t d = reader.u32(what + " dim");
            if (d != view.record_dims[i]) {
                throw FormatError(reader.path() + ": " + what + " dim[" + std::to_string(i) +
                                  "] = " + std::to_string(d) + " != expected " +
                                  std::to_string(view.record_dims[i]));
            }
        }
        scratch.resize(view.size);
        reader.payload(scratch.data(), view.size, what);
        for (std::size_t i = 0; i < view.size; ++i) {
            view.data[i] = static_cast<T>(scratch[i]);
        }
        total += static_cast<std::int64_t>(view.size);
        ++record_index;
    });
    if (total != parameter_count(cfg)) {
        throw FormatError(reader.path() + ": element count " + std::to_string(total) +
                          " != parameter_count " + std::to_string(parameter_count(cfg)));
    }
    return net;
}

}  // namespace

std::int64_t weight_file_size(const NetConfig& cfg) {
    // 24-byte header: magic + version + (n, m, c) + scale tag.
    std::int64_t size = 24;
    const int records_w = 3 * (cfg.m + 1) + (cfg.m + 2);  // one per conv layer
    size += records_w * (4 + 4 * 4);                      // rank + 4 dims
    size += records_w * (4 + 4 * 1);                      // matching bias records
    size += 4 * parameter_count(cfg);
    return size;
}

void save_weights(const MSSRNet<float>& net, std::uint32_t scale,
                  const std::filesystem::path& path) {
    save_impl(net, scale, path);
}

void save_weights(const MSSRNet<double>& net, std::uint32_t scale,
                  const std::filesystem::path& path) {
    save_impl(net, scale, path);
}

WeightHeader peek_weights(const std::filesystem::path& path) {
    Reader reader(path);
    return read_header(reader);
}

MSSRNet<float> load_weights(const std::filesystem::path& path, std::uint32_t* scale_out) {
    return load_impl<float>(path, scale_out);
}

MSSRNet<double> load_weights_high(const std::filesystem::path& path, std::uint32_t* scale_out) {
    return load_impl<double>(path, scale_out);
}

}  // namespace mssr
