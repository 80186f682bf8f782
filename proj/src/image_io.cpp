#include <zlib.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "mssr/imaging.hpp"

namespace mssr {

namespace {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    in.seekg(0, std::ios::end);
    const std::streamoff size = in.tellg();
    in.seekg(0, std::ios::beg);
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(size));
    if (!bytes.empty()) {
        in.read(reinterpret_cast<char*>(bytes.data()), size);
    }
    if (!in) {
        throw IoError("failed reading " + path.string());
    }
    return bytes;
}

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw IoError("failed writing " + path.string());
    }
}

std::uint8_t quantize(float s) {
    const float clamped = std::clamp(s, 0.0f, 1.0f);
    return static_cast<std::uint8_t>(std::lround(clamped * 255.0f));
}

// --- little-endian readers/writers (BMP) ---

std::uint32_t rd_u32le(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
           static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}
std::uint16_t rd_u16le(const std::uint8_t* p) {
    return static_cast<std::uint16_t>(p[0] | p[1] << 8);
}
void wr_u32le(std::vector<std::uint8_t>& v, std::uint32_t x) {
    v.push_back(static_cast<std::uint8_t>(x));
    v.push_back(static_cast<std::uint8_t>(x >> 8));
    v.push_back(static_cast<std::uint8_t>(x >> 16));
    v.push_back(static_cast<std::uint8_t>(x >> 24));
}
void wr_u16le(std::vector<std::uint8_t>& v, std::uint16_t x) {
    v.push_back(static_cast<std::uint8_t>(x));
    v.push_back(static_cast<std::uint8_t>(x >> 8));
}

// --- BMP: 24-bit uncompressed, BITMAPINFOHEADER ---

ImagePlane decode_bmp(const std::vector<std::uint8_t>& bytes, const std::string& name) {
    if (bytes.size() < 54 || bytes[0] != 'B' || bytes[1] != 'M') {
        throw FormatError(name + ": not a BMP file");
    }
    const std::uint32_t pixel_offset = rd_u32le(&bytes[10]);
    const std::uint32_t header_size = rd_u32le(&bytes[14]);
    if (header_size < 40) {
        throw FormatError(name + ": unsupported BMP header size " + std::to_string(header_size));
    }
    const std::int32_t width = static_cast<std::int32_t>(rd_u32le(&bytes[18]));
    const std::int32_t raw_height = static_cast<std::int32_t>(rd_u32le(&bytes[22]));
    const std::uint16_t bitcount = rd_u16le(&bytes[28]);
    const std::uint32_t compression = rd_u32le(&bytes[30]);
    if (bitcount != 24 || compression != 0) {
        throw FormatError(name + ": only 24-bit uncompressed BMP supported (bitcount=" +
                          std::to_string(bitcount) + ", compression=" +
                          std::to_string(compression) + ")");
    }
    const bool bottom_up = raw_height > 0;
    const std::int32_t height = bottom_up ? raw_height : -raw_height;
    if (width < 1 || height < 1) {
        throw FormatError(name + ": invalid BMP dimensions");
    }
    const std::size_t row_bytes = (static_cast<std::size_t>(width) * 3 + 3) / 4 * 4;
    if (bytes.size() < pixel_offset + row_bytes * static_cast<std::size_t>(height)) {
        throw IoError(name + ": truncated BMP pixel data");
    }
    ImagePlane img(width, height, ColorSpace::RGB);
    for (std::int32_t y = 0; y < height; ++y) {
        const std::int32_t src_row = bottom_up ? height - 1 - y : y;
        const std::uint8_t* row = bytes.data() + pixel_offset + row_bytes * src_row;
        for (std::int32_t x = 0; x < width; ++x) {
            const std::uint8_t b = row[x * 3 + 0];
            const std::uint8_t g = row[x * 3 + 1];
            const std::uint8_t r = row[x * 3 + 2];
            img.at(0, y, x) = static_cast<float>(r) / 255.0f;
            img.at(1, y, x) = static_cast<float>(g) / 255.0f;
            img.at(2, y, x) = static_cast<float>(b) / 255.0f;
        }
    }
    return img;
}

std::vector<std::uint8_t> encode_bmp(const ImagePlane& img) {
    const int width = img.width;
    const int height = img.height;
    const std::size_t row_bytes = (static_cast<std::size_t>(width) * 3 + 3) / 4 * 4;
    const std::size_t pixel_bytes = row_bytes * static_cast<std::size_t>(height);
    std::vector<std::uint8_t> out;
    out.reserve(54 + pixel_bytes);
    out.push_back('B');
    out.push_back('M');
    wr_u32le(out, static_cast<std::uint32_t>(54 + pixel_bytes));
    wr_u16le(out, 0);
    wr_u16le(out, 0);
    wr_u32le(out, 54);
    wr_u32le(out, 40);  // BITMAPINFOHEADER
    wr_u32le(out, static_cast<std::uint32_t>(width));
    wr_u32le(out, static_cast<std::uint32_t>(height));  // positive: bottom-up
    wr_u16le(out, 1);
    wr_u16le(out, 24);
    wr_u32le(out, 0);  // BI_RGB
    wr_u32le(out, static_cast<std::uint32_t>(pixel_bytes));
    wr_u32le(out, 2835);
    wr_u32le(out, 2835);
    wr_u32le(out, 0);
    wr_u32le(out, 0);

    const bool gray = img.channels() == 1;
    std::vector<std::uint8_t> row(row_bytes, 0);
    for (int y = height - 1; y >= 0; --y) {
        for (int x = 0; x < width; ++x) {
            const std::uint8_t r = quantize(img.at(0, y, x));
            const std::uint8_t g = gray ? r : quantize(img.at(1, y, x));
            const std::uint8_t b = gray ? r : quantize(img.at(2, y, x));
            row[static_cast<std::size_t>(x) * 3 + 0] = b;
            row[static_cast<std::size_t>(x) * 3 + 1] = g;
            row[static_cast<std::size_t>(x) * 3 + 2] = r;
        }
        out.insert(out.end(), row.begin(), row.end());
    }
    return out;
}

// --- PNG: 8/16-bit grayscale and truecolor, no interlace ---

constexpr std::uint8_t kPngSig[8] = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};

std::uint32_t rd_u32be(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) << 24 | static_cast<std::uint32_t>(p[1]) << 16 |
           static_cast<std::uint32_t>(p[2]) << 8 | static_cast<std::uint32_t>(p[3]);
}
void wr_u32be(std::vector<std::uint8_t>& v, std::uint32_t x) {
    v.push_back(static_cast<std::uint8_t>(x >> 24));
    v.push_back(static_cast<std::uint8_t>(x >> 16));
    v.push_back(static_cast<std::uint8_t>(x >> 8));
    v.push_back(static_cast<std::uint8_t>(x));
}

int png_channel_count(int color_type) {
    switch (color_type) {
        case 0: return 1;  // gray
        case 2: return 3;  // rgb
        case 4: return 2;  // gray + alpha
        case 6: return 4;  // rgba
        default: return 0;
    }
}

std::uint8_t paeth(std::uint8_t a, std::uint8_t b, std::uint8_t c) {
    const int p = static_cast<int>(a) + b - c;
    const int pa = std::abs(p - a);
    const int pb = std::abs(p - b);
    const int pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) {
        return a;
    }
    return pb <= pc ? b : c;
}

void unfilter_scanline(std::uint8_t filter, std::uint8_t* cur, const std::uint8_t* prev,
                       std::size_t row_bytes, std::size_t bpp, const std::string& name) {
    switch (filter) {
        case 0:
            break;
        case 1:  // Sub
            for (std::size_t i = bpp; i < row_bytes; ++i) {
                cur[i] = static_cast<std::uint8_t>(cur[i] + cur[i - bpp]);
            }
            break;
        case 2:  // Up
            if (prev != nullptr) {
                for (std::size_t i = 0; i < row_bytes; ++i) {
                    cur[i] = static_cast<std::uint8_t>(cur[i] + prev[i]);
                }
            }
            break;
        case 3:  // Average
            for (std::size_t i = 0; i < row_bytes; ++i) {
                const int left = i >= bpp ? cur[i - bpp] : 0;
                const int up = prev != nullptr ? prev[i] : 0;
                cur[i] = static_cast<std::uint8_t>(cur[i] + (left + up) / 2);
            }
            break;
        case 4:  // Paeth
            for (std::size_t i = 0; i < row_bytes; ++i) {
                const std::uint8_t left = i >= bpp ? cur[i - bpp] : 0;
                const std::uint8_t up = prev != nullptr ? prev[i] : 0;
                const std::uint8_t ul = (prev != nullptr && i >= bpp) ? prev[i - bpp] : 0;
                cur[i] = static_cast<std::uint8_t>(cur[i] + paeth(left, up, ul));
            }
            break;
        default:
            throw FormatError(name + ": invalid PNG filter type " + std::to_string(filter));
    }
}

ImagePlane decode_png(const std::vector<std::uint8_t>& bytes, const std::string& name) {
    if (bytes.size() < 8 || std::memcmp(bytes.data(), kPngSig, 8) != 0) {
        throw FormatError(name + ": not a PNG file");
    }
    std::size_t pos = 8;
    bool have_ihdr = false;
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    int bit_depth = 0;
    int color_type = 0;
    std::vector<std::uint8_t> idat;

    while (pos + 12 <= bytes.size()) {
        const std::uint32_t length = rd_u32be(&bytes[pos]);
        if (pos + 12 + length > bytes.size()) {
            throw IoError(name + ": truncated PNG chunk");
        }
        const char* type = reinterpret_cast<const char*>(&bytes[pos + 4]);
        const std::uint8_t* data = &bytes[pos + 8];
        const std::uint32_t stored_crc = rd_u32be(&bytes[pos + 8 + length]);
        const std::uint32_t crc = static_cast<std::uint32_t>(
            crc32(crc32(0L, &bytes[pos + 4], 4), data, length));
        if (crc != stored_crc) {
            throw FormatError(name + ": PNG chunk CRC mismatch in " + std::string(type, 4));
        }
        if (std::memcmp(type, "IHDR", 4) == 0) {
            if (length != 13) {
                throw FormatError(name + ": bad IHDR length");
            }
            width = rd_u32be(data);
            height = rd_u32be(data + 4);
            bit_depth = data[8];
            color_type = data[9];
            const int interlace = data[12];
            if (data[10] != 0 || data[11] != 0) {
                throw FormatError(name + ": unsupported PNG compression/filter method");
            }
            if (interlace != 0) {
                throw FormatError(name + ": interlaced PNG not supported");
            }
            if ((bit_depth != 8 && bit_depth != 16) || png_channel_count(color_type) == 0) {
                throw FormatError(name + ": unsupported PNG bit depth " +
                                  std::to_string(bit_depth) + " / color type " +
                                  std::to_string(color_type));
            }
            have_ihdr = true;
        } else if (std::memcmp(type, "IDAT", 4) == 0) {
            idat.insert(idat.end(), data, data + length);
        } else if (std::memcmp(type, "IEND", 4) == 0) {
            break;
        }
        // ancillary chunks (tRNS included) are skipped; alpha is dropped anyway
        pos += 12 + length;
    }
    if (!have_ihdr || width == 0 || height == 0) {
        throw FormatError(name + ": missing or empty IHDR");
    }
    if (idat.empty()) {
        throw IoError(name + ": PNG has no IDAT data");
    }

    const int channels = png_channel_count(color_type);
    const std::size_t sample_bytes = static_cast<std::size_t>(bit_depth) / 8;
    const std::size_t bpp = static_cast<std::size_t>(channels) * sample_bytes;
    const std::size_t row_bytes = bpp * width;
    const std::size_t raw_size = (row_bytes + 1) * height;

    std::vector<std::uint8_t> raw(raw_size);
    uLongf dest_len = raw_size;
    const int zrc = uncompress(raw.data(), &dest_len, idat.data(), idat.size());
    if (zrc != Z_OK || dest_len != raw_size) {
        throw FormatError(name + ": PNG inflate failed (zlib rc " + std::to_string(zrc) + ")");
    }

    ImagePlane img(static_cast<int>(width), static_cast<int>(height), ColorSpace::RGB);
    const double denom = bit_depth == 8 ? 255.0 : 65535.0;
    const std::uint8_t* prev = nullptr;
    for (std::uint32_t y = 0; y < height; ++y) {
        std::uint8_t* cur = raw.data() + (row_bytes + 1) * y;
        const std::uint8_t filter = cur[0];
        ++cur;
        unfilter_scanline(filter, cur, prev, row_bytes, bpp, name);
        for (std::uint32_t x = 0; x < width; ++x) {
            const std::uint8_t* px = cur + x * bpp;
            double rgb[3];
            auto sample = [&](int ch) -> double {
                const std::uint8_t* s = px + ch * sample_bytes;
                if (bit_depth == 8) {
                    return *s;
                }
                return static_cast<double>(s[0]) * 256.0 + s[1];
            };
            if (channels <= 2) {  // gray (+alpha): replicate
                rgb[0] = rgb[1] = rgb[2] = sample(0);
            } else {
                rgb[0] = sample(0);
                rgb[1] = sample(1);
                rgb[2] = sample(2);
            }
            for (int ch = 0; ch < 3; ++ch) {
                img.at(ch, static_cast<int>(y), static_cast<int>(x)) =
                    static_cast<float>(rgb[ch] / denom);
            }
        }
        prev = cur;
    }
    return img;
}

void append_chunk(std::vector<std::uint8_t>& out, const char type[4],
                  const std::vector<std::uint8_t>& data) {
    wr_u32be(out, static_cast<std::uint32_t>(data.size()));
    const std::size_t type_pos = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), data.begin(), data.end());
    const std::uint32_t crc = static_cast<std::uint32_t>(
        crc32(0L, out.data() + type_pos, static_cast<uInt>(4 + data.size())));
    wr_u32be(out, crc);
}

std::vector<std::uint8_t> encode_png(const ImagePlane& img) {
    const bool gray = img.channels() == 1;
    const int channels = gray ? 1 : 3;
    const std::size_t row_bytes = static_cast<std::size_t>(img.width) * channels;

    std::vector<std::uint8_t> raw((row_bytes + 1) * static_cast<std::size_t>(img.height));
    std::size_t at = 0;
    for (int y = 0; y < img.height; ++y) {
        raw[at++] = 0;  // filter: none
        for (int x = 0; x < img.width; ++x) {
            for (int ch = 0; ch < channels; ++ch) {
                raw[at++] = quantize(img.at(ch, y, x));
            }
        }
    }

    uLongf bound = compressBound(static_cast<uLong>(raw.size()));
    std::vector<std::uint8_t> compressed(bound);
    if (compress2(compressed.data(), &bound, raw.data(), static_cast<uLong>(raw.size()),
                  Z_DEFAULT_COMPRESSION) != Z_OK) {
        throw IoError("PNG deflate failed");
    }
    compressed.resize(bound);

    std::vector<std::uint8_t> out(kPngSig, kPngSig + 8);
    std::vector<std::uint8_t> ihdr;
    wr_u32be(ihdr, static_cast<std::uint32_t>(img.width));
    wr_u32be(ihdr, static_cast<std::uint32_t>(img.height));
    ihdr.push_back(8);                                      // bit depth
    ihdr.push_back(static_cast<std::uint8_t>(gray ? 0 : 2));  // color type
    ihdr.push_back(0);
    ihdr.push_back(0);
    ihdr.push_back(0);
    append_chunk(out, "IHDR", ihdr);
    append_chunk(out, "IDAT", compressed);
    append_chunk(out, "IEND", {});
    return out;
}

std::string lower_extension(const std::filesystem::path& path) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext;
}

}  // namespace

ImagePlane load_image(const std::filesystem::path& path) {
    const std::vector<std::uint8_t> bytes = read_file(path);
    const std::string name = path.filename().string();
    if (bytes.size() >= 8 && std::memcmp(bytes.data(), kPngSig, 8) == 0) {
        return decode_png(bytes, name);
    }
    if (bytes.size() >= 2 && bytes[0] == 'B' && bytes[1] == 'M') {
        return decode_bmp(bytes, name);
    }
    throw FormatError(name + ": unrecognized image format (magic bytes)");
}

void save_image(const ImagePlane& img, const std::filesystem::path& path) {
    if (img.width < 1 || img.height < 1) {
        throw ArgumentError("save_image: empty image");
    }
    if (img.color == ColorSpace::YCbCr) {
        throw ArgumentError("save_image: convert YCbCr to RGB before saving");
    }
    const std::string ext = lower_extension(path);
    if (ext == ".bmp") {
        write_file(path, encode_bmp(img));
    } else if (ext == ".png") {
        write_file(path, encode_png(img));
    } else {
        throw ArgumentError("save_image: unsupported extension '" + ext + "' (use .bmp or .png)");
    }
}

}  // namespace mssr
