#include "neuroevo/image_io.hpp"

#include <png.h>

#include <array>
#include <cstring>
#include <fstream>
#include <iterator>
#include <memory>
#include <string>
#include <vector>

#include "neuroevo/error.hpp"

namespace neuroevo {

namespace {

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open image " + path.string());
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

ImageMatrix decode_png(const std::vector<std::uint8_t>& bytes, const std::filesystem::path& path) {
    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    if (png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()) == 0) {
        throw DecodeError("cannot decode PNG " + path.string() + ": " + image.message);
    }
    const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
    image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image));
    if (png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr) == 0) {
        const std::string message = image.message;
        png_image_free(&image);
        throw DecodeError("cannot decode PNG " + path.string() + ": " + message);
    }

    const std::size_t width = image.width;
    const std::size_t height = image.height;
    std::vector<double> pixels(width * height);
    for (std::size_t i = 0; i < pixels.size(); ++i) {
        if (color) {
            pixels[i] = luminance(buffer[3 * i], buffer[3 * i + 1], buffer[3 * i + 2]) / 255.0;
        } else {
            pixels[i] = buffer[i] / 255.0;
        }
    }
    return ImageMatrix(width, height, std::move(pixels));
}

std::uint32_t le32(const std::vector<std::uint8_t>& b, std::size_t at) {
    return static_cast<std::uint32_t>(b[at]) | (static_cast<std::uint32_t>(b[at + 1]) << 8) |
           (static_cast<std::uint32_t>(b[at + 2]) << 16) | (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

std::uint16_t le16(const std::vector<std::uint8_t>& b, std::size_t at) {
    return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

ImageMatrix decode_bmp(const std::vector<std::uint8_t>& bytes, const std::filesystem::path& path) {
    auto fail = [&](const std::string& why) { return DecodeError("cannot decode BMP " + path.string() + ": " + why); };
    if (bytes.size() < 54) {
        throw fail("truncated header");
    }
    const std::uint32_t data_offset = le32(bytes, 10);
    const std::uint32_t dib_size = le32(bytes, 14);
    const auto raw_width = static_cast<std::int32_t>(le32(bytes, 18));
    const auto raw_height = static_cast<std::int32_t>(le32(bytes, 22));
    const std::uint16_t bpp = le16(bytes, 28);
    const std::uint32_t compression = le32(bytes, 30);
    std::uint32_t colors_used = le32(bytes, 46);

    if (dib_size < 40) {
        throw fail("unsupported header version");
    }
    if (compression != 0) {
        throw fail("compressed bitmaps are not supported");
    }
    if (bpp != 8 && bpp != 24 && bpp != 32) {
        throw fail("unsupported bit depth " + std::to_string(bpp));
    }
    if (raw_width <= 0 || raw_height == 0) {
        throw fail("invalid dimensions");
    }
    const bool top_down = raw_height < 0;
    const std::size_t width = static_cast<std::size_t>(raw_width);
    const std::size_t height = static_cast<std::size_t>(top_down ? -static_cast<std::int64_t>(raw_height) : raw_height);
    const std::size_t stride = ((bpp * width + 31) / 32) * 4;
    if (data_offset + stride * height > bytes.size()) {
        throw fail("pixel data truncated");
    }

    std::vector<std::array<std::uint8_t, 3>> palette;
    if (bpp == 8) {
        if (colors_used == 0) {
            colors_used = 256;
        }
        const std::size_t palette_at = 14 + dib_size;
        if (colors_used > 256 || palette_at + 4 * colors_used > data_offset) {
            throw fail("invalid palette");
        }
        for (std::size_t i = 0; i < colors_used; ++i) {
            const std::size_t at = palette_at + 4 * i;
            palette.push_back({bytes[at + 2], bytes[at + 1], bytes[at]});
        }
    }

    std::vector<double> pixels(width * height);
    for (std::size_t row = 0; row < height; ++row) {
        const std::size_t src_row = top_down ? row : height - 1 - row;
        const std::uint8_t* line = bytes.data() + data_offset + src_row * stride;
        for (std::size_t col = 0; col < width; ++col) {
            double value = 0.0;
            if (bpp == 8) {
                const auto index = line[col];
                if (index >= palette.size()) {
                    throw fail("palette index out of range");
                }
                value = luminance(palette[index][0], palette[index][1], palette[index][2]);
            } else {
                const std::size_t step = bpp / 8;
                const std::uint8_t* px = line + col * step;
                value = luminance(px[2], px[1], px[0]);
            }
            pixels[row * width + col] = value / 255.0;
        }
    }
    return ImageMatrix(width, height, std::move(pixels));
}

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
}

void check_buffer(std::size_t width, std::size_t height, int channels, std::span<const std::uint8_t> data) {
    if (channels != 1 && channels != 3) {
        throw ShapeError("channels must be 1 or 3");
    }
    if (width == 0 || height == 0 || data.size() != width * height * static_cast<std::size_t>(channels)) {
        throw ShapeError("pixel buffer does not match image dimensions");
    }
}

} // namespace

double luminance(std::uint8_t r, std::uint8_t g, std::uint8_t b) noexcept {
    if (r == g && g == b) {
        return r;
    }
    return 0.299 * r + 0.587 * g + 0.114 * b;
}

ImageMatrix load_image(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) {
        throw IoError("image not found: " + path.string());
    }
    const auto bytes = read_bytes(path);
    static constexpr std::uint8_t kPngSignature[] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    if (bytes.size() >= 8 && std::memcmp(bytes.data(), kPngSignature, 8) == 0) {
        return decode_png(bytes, path);
    }
    if (bytes.size() >= 2 && bytes[0] == 'B' && bytes[1] == 'M') {
        return decode_bmp(bytes, path);
    }
    throw DecodeError("unsupported image format: " + path.string());
}

void write_png(const std::filesystem::path& path, std::size_t width, std::size_t height, int channels,
               std::span<const std::uint8_t> data) {
    check_buffer(width, height, channels, data);
    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(width);
    image.height = static_cast<png_uint_32>(height);
    image.format = channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    png_alloc_size_t size = 0;
    if (png_image_write_get_memory_size(image, size, 0, data.data(), 0, nullptr) == 0) {
        throw IoError("cannot encode PNG " + path.string() + ": " + image.message);
    }
    std::vector<std::uint8_t> bytes(size);
    if (png_image_write_to_memory(&image, bytes.data(), &size, 0, data.data(), 0, nullptr) == 0) {
        throw IoError("cannot encode PNG " + path.string() + ": " + image.message);
    }
    bytes.resize(size);
    write_file(path, bytes);
}

void write_bmp(const std::filesystem::path& path, std::size_t width, std::size_t height, int channels,
               std::span<const std::uint8_t> data) {
    check_buffer(width, height, channels, data);
    const std::size_t bpp = channels == 3 ? 24 : 8;
    const std::size_t stride = ((bpp * width + 31) / 32) * 4;
    const std::size_t palette_bytes = channels == 1 ? 256 * 4 : 0;
    const std::size_t offset = 14 + 40 + palette_bytes;
    std::vector<std::uint8_t> bytes(offset + stride * height, 0);

    auto put32 = [&](std::size_t at, std::uint32_t v) {
        for (int i = 0; i < 4; ++i) {
            bytes[at + i] = static_cast<std::uint8_t>(v >> (8 * i));
        }
    };
    bytes[0] = 'B';
    bytes[1] = 'M';
    put32(2, static_cast<std::uint32_t>(bytes.size()));
    put32(10, static_cast<std::uint32_t>(offset));
    put32(14, 40);
    put32(18, static_cast<std::uint32_t>(width));
    put32(22, static_cast<std::uint32_t>(height));
    bytes[26] = 1;
    bytes[28] = static_cast<std::uint8_t>(bpp);
    put32(34, static_cast<std::uint32_t>(stride * height));
    if (channels == 1) {
        put32(46, 256);
        for (std::size_t i = 0; i < 256; ++i) {
            const auto v = static_cast<std::uint8_t>(i);
            bytes[54 + 4 * i] = v;
            bytes[54 + 4 * i + 1] = v;
            bytes[54 + 4 * i + 2] = v;
        }
    }
    for (std::size_t row = 0; row < height; ++row) {
        std::uint8_t* line = bytes.data() + offset + (height - 1 - row) * stride;
        for (std::size_t col = 0; col < width; ++col) {
            if (channels == 1) {
                line[col] = data[row * width + col];
            } else {
                const std::uint8_t* px = &data[3 * (row * width + col)];
                line[3 * col] = px[2];
                line[3 * col + 1] = px[1];
                line[3 * col + 2] = px[0];
            }
        }
    }
    write_file(path, bytes);
}

} // namespace neuroevo
