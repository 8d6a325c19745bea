#include "sheepweight/png_io.hpp"

#include "sheepweight/errors.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <memory>

namespace sheepweight {
namespace {

struct FileCloser {
    void operator()(std::FILE* f) const noexcept { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

// libpng reports errors through longjmp. The functions that arm setjmp below
// hold no objects with destructors, so the jump never skips cleanup.
struct PngErrorSink {
    char message[256] = {};
};

void on_png_error(png_structp png, png_const_charp message) {
    auto* sink = static_cast<PngErrorSink*>(png_get_error_ptr(png));
    std::snprintf(sink->message, sizeof sink->message, "%s", message);
    png_longjmp(png, 1);
}

void on_png_warning(png_structp, png_const_charp) {}

struct ReadHandles {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~ReadHandles() { png_destroy_read_struct(&png, info ? &info : nullptr, nullptr); }
};

struct WriteHandles {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~WriteHandles() { png_destroy_write_struct(&png, info ? &info : nullptr); }
};

struct HeaderInfo {
    png_uint_32 width;
    png_uint_32 height;
    int bit_depth;
    int color_type;
    std::size_t row_bytes;
};

bool read_header(png_structp png, png_infop info, std::FILE* file, HeaderInfo* out) {
    if (setjmp(png_jmpbuf(png))) return false;
    png_init_io(png, file);
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);
    out->bit_depth = png_get_bit_depth(png, info);
    out->color_type = png_get_color_type(png, info);
    out->width = png_get_image_width(png, info);
    out->height = png_get_image_height(png, info);
    if (out->bit_depth == 8 && out->color_type == PNG_COLOR_TYPE_RGB_ALPHA) png_set_strip_alpha(png);
    png_read_update_info(png, info);
    out->row_bytes = png_get_rowbytes(png, info);
    return true;
}

bool read_rows(png_structp png, png_bytepp rows) {
    if (setjmp(png_jmpbuf(png))) return false;
    png_read_image(png, rows);
    png_read_end(png, nullptr);
    return true;
}

bool write_all(png_structp png, png_infop info, std::FILE* file, png_uint_32 width, png_uint_32 height,
               png_bytepp rows) {
    if (setjmp(png_jmpbuf(png))) return false;
    png_init_io(png, file);
    png_set_IHDR(png, info, width, height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, rows);
    png_write_end(png, nullptr);
    return true;
}

}  // namespace

RgbImage read_png(const std::filesystem::path& path) {
    std::error_code ec;
    if (!std::filesystem::is_regular_file(path, ec)) {
        throw MissingInputError("image not found: " + path.string());
    }
    FilePtr file(std::fopen(path.c_str(), "rb"));
    if (!file) throw IoError("cannot open image: " + path.string());
    unsigned char signature[8] = {};
    if (std::fread(signature, 1, 8, file.get()) != 8 || png_sig_cmp(signature, 0, 8) != 0) {
        throw FormatError("not a PNG file: " + path.string());
    }

    PngErrorSink sink;
    ReadHandles h;
    h.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &sink, on_png_error, on_png_warning);
    if (!h.png) throw IoError("png: out of memory");
    h.info = png_create_info_struct(h.png);
    if (!h.info) throw IoError("png: out of memory");

    HeaderInfo header{};
    if (!read_header(h.png, h.info, file.get(), &header)) {
        throw FormatError("png: " + std::string(sink.message) + " (" + path.string() + ")");
    }
    if (header.bit_depth != 8) {
        throw FormatError("PNG must be 8-bit, got " + std::to_string(header.bit_depth) + "-bit: " + path.string());
    }
    if (header.color_type != PNG_COLOR_TYPE_RGB && header.color_type != PNG_COLOR_TYPE_RGB_ALPHA) {
        throw FormatError("PNG must be RGB or RGBA: " + path.string());
    }
    RgbImage image{header.width, header.height, {}};
    if (header.row_bytes != image.width * 3) throw FormatError("png: unexpected row layout in " + path.string());
    image.rgb.resize(image.width * image.height * 3);
    std::vector<png_bytep> rows(image.height);
    for (std::size_t y = 0; y < image.height; ++y) rows[y] = image.rgb.data() + y * header.row_bytes;
    if (!read_rows(h.png, rows.data())) {
        throw FormatError("png: " + std::string(sink.message) + " (" + path.string() + ")");
    }
    return image;
}

void write_png(const RgbImage& image, const std::filesystem::path& path) {
    if (image.rgb.size() != image.width * image.height * 3 || image.width == 0 || image.height == 0) {
        throw DimensionError("write_png: inconsistent or empty image");
    }
    FilePtr file(std::fopen(path.c_str(), "wb"));
    if (!file) throw IoError("cannot write image: " + path.string());
    PngErrorSink sink;
    WriteHandles h;
    h.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &sink, on_png_error, on_png_warning);
    if (!h.png) throw IoError("png: out of memory");
    h.info = png_create_info_struct(h.png);
    if (!h.info) throw IoError("png: out of memory");
    std::vector<png_bytep> rows(image.height);
    for (std::size_t y = 0; y < image.height; ++y) {
        rows[y] = const_cast<png_bytep>(image.rgb.data() + y * image.width * 3);
    }
    if (!write_all(h.png, h.info, file.get(), static_cast<png_uint_32>(image.width),
                   static_cast<png_uint_32>(image.height), rows.data())) {
        throw IoError("png: " + std::string(sink.message) + " (" + path.string() + ")");
    }
    if (std::fflush(file.get()) != 0) throw IoError("failed writing image: " + path.string());
}

Tensor to_tensor(const RgbImage& image) {
    const std::size_t plane = image.width * image.height;
    Tensor out({3, image.height, image.width});
    for (std::size_t i = 0; i < plane; ++i) {
        for (std::size_t c = 0; c < 3; ++c) out[c * plane + i] = image.rgb[i * 3 + c] / 255.0;
    }
    return out;
}

RgbImage from_tensor(const Tensor& image) {
    require_rank(image, 3, "from_tensor");
    if (image.dim(0) != 3) throw DimensionError("from_tensor: expected 3 channels, got " + shape_to_string(image.shape()));
    RgbImage out{image.dim(2), image.dim(1), {}};
    const std::size_t plane = out.width * out.height;
    out.rgb.resize(plane * 3);
    for (std::size_t i = 0; i < plane; ++i) {
        for (std::size_t c = 0; c < 3; ++c) {
            const double v = std::clamp(image[c * plane + i], 0.0, 1.0);
            out.rgb[i * 3 + c] = static_cast<std::uint8_t>(std::lround(v * 255.0));
        }
    }
    return out;
}

Tensor load_image(const std::filesystem::path& path) {
    return to_tensor(read_png(path));
}

void save_image(const Tensor& image, const std::filesystem::path& path) {
    write_png(from_tensor(image), path);
}

}  // namespace sheepweight
