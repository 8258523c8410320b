// SPDX-License-Identifier: Apache-2.0
#include <morphoforge/core/error.hpp>
#include <morphoforge/render/renderer.hpp>

#include <png.h>

#include <fstream>

namespace morphoforge::render
{

auto encode_png(Image const& image) -> std::string
{
    png_image png {};
    png.version = PNG_IMAGE_VERSION;
    png.width = static_cast<png_uint_32>(image.width);
    png.height = static_cast<png_uint_32>(image.height);
    png.format = PNG_FORMAT_RGBA;

    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&png, nullptr, &size, 0, image.rgba.data(), 0, nullptr))
        throw Error(ErrorCode::IoError, std::string("PNG encode: ") + png.message);
    std::string out(size, '\0');
    if (!png_image_write_to_memory(&png, out.data(), &size, 0, image.rgba.data(), 0, nullptr))
        throw Error(ErrorCode::IoError, std::string("PNG encode: ") + png.message);
    out.resize(size);
    return out;
}

auto decode_png(std::string const& bytes) -> Image
{
    png_image png {};
    png.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&png, bytes.data(), bytes.size()))
        throw Error(ErrorCode::IoError, std::string("PNG decode: ") + png.message);
    png.format = PNG_FORMAT_RGBA;
    Image image;
    image.width = static_cast<int>(png.width);
    image.height = static_cast<int>(png.height);
    image.rgba.resize(PNG_IMAGE_SIZE(png));
    if (!png_image_finish_read(&png, nullptr, image.rgba.data(), 0, nullptr))
    {
        png_image_free(&png);
        throw Error(ErrorCode::IoError, std::string("PNG decode: ") + png.message);
    }
    return image;
}

void write_png(Image const& image, std::filesystem::path const& path)
{
    auto const bytes = encode_png(image);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out || !out.write(bytes.data(), static_cast<std::streamsize>(bytes.size())))
        throw Error(ErrorCode::IoError, "cannot write " + path.string());
}

} // namespace morphoforge::render
