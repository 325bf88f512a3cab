#include "barm/render.hpp"

#include "barm/errors.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

namespace barm {

HeightImage render_heightmap(const WorldState& world, const GridSpec& grid, double z_max) {
    HeightImage img(grid.size);
    const double pitch = grid.pitch();
    // Index range whose pixel centers fall inside [lo, hi].
    auto span = [&](double lo, double hi, double origin) {
        const int a = static_cast<int>(std::ceil((lo - origin) / pitch - 0.5 - 1e-9));
        const int b = static_cast<int>(std::floor((hi - origin) / pitch - 0.5 + 1e-9));
        return std::pair{std::max(a, 0), std::min(b, grid.size - 1)};
    };
    for (const auto& o : world.objects) {
        if (world.is_held(o.id)) continue;
        const Aabb box = aabb_of(footprint_polygon(o.shape, o.pose));
        // Cylinder footprints are inscribed polygons; widen by the exact radius instead.
        Aabb b = box;
        if (const auto* c = std::get_if<Cylinder>(&o.shape)) {
            b = {o.pose.x - c->radius, o.pose.x + c->radius, o.pose.y - c->radius, o.pose.y + c->radius};
        }
        const auto [c0, c1] = span(b.x_min, b.x_max, grid.x_min);
        const auto [r0, r1] = span(b.y_min, b.y_max, grid.y_min);
        for (int r = r0; r <= r1; ++r) {
            for (int c = c0; c <= c1; ++c) {
                const auto h = height_at(o.shape, o.pose, pixel_to_world(grid, {r, c}));
                if (!h) continue;
                const float v = static_cast<float>(std::clamp(*h, 0.0, z_max));
                float& cell = img.at(r, c);
                cell = std::max(cell, v);
            }
        }
    }
    return img;
}

HeightImage render_in_hand(const HeightImage& prev, const GridSpec& grid, double x, double y, double yaw,
                           int size) {
    HeightImage out(size);
    const double pitch = grid.pitch();
    const double cs = std::cos(yaw), sn = std::sin(yaw);
    const int n = prev.size;
    auto cell = [&](int r, int c) -> double {
        return prev.at(std::clamp(r, 0, n - 1), std::clamp(c, 0, n - 1));
    };
    for (int i = 0; i < size; ++i) {
        const double v = (i + 0.5 - size / 2.0) * pitch;
        for (int j = 0; j < size; ++j) {
            const double u = (j + 0.5 - size / 2.0) * pitch;
            const double px = x + cs * u - sn * v;
            const double py = y + sn * u + cs * v;
            if (px < grid.x_min || px > grid.x_max || py < grid.y_min || py > grid.y_max) continue;
            const double fc = (px - grid.x_min) / pitch - 0.5;
            const double fr = (py - grid.y_min) / pitch - 0.5;
            const int c0 = static_cast<int>(std::floor(fc));
            const int r0 = static_cast<int>(std::floor(fr));
            const double tc = fc - c0, tr = fr - r0;
            const double top = cell(r0, c0) * (1 - tc) + cell(r0, c0 + 1) * tc;
            const double bot = cell(r0 + 1, c0) * (1 - tc) + cell(r0 + 1, c0 + 1) * tc;
            out.at(i, j) = static_cast<float>(top * (1 - tr) + bot * tr);
        }
    }
    return out;
}

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const { std::fclose(f); }
};

}  // namespace

void export_png(const HeightImage& img, const std::filesystem::path& path, double z_max) {
    std::unique_ptr<std::FILE, FileCloser> fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw IoError("cannot open " + path.string() + " for writing");

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError("libpng initialization failed for " + path.string());
    }
    std::vector<png_byte> row(static_cast<std::size_t>(img.size) * 2);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("failed writing " + path.string());
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, img.size, img.size, 16, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int r = 0; r < img.size; ++r) {
        for (int c = 0; c < img.size; ++c) {
            const double q = std::clamp(static_cast<double>(img.at(r, c)) / z_max, 0.0, 1.0);
            const auto v = static_cast<std::uint16_t>(std::lround(q * 65535.0));
            row[2 * c] = static_cast<png_byte>(v >> 8);  // PNG samples are big-endian
            row[2 * c + 1] = static_cast<png_byte>(v & 0xFF);
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

HeightImage import_png(const std::filesystem::path& path, double z_max) {
    std::unique_ptr<std::FILE, FileCloser> fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw IoError("cannot open " + path.string());

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw IoError("libpng initialization failed for " + path.string());
    }
    HeightImage img;
    std::vector<png_byte> row;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("failed reading " + path.string());
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);
    const auto w = png_get_image_width(png, info), h = png_get_image_height(png, info);
    if (w != h || png_get_bit_depth(png, info) != 16 || png_get_color_type(png, info) != PNG_COLOR_TYPE_GRAY) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError(path.string() + " is not a square 16-bit grayscale PNG");
    }
    img = HeightImage(static_cast<int>(w));
    row.resize(static_cast<std::size_t>(w) * 2);
    for (int r = 0; r < img.size; ++r) {
        png_read_row(png, row.data(), nullptr);
        for (int c = 0; c < img.size; ++c) {
            const unsigned v = (static_cast<unsigned>(row[2 * c]) << 8) | row[2 * c + 1];
            img.at(r, c) = static_cast<float>(v / 65535.0 * z_max);
        }
    }
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

}  // namespace barm
