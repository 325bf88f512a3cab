#pragma once

// Observation pipeline: top-down heightmap, in-hand crop, gripper flag.

#include "barm/geometry.hpp"
#include "barm/sim.hpp"

#include <filesystem>
#include <vector>

namespace barm {

// Square grid of heights in meters. Row index follows y, column index follows x;
// row 0 is at y_min.
struct HeightImage {
    int size = 0;
    std::vector<float> data;

    HeightImage() = default;
    explicit HeightImage(int n) : size(n), data(static_cast<std::size_t>(n) * n, 0.0f) {}

    float& at(int row, int col) { return data[static_cast<std::size_t>(row) * size + col]; }
    float at(int row, int col) const { return data[static_cast<std::size_t>(row) * size + col]; }

    friend bool operator==(const HeightImage&, const HeightImage&) = default;
};

struct Observation {
    HeightImage heightmap;
    HeightImage in_hand;
    bool holding = false;
};

// Max height_at over unheld objects at every pixel center; 0 where nothing is present.
// Values are clamped to [0, z_max].
HeightImage render_heightmap(const WorldState& world, const GridSpec& grid, double z_max = 1.0);

// Crop of `prev` centered at (x, y), rotated into the gripper frame: output pixel (i, j)
// samples prev at (x, y) + R(yaw) * (u_j, v_i) with u_j = (j + 0.5 - size/2) * pitch.
// Bilinear between pixel centers; samples outside the workspace read 0.
HeightImage render_in_hand(const HeightImage& prev, const GridSpec& grid, double x, double y, double yaw,
                           int size);

// 16-bit grayscale PNG, value = round(h / z_max * 65535), first image row = row 0.
void export_png(const HeightImage& img, const std::filesystem::path& path, double z_max = 1.0);
HeightImage import_png(const std::filesystem::path& path, double z_max = 1.0);

}  // namespace barm
