// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <morphoforge/core/tree.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace morphoforge::render
{

enum class View
{
    Front,
    Left,
    Top,
    ThreeQuarter,
};

inline constexpr std::array<View, 4> all_views { View::Front, View::Left, View::Top, View::ThreeQuarter };

/// Orthographic camera: rays travel along `direction`, `up` points to the top of the image.
struct ViewPreset
{
    View view;
    std::string_view name;
    Vec3 direction;
    Vec3 up;

    [[nodiscard]] auto right() const -> Vec3 { return cross(direction, up); }
};

[[nodiscard]] auto preset(View view) -> ViewPreset;
/// Throws InvalidArgument for names other than front, left, top, threequarter.
[[nodiscard]] auto parse_view(std::string_view name) -> View;
[[nodiscard]] auto view_name(View view) -> std::string_view;

/// Largest accepted width or height. A 1000×1000 RGBA image stays below 4 MiB even uncompressed.
inline constexpr int max_dimension = 1000;

struct RenderOptions
{
    int width = 512;
    int height = 512;
    /// Fraction of the half-viewport left empty around the model.
    double margin = 0.1;
};

/// Where the camera looks and how many pixels one world unit covers.
struct Framing
{
    Vec3 center;
    double pixels_per_unit = 1.0;
};

/// Framing shared by all four presets: centered on the world bounding box, scaled so
/// the box projected in any preset fits inside the margin.
[[nodiscard]] auto auto_framing(KinematicTree const& tree, RenderOptions const& options = {}) -> Framing;

struct Image
{
    int width = 0;
    int height = 0;
    /// Row-major RGBA8, top row first.
    std::vector<std::uint8_t> rgba;

    [[nodiscard]] auto pixel(int x, int y) const -> std::array<std::uint8_t, 4>;
    friend auto operator==(Image const&, Image const&) -> bool = default;
};

/// Orthographic ray cast with Lambert shading over a white background. Throws
/// InvalidArgument for sizes outside 1..max_dimension.
[[nodiscard]] auto render(KinematicTree const& tree, View view, RenderOptions const& options = {},
                          std::optional<Framing> framing = std::nullopt) -> Image;

/// The four presets in all_views order, with one shared framing.
[[nodiscard]] auto render_contact_views(KinematicTree const& tree, RenderOptions const& options = {})
    -> std::array<Image, 4>;

/// 8-bit RGBA PNG, no interlacing, fixed compression settings.
[[nodiscard]] auto encode_png(Image const& image) -> std::string;
/// Decodes any PNG to RGBA8. Throws IoError when the bytes are not a PNG.
[[nodiscard]] auto decode_png(std::string const& bytes) -> Image;
/// Throws IoError.
void write_png(Image const& image, std::filesystem::path const& path);

} // namespace morphoforge::render
