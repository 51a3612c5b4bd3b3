// File I/O: PNG (8-bit gray and RGB) and PGM codecs, kernel matrix text,
// and the iteration-trace CSV. Doubles are written with 17 significant
// digits so identical runs serialize to identical bytes.

#pragma once

#include <png.h>

#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "kmdeblur/image.hpp"
#include "kmdeblur/kernel.hpp"
#include "kmdeblur/pipeline.hpp"

namespace kmdeblur {

namespace detail {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace detail

inline RawImage read_png(const std::string& path) {
    detail::FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw IoError("cannot open '" + path + "' for reading");

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("png: failed to create read struct");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw IoError("png: failed to create info struct");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("png: failed to decode '" + path + "'");
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);

    png_uint_32 width = png_get_image_width(png, info);
    png_uint_32 height = png_get_image_height(png, info);
    int bit_depth = png_get_bit_depth(png, info);
    int color_type = png_get_color_type(png, info);

    if (bit_depth == 16) png_set_strip_16(png);
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    if (color_type == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_strip_alpha(png);
    png_read_update_info(png, info);

    color_type = png_get_color_type(png, info);
    const int channels = color_type == PNG_COLOR_TYPE_GRAY ? 1 : 3;

    RawImage raw;
    raw.width = static_cast<int>(width);
    raw.height = static_cast<int>(height);
    raw.channels = channels;
    raw.samples.resize(static_cast<std::size_t>(width) * height * channels);

    std::vector<png_bytep> rows(height);
    for (png_uint_32 r = 0; r < height; ++r) {
        rows[r] = raw.samples.data() + static_cast<std::size_t>(r) * width * channels;
    }
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return raw;
}

inline void write_png(const std::string& path, const RawImage& raw) {
    if (raw.channels != 1 && raw.channels != 3) {
        throw IoError("png: only 1- or 3-channel images can be written");
    }
    detail::FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw IoError("cannot open '" + path + "' for writing");

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("png: failed to create write struct");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError("png: failed to create info struct");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("png: failed to encode '" + path + "'");
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, raw.width, raw.height, 8,
                 raw.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_bytep> rows(raw.height);
    for (int r = 0; r < raw.height; ++r) {
        rows[r] = const_cast<png_bytep>(raw.samples.data()) +
                  static_cast<std::size_t>(r) * raw.width * raw.channels;
    }
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

inline RawImage read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    std::string magic;
    in >> magic;
    if (magic != "P5" && magic != "P2") throw IoError("pgm: unsupported magic '" + magic + "'");
    auto next_token = [&in]() {
        std::string tok;
        while (in >> tok) {
            if (tok[0] == '#') {
                std::string rest;
                std::getline(in, rest);
                continue;
            }
            return tok;
        }
        throw IoError("pgm: truncated header");
    };
    const int width = std::stoi(next_token());
    const int height = std::stoi(next_token());
    const int maxval = std::stoi(next_token());
    if (width <= 0 || height <= 0 || maxval != 255) {
        throw IoError("pgm: only 8-bit images with positive dimensions are supported");
    }
    RawImage raw;
    raw.width = width;
    raw.height = height;
    raw.channels = 1;
    raw.samples.resize(static_cast<std::size_t>(width) * height);
    if (magic == "P5") {
        in.get();  // single whitespace after maxval
        in.read(reinterpret_cast<char*>(raw.samples.data()),
                static_cast<std::streamsize>(raw.samples.size()));
        if (in.gcount() != static_cast<std::streamsize>(raw.samples.size())) {
            throw IoError("pgm: truncated pixel data");
        }
    } else {
        for (std::uint8_t& s : raw.samples) {
            int v;
            if (!(in >> v)) throw IoError("pgm: truncated pixel data");
            s = static_cast<std::uint8_t>(v);
        }
    }
    return raw;
}

inline void write_pgm(const std::string& path, const RawImage& raw) {
    if (raw.channels != 1) throw IoError("pgm: only grayscale images can be written");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << "P5\n" << raw.width << " " << raw.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(raw.samples.data()),
              static_cast<std::streamsize>(raw.samples.size()));
    if (!out) throw IoError("pgm: failed writing '" + path + "'");
}

/// Reads a PNG or PGM file (sniffed by extension) into [0,1] planes.
inline MultiChannelImage load_image(const std::string& path) {
    const std::string ext = std::filesystem::path(path).extension().string();
    RawImage raw = (ext == ".pgm" || ext == ".PGM") ? read_pgm(path) : read_png(path);
    return normalize_intensities(raw);
}

/// Clamps to [0,1], quantizes to 8 bits and writes a PNG.
inline void save_image(const std::string& path, const MultiChannelImage& img) {
    write_png(path, denormalize_intensities(clamp_unit(img)));
}

inline void write_kernel_text_file(const std::string& path, const KernelGrid& k) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    write_kernel_text(out, k);
    if (!out) throw IoError("failed writing '" + path + "'");
}

inline KernelGrid read_kernel_text_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    std::vector<double> values;
    double v;
    while (in >> v) values.push_back(v);
    const int h = static_cast<int>(std::lround(std::sqrt(static_cast<double>(values.size()))));
    if (values.empty() || static_cast<std::size_t>(h) * h != values.size() || h % 2 == 0) {
        throw IoError("kernel text '" + path + "' is not an odd square matrix");
    }
    KernelGrid k;
    k.size = h;
    k.weights = std::move(values);
    return k;
}

inline void write_kernel_heatmap_png(const std::string& path, const KernelGrid& k) {
    write_png(path, kernel_heatmap(k));
}

inline void write_trace_csv(std::ostream& os, const std::vector<IterationRecord>& trace) {
    os << "iter,kernel_rel_change,image_rel_change,lambda3,kernel_energy,image_energy\n";
    char buf[192];
    for (const IterationRecord& r : trace) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.iteration,
                      r.kernel_rel_change, r.image_rel_change, r.lambda3, r.kernel_energy,
                      r.image_energy);
        os << buf;
    }
}

inline void write_trace_csv_file(const std::string& path,
                                 const std::vector<IterationRecord>& trace) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    write_trace_csv(out, trace);
    if (!out) throw IoError("failed writing '" + path + "'");
}

}  // namespace kmdeblur
