#include "elastorec/png_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "elastorec/container.hpp"

namespace elastorec {

void write_png_gray(const std::string& path, const std::vector<double>& img,
                    int width, int height, double lo, double hi) {
  require(img.size() == (size_t)width * height, "png: size mismatch");
  if (lo == hi) {
    std::vector<double> sorted = img;
    std::sort(sorted.begin(), sorted.end());
    size_t n = sorted.size();
    lo = sorted[(size_t)(0.01 * (n - 1))];
    hi = sorted[(size_t)(0.99 * (n - 1))];
    if (lo == hi) hi = lo + 1.0; // constant image -> uniform gray
  }
  std::vector<unsigned char> pix(img.size());
  double scale = 255.0 / (hi - lo);
  for (size_t i = 0; i < img.size(); ++i) {
    double v = (img[i] - lo) * scale;
    pix[i] = (unsigned char)std::clamp(v, 0.0, 255.0);
  }

  FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw DataError("cannot write " + path);
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info || setjmp(png_jmpbuf(png))) {
    if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
    std::fclose(f);
    throw DataError("libpng failure writing " + path);
  }
  png_init_io(png, f);
  png_set_IHDR(png, info, width, height, 8, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < height; ++y)
    png_write_row(png, pix.data() + (size_t)y * width);
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(f);
}

} // namespace elastorec
