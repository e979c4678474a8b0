#include "fftcae/spectrogram_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "fftcae/errors.hpp"

namespace fftcae {

namespace {

std::string describe(const StftParams& params) {
  return "window=" + std::to_string(params.window_len) + " hop=" + std::to_string(params.hop) +
         " kind=" + (params.window == WindowKind::Hann ? "hann" : "rect");
}

}  // namespace

SpectrogramImage quantize_spectrogram(const Eigen::MatrixXd& magnitudes, double range_db) {
  if (!(range_db > 0)) throw DomainError("dB range must be positive");
  SpectrogramImage img;
  img.height = magnitudes.rows();
  img.width = magnitudes.cols();
  img.range_db = range_db;
  img.pixels.assign(static_cast<std::size_t>(img.width * img.height), 0);
  const double peak = magnitudes.size() ? magnitudes.maxCoeff() : 0.0;
  if (!(peak > 0)) return img;
  img.max_db = 20.0 * std::log10(peak);
  const double floor_db = img.max_db - range_db;
  for (Eigen::Index bin = 0; bin < img.height; ++bin)
    for (Eigen::Index frame = 0; frame < img.width; ++frame) {
      const double mag = magnitudes(bin, frame);
      if (!(mag > 0)) continue;
      const double level = (20.0 * std::log10(mag) - floor_db) / range_db * 255.0;
      const auto row = img.height - 1 - bin;
      img.pixels[static_cast<std::size_t>(row * img.width + frame)] =
          static_cast<std::uint8_t>(std::lround(std::clamp(level, 0.0, 255.0)));
    }
  return img;
}

std::string encode_pgm(const Eigen::MatrixXd& magnitudes, const StftParams& params, double range_db) {
  const SpectrogramImage img = quantize_spectrogram(magnitudes, range_db);
  char range[128];
  std::snprintf(range, sizeof(range), "range_db=%.17g max_db=%.17g", img.range_db, img.max_db);
  std::string out = "P5\n# fftcae spectrogram " + describe(params) + "\n# " + range + "\n" + std::to_string(img.width) +
                    " " + std::to_string(img.height) + "\n255\n";
  out.append(img.pixels.begin(), img.pixels.end());
  return out;
}

std::string encode_csv(const Eigen::MatrixXd& magnitudes, const StftParams& params) {
  std::string out = "# fftcae spectrogram " + describe(params) + " rows=bins cols=frames\n";
  char buf[32];
  for (Eigen::Index bin = 0; bin < magnitudes.rows(); ++bin) {
    for (Eigen::Index frame = 0; frame < magnitudes.cols(); ++frame) {
      std::snprintf(buf, sizeof(buf), "%.17g", magnitudes(bin, frame));
      if (frame) out += ',';
      out += buf;
    }
    out += '\n';
  }
  return out;
}

}  // namespace fftcae
