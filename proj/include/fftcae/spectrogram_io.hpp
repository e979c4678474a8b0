#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fftcae/spectral.hpp"

namespace fftcae {

/// 8-bit log-magnitude image. Row 0 is the highest frequency bin.
struct SpectrogramImage {
  Eigen::Index width = 0;
  Eigen::Index height = 0;
  std::vector<std::uint8_t> pixels;
  double max_db = 0.0;
  double range_db = 80.0;
};

/// Maps 20 log10(mag) linearly from [max_db - range_db, max_db] onto [0, 255].
/// An all-zero spectrogram maps to all zeros.
SpectrogramImage quantize_spectrogram(const Eigen::MatrixXd& magnitudes, double range_db = 80.0);

/// Binary P5 PGM with the STFT parameters and dB range in header comments.
std::string encode_pgm(const Eigen::MatrixXd& magnitudes, const StftParams& params, double range_db = 80.0);

/// Rows are frequency bins (ascending), columns are frames, full precision.
/// The first line is a '#' comment with the STFT parameters.
std::string encode_csv(const Eigen::MatrixXd& magnitudes, const StftParams& params);

}  // namespace fftcae
