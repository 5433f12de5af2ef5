#pragma once

#include <string>

#include "ggan/spectro/spectrogram.hpp"

namespace ggan::spectro {

/// 16-bit PCM mono WAV. Multichannel input is averaged to mono on read;
/// samples are scaled to [-1, 1] doubles.
Waveform read_wav(const std::string& path);
void write_wav(const std::string& path, const Waveform& wav);

}  // namespace ggan::spectro
