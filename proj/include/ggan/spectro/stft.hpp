#pragma once

#include <vector>

#include "ggan/spectro/spectrogram.hpp"

namespace ggan::spectro {

/// Forward analysis: Hann-windowed power-of-two STFT, log magnitude in dB
/// clipped to [min_db, max_db] and mapped affinely to [-1, 1]. Input longer
/// than required is center-cropped, shorter (but at least one frame) is
/// center-padded with zeros; shorter than one frame is an error.
Spectrogram stft_log_magnitude(const Waveform& wav, const SpectroConfig& cfg);

/// Iterative phase reconstruction (alternating projection between the set
/// of consistent STFTs and the target-magnitude set). `inconsistency`,
/// when given, receives the Frobenius distance between the target magnitude
/// and the magnitude of the running estimate after each iteration; the
/// sequence is non-increasing.
Waveform invert_spectrogram(const Spectrogram& spec, std::size_t iters,
                            std::vector<double>* inconsistency = nullptr);

/// Pearson correlation between two equally-sized arrays (test protocol for
/// round-trip fidelity).
double pearson(const Tensor<float>& a, const Tensor<float>& b);

}  // namespace ggan::spectro
