#include "aeslab/dsp/spectral.hpp"

#include <cmath>

#include "aeslab/dsp/fft.hpp"

namespace aeslab::dsp {

SpectralSequence analyze(const TimeSignal& signal, const FrameParams& params) {
  params.validate();
  if (signal.size() < static_cast<size_t>(params.frame_len)) {
    throw DataError("analyze: signal shorter than one frame (" +
                    std::to_string(signal.size()) + " < " +
                    std::to_string(params.frame_len) + " samples)");
  }
  const int frames = params.frame_count(signal.size());
  const int bins = params.bins();
  const auto window = params.sqrt_hann();

  SpectralSequence out;
  out.frames = frames;
  out.bins = bins;
  out.data.resize(static_cast<size_t>(frames) * bins);

  std::vector<std::complex<double>> buf(static_cast<size_t>(params.dft_size));
  for (int f = 0; f < frames; ++f) {
    const size_t offset = static_cast<size_t>(f) * params.frame_shift;
    std::fill(buf.begin(), buf.end(), Complex(0.0, 0.0));
    for (int n = 0; n < params.frame_len; ++n) {
      buf[static_cast<size_t>(n)] =
          signal[offset + static_cast<size_t>(n)] * window[static_cast<size_t>(n)];
    }
    fft(buf, false);
    for (int k = 0; k < bins; ++k) out.at(f, k) = buf[static_cast<size_t>(k)];
  }
  return out;
}

TimeSignal synthesize(const SpectralSequence& spectra, const FrameParams& params) {
  params.validate();
  if (spectra.bins != params.bins()) {
    throw DataError("synthesize: expected " + std::to_string(params.bins()) +
                    " bins, got " + std::to_string(spectra.bins));
  }
  for (const Complex& v : spectra.data) {
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
      throw NumericError("synthesize: non-finite spectral value");
    }
  }
  const int K = params.dft_size;
  const auto window = params.sqrt_hann();
  TimeSignal out(params.synthesis_length(spectra.frames), 0.0);

  std::vector<std::complex<double>> buf(static_cast<size_t>(K));
  for (int f = 0; f < spectra.frames; ++f) {
    for (int k = 0; k < spectra.bins; ++k) buf[static_cast<size_t>(k)] = spectra.at(f, k);
    for (int k = 1; k < K / 2; ++k) {
      buf[static_cast<size_t>(K - k)] = std::conj(spectra.at(f, k));
    }
    fft(buf, true);
    const size_t offset = static_cast<size_t>(f) * params.frame_shift;
    for (int n = 0; n < params.frame_len; ++n) {
      out[offset + static_cast<size_t>(n)] +=
          buf[static_cast<size_t>(n)].real() * window[static_cast<size_t>(n)];
    }
  }
  return out;
}

Complex mask_gain(Complex m) {
  const double mag = std::abs(m);
  if (mag < kMaskEpsilon) return Complex(0.0, 0.0);
  return m * (std::tanh(mag) / mag);
}

Complex apply_mask(Complex y, Complex m) { return y * mask_gain(m); }

void apply_mask_frame(const Complex* y, const Complex* m, Complex* e, int bins) {
  for (int k = 0; k < bins; ++k) e[k] = apply_mask(y[k], m[k]);
}

Complex compress_input(Complex y, double c) {
  const double mag = std::abs(y);
  if (mag == 0.0) return Complex(0.0, 0.0);
  return y * (std::pow(mag, c) / mag);
}

std::vector<double> assemble_features(const SpectralSequence& x,
                                      const SpectralSequence& y,
                                      const FrameParams& params,
                                      bool compressed) {
  params.validate();
  if (x.frames != y.frames) {
    throw DataError("assemble_features: frame count mismatch (" +
                    std::to_string(x.frames) + " vs " + std::to_string(y.frames) + ")");
  }
  if (x.bins != params.bins() || y.bins != params.bins()) {
    throw DataError("assemble_features: bin count mismatch");
  }
  const int frames = y.frames;
  const int L = params.feature_len;
  const double c = params.compression_exponent;
  std::vector<double> feat(static_cast<size_t>(frames) * L * 4, 0.0);
  for (int f = 0; f < frames; ++f) {
    for (int k = 0; k < y.bins; ++k) {
      Complex yv = y.at(f, k);
      Complex xv = x.at(f, k);
      if (compressed) {
        yv = compress_input(yv, c);
        xv = compress_input(xv, c);
      }
      double* cell = &feat[(static_cast<size_t>(f) * L + k) * 4];
      cell[0] = yv.real();
      cell[1] = yv.imag();
      cell[2] = xv.real();
      cell[3] = xv.imag();
    }
  }
  return feat;
}

SpectralSequence crop_mask(const std::vector<double>& network_output, int frames,
                           const FrameParams& params) {
  const int L = params.feature_len;
  const int bins = params.bins();
  if (network_output.size() != static_cast<size_t>(frames) * L * 2) {
    throw DataError("crop_mask: output tensor size mismatch");
  }
  SpectralSequence m;
  m.frames = frames;
  m.bins = bins;
  m.data.resize(static_cast<size_t>(frames) * bins);
  for (int f = 0; f < frames; ++f) {
    for (int k = 0; k < bins; ++k) {
      const double* cell = &network_output[(static_cast<size_t>(f) * L + k) * 2];
      m.at(f, k) = Complex(cell[0], cell[1]);
    }
  }
  return m;
}

}  // namespace aeslab::dsp
