#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "semra/corpus.hpp"
#include "semra/error.hpp"
#include "semra/rng.hpp"

namespace semra {

enum class ChannelModel { awgn, rayleigh };

inline std::string to_string(ChannelModel m) { return m == ChannelModel::awgn ? "awgn" : "rayleigh"; }

inline ChannelModel parse_channel_model(const std::string& name) {
  if (name == "awgn") return ChannelModel::awgn;
  if (name == "rayleigh") return ChannelModel::rayleigh;
  throw ValidationError("unknown channel model '" + name + "' (expected awgn or rayleigh)");
}

struct ChannelConfig {
  ChannelModel model = ChannelModel::rayleigh;
  double snr_db = 10.0;
  std::uint64_t seed = 1;
  std::size_t block_len = 8;
  double base_err = 1.0;
  /// Forces every fading coefficient to this value. Test hook.
  std::optional<std::complex<double>> fixed_fading;

  void validate() const {
    detail::require(block_len >= 1, "channel: block_len must be at least 1");
    detail::require(!std::isnan(snr_db), "channel: snr_db is NaN");
    detail::require(base_err >= 0.0, "channel: base_err must be nonnegative");
  }

  /// Linear SNR under unit signal power; +inf for a noiseless link.
  [[nodiscard]] double linear_snr() const { return std::pow(10.0, snr_db / 10.0); }
  [[nodiscard]] double noise_variance() const { return std::pow(10.0, -snr_db / 10.0); }
};

struct TransmissionResult {
  std::vector<TokenId> sent;
  std::vector<TokenId> received;
  std::vector<std::uint8_t> token_errors;
  std::vector<double> realized_snr;

  [[nodiscard]] std::size_t error_count() const noexcept {
    return static_cast<std::size_t>(std::count(token_errors.begin(), token_errors.end(), 1));
  }
};

namespace detail {

// Disjoint counter streams per purpose, so AWGN and Rayleigh runs share the
// same noise draws.
constexpr std::uint64_t kFadingStream = 1;
constexpr std::uint64_t kNoiseStream = 2;
constexpr std::uint64_t kOracleStream = 3;

inline CounterRng channel_rng(const ChannelConfig& cfg, std::uint64_t stream, std::uint64_t purpose) {
  return CounterRng(cfg.seed, stream * 8 + purpose);
}

}  // namespace detail

/// Fading coefficient h for draw `index` of `stream`: CN(0,1) for Rayleigh,
/// exactly 1 for AWGN.
inline std::complex<double> fading_draw(const ChannelConfig& cfg, std::uint64_t stream, std::uint64_t index) {
  if (cfg.fixed_fading) return *cfg.fixed_fading;
  if (cfg.model == ChannelModel::awgn) return {1.0, 0.0};
  return detail::channel_rng(cfg, stream, detail::kFadingStream).complex_normal(index);
}

/// Nearest codebook column in Euclidean distance over the components flagged
/// in `keep`; ties resolve to the lower index.
inline TokenId nearest_codeword(const Eigen::MatrixXd& codebook, const Eigen::VectorXd& y,
                                const std::vector<std::uint8_t>& keep) {
  TokenId best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index v = 0; v < codebook.cols(); ++v) {
    double dist = 0.0;
    for (Eigen::Index k = 0; k < y.size(); ++k) {
      if (!keep[static_cast<std::size_t>(k)]) continue;
      const double diff = y(k) - codebook(k, v);
      dist += diff * diff;
    }
    if (dist < best_d) {
      best_d = dist;
      best = static_cast<TokenId>(v);
    }
  }
  return best;
}

/// Send each column of `embeddings` over y = h r + n. Consecutive vector
/// components are packed as (real, imag) pairs, scaled to unit average
/// symbol power, and the resulting symbols are split into block_len fading
/// blocks. The receiver equalizes with perfect CSI and decodes to the nearest
/// codebook column. `stream` separates independent transmissions under one
/// seed.
inline TransmissionResult transmit(const Eigen::MatrixXd& embeddings, std::span<const TokenId> sent_ids,
                                   const Eigen::MatrixXd& codebook, const ChannelConfig& cfg,
                                   std::uint64_t stream = 0) {
  cfg.validate();
  detail::require(codebook.cols() > 0, "transmit: empty codebook");
  detail::require(codebook.allFinite(), "transmit: non-finite codebook");
  detail::require(embeddings.rows() == codebook.rows(), "transmit: embedding dimension differs from codebook");
  detail::require(static_cast<std::size_t>(embeddings.cols()) == sent_ids.size(),
                  "transmit: one token id per embedding required");
  const Eigen::Index d = embeddings.rows();
  const Eigen::Index symbols = (d + 1) / 2;
  const auto blocks = static_cast<Eigen::Index>(cfg.block_len);
  const double scale = std::sqrt(static_cast<double>(std::max<Eigen::Index>(symbols, 1)));
  const double sigma2 = cfg.noise_variance();
  const double lin = cfg.linear_snr();
  const auto noise = detail::channel_rng(cfg, stream, detail::kNoiseStream);

  TransmissionResult out;
  out.sent.assign(sent_ids.begin(), sent_ids.end());
  for (Eigen::Index t = 0; t < embeddings.cols(); ++t) {
    const auto tok = static_cast<std::uint64_t>(t);
    std::vector<std::complex<double>> h(static_cast<std::size_t>(blocks));
    double gain = 0.0;
    for (Eigen::Index b = 0; b < blocks; ++b) {
      h[static_cast<std::size_t>(b)] =
          fading_draw(cfg, stream, tok * static_cast<std::uint64_t>(blocks) + static_cast<std::uint64_t>(b));
      gain += std::norm(h[static_cast<std::size_t>(b)]);
    }
    Eigen::VectorXd y = Eigen::VectorXd::Zero(d);
    std::vector<std::uint8_t> keep(static_cast<std::size_t>(d), 1);
    for (Eigen::Index k = 0; k < symbols; ++k) {
      const double re = embeddings(2 * k, t) * scale;
      const double im = 2 * k + 1 < d ? embeddings(2 * k + 1, t) * scale : 0.0;
      const std::complex<double> r(re, im);
      // Fading block of symbol k: symbols are spread evenly over the blocks.
      const auto blk = static_cast<std::size_t>(k * blocks / symbols);
      const auto hk = h[std::min(blk, h.size() - 1)];
      std::complex<double> n{0.0, 0.0};
      if (sigma2 > 0.0) {
        n = noise.complex_normal(tok * static_cast<std::uint64_t>(symbols) + static_cast<std::uint64_t>(k), sigma2);
      }
      if (std::abs(hk) < 1e-12) {
        keep[static_cast<std::size_t>(2 * k)] = 0;
        if (2 * k + 1 < d) keep[static_cast<std::size_t>(2 * k + 1)] = 0;
        continue;
      }
      const std::complex<double> eq = (hk * r + n) / hk;
      y(2 * k) = eq.real() / scale;
      if (2 * k + 1 < d) y(2 * k + 1) = eq.imag() / scale;
    }
    const TokenId rx = nearest_codeword(codebook, y, keep);
    out.received.push_back(rx);
    out.token_errors.push_back(rx != sent_ids[static_cast<std::size_t>(t)] ? 1 : 0);
    out.realized_snr.push_back(lin * gain / static_cast<double>(blocks));
  }
  return out;
}

// --- Distortion oracle -----------------------------------------------------------

struct OracleOutput {
  double recon_error = 0.0;
  double snr = 1.0;
};

/// Maps (sentence, token index) to reconstruction error and linear SNR.
using DistortionOracle = std::function<OracleOutput(const AnnotatedSentence&, std::size_t)>;

/// Largest linear SNR handed to the cost model; keeps the noiseless limit finite.
inline constexpr double kMaxLinearSnr = 1e15;

/// Default oracle: SNR = link SNR x |h|^2 with a per-token fading draw
/// (exactly the link SNR for AWGN), E = base_err / (1 + SNR).
inline DistortionOracle channel_oracle(const ChannelConfig& cfg, std::uint64_t stream = 0) {
  cfg.validate();
  return [cfg, stream](const AnnotatedSentence&, std::size_t i) {
    const double lin = std::min(cfg.linear_snr(), kMaxLinearSnr);
    double snr = lin;
    if (cfg.fixed_fading) {
      snr = lin * std::norm(*cfg.fixed_fading);
    } else if (cfg.model == ChannelModel::rayleigh) {
      snr = lin * std::norm(detail::channel_rng(cfg, stream, detail::kOracleStream).complex_normal(i));
    }
    snr = std::clamp(snr, std::numeric_limits<double>::min(), kMaxLinearSnr);
    return OracleOutput{cfg.base_err / (1.0 + snr), snr};
  };
}

inline AnnotatedSentence annotate(const AnnotatedSentence& sentence, const DistortionOracle& oracle) {
  sentence.validate();
  AnnotatedSentence out = sentence;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto o = oracle(sentence, i);
    detail::require(o.recon_error >= 0.0 && o.snr > 0.0, "oracle: produced an invalid annotation");
    out.recon_error[i] = o.recon_error;
    out.token_snr[i] = o.snr;
  }
  return out;
}

inline AnnotatedSentence oracle_annotate(const AnnotatedSentence& sentence, const ChannelConfig& cfg,
                                         std::uint64_t stream = 0) {
  return annotate(sentence, channel_oracle(cfg, stream));
}

}  // namespace semra
