// Copyright (c) 2026 The causalflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "causalflow/errors.hpp"

namespace causalflow {

struct ContextStats {
  double mean = 0.0;
  double std = 0.0;

  /// Divisor used for standardisation. A flat context only gets centred.
  [[nodiscard]] double scale() const noexcept { return std > 1e-12 ? std : 1.0; }
  [[nodiscard]] double standardize(double x) const noexcept { return (x - mean) / scale(); }
  [[nodiscard]] double destandardize(double y) const noexcept { return mean + y * scale(); }

  bool operator==(const ContextStats&) const = default;
};

/// Mean and population standard deviation of `xs`.
inline ContextStats compute_stats(std::span<const double> xs) {
  ContextStats s;
  if (xs.empty()) return s;
  double sum = 0.0;
  for (double x : xs) sum += x;
  s.mean = sum / static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(ss / static_cast<double>(xs.size()));
  return s;
}

/// Windows of a multivariate series, laid out [batch][node][time]. Time 0 of
/// item b is absolute step origin(b) of the generating process; the first
/// context_len steps are the conditioning context.
class SeriesBatch {
 public:
  SeriesBatch() = default;

  SeriesBatch(std::size_t batch, std::size_t nodes, std::size_t total_len, std::size_t context_len)
      : batch_(batch), nodes_(nodes), total_len_(total_len), context_len_(context_len),
        values_(batch * nodes * total_len, 0.0), origin_(batch, 0), stats_(batch * nodes) {
    require(context_len < total_len, ErrorCode::InvalidConfig,
            "context length " + std::to_string(context_len) + " must be < total length " +
                std::to_string(total_len));
  }

  [[nodiscard]] std::size_t batch() const noexcept { return batch_; }
  [[nodiscard]] std::size_t nodes() const noexcept { return nodes_; }
  [[nodiscard]] std::size_t total_len() const noexcept { return total_len_; }
  [[nodiscard]] std::size_t context_len() const noexcept { return context_len_; }
  [[nodiscard]] std::size_t horizon() const noexcept { return total_len_ - context_len_; }

  [[nodiscard]] double& at(std::size_t b, std::size_t k, std::size_t t) {
    return values_[(b * nodes_ + k) * total_len_ + t];
  }
  [[nodiscard]] double at(std::size_t b, std::size_t k, std::size_t t) const {
    return values_[(b * nodes_ + k) * total_len_ + t];
  }

  [[nodiscard]] std::span<double> series(std::size_t b, std::size_t k) {
    return {values_.data() + (b * nodes_ + k) * total_len_, total_len_};
  }
  [[nodiscard]] std::span<const double> series(std::size_t b, std::size_t k) const {
    return {values_.data() + (b * nodes_ + k) * total_len_, total_len_};
  }

  [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
  [[nodiscard]] std::span<double> values() noexcept { return values_; }

  [[nodiscard]] std::int64_t origin(std::size_t b) const { return origin_.at(b); }
  void set_origin(std::size_t b, std::int64_t o) { origin_.at(b) = o; }

  [[nodiscard]] const ContextStats& stats(std::size_t b, std::size_t k) const {
    return stats_[b * nodes_ + k];
  }

  /// Recomputes per-(item, node) statistics over the context window.
  void refresh_stats() {
    for (std::size_t b = 0; b < batch_; ++b)
      for (std::size_t k = 0; k < nodes_; ++k)
        stats_[b * nodes_ + k] = compute_stats(series(b, k).first(context_len_));
  }

  /// Copies item `b` into a single-item batch.
  [[nodiscard]] SeriesBatch item(std::size_t b) const {
    SeriesBatch out(1, nodes_, total_len_, context_len_);
    for (std::size_t k = 0; k < nodes_; ++k) {
      auto src = series(b, k);
      std::copy(src.begin(), src.end(), out.series(0, k).begin());
      out.stats_[k] = stats(b, k);
    }
    out.origin_[0] = origin_[b];
    return out;
  }

  /// Items `idx` in that order.
  [[nodiscard]] SeriesBatch select(std::span<const std::size_t> idx) const {
    SeriesBatch out(idx.size(), nodes_, total_len_, context_len_);
    for (std::size_t j = 0; j < idx.size(); ++j) {
      require(idx[j] < batch_, ErrorCode::IndexOutOfRange, "batch index out of range");
      for (std::size_t k = 0; k < nodes_; ++k) {
        auto src = series(idx[j], k);
        std::copy(src.begin(), src.end(), out.series(j, k).begin());
        out.stats_[j * nodes_ + k] = stats(idx[j], k);
      }
      out.origin_[j] = origin_[idx[j]];
    }
    return out;
  }

  bool operator==(const SeriesBatch&) const = default;

 private:
  std::size_t batch_ = 0;
  std::size_t nodes_ = 0;
  std::size_t total_len_ = 1;
  std::size_t context_len_ = 0;
  std::vector<double> values_;
  std::vector<std::int64_t> origin_;
  std::vector<ContextStats> stats_;
};

/// Sliding windows (stride 1) of length `total_len` from item 0 of `series`,
/// starting at window offsets first, first+1, ..., first+count-1.
inline SeriesBatch make_windows(const SeriesBatch& series, std::size_t first, std::size_t count,
                                std::size_t context_len, std::size_t total_len) {
  require(first + count + total_len - 1 <= series.total_len(), ErrorCode::IndexOutOfRange,
          "window range exceeds series length");
  SeriesBatch out(count, series.nodes(), total_len, context_len);
  for (std::size_t w = 0; w < count; ++w) {
    for (std::size_t k = 0; k < series.nodes(); ++k) {
      auto src = series.series(0, k).subspan(first + w, total_len);
      std::copy(src.begin(), src.end(), out.series(w, k).begin());
    }
    out.set_origin(w, series.origin(0) + static_cast<std::int64_t>(first + w));
  }
  out.refresh_stats();
  return out;
}

/// Number of stride-1 windows of length `window` in a series of length `n`.
constexpr std::size_t window_count(std::size_t n, std::size_t window) noexcept {
  return n >= window ? n - window + 1 : 0;
}

}  // namespace causalflow
