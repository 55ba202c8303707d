// Copyright (c) 2026 The causalflow Authors
// SPDX-License-Identifier: Apache-2.0
//
// Files: series / schedule / rollout / score CSVs, binary checkpoints, and
// SVG fan charts. Reals are written with 17 significant digits so a read
// returns the same doubles.

#pragma once

#include <bit>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <map>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "causalflow/config.hpp"
#include "causalflow/forecaster.hpp"

namespace causalflow {

inline std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorCode::IoError, "cannot write '" + path + "'");
  out << text;
  require(out.good(), ErrorCode::IoError, "write failed for '" + path + "'");
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::IoError, "cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace detail {

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline std::vector<std::string> csv_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

inline bool parse_real(const std::string& s, double& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size();
}

inline bool parse_index(const std::string& s, long long& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  out = std::strtoll(s.c_str(), &end, 10);
  return end == s.c_str() + s.size();
}

}  // namespace detail

// ---------------------------------------------------------------- series

/// `batch,node,t,value`, t the absolute step of the generating process.
inline std::string series_csv(const SeriesBatch& s) {
  std::string out = "batch,node,t,value\n";
  for (std::size_t b = 0; b < s.batch(); ++b)
    for (std::size_t k = 0; k < s.nodes(); ++k)
      for (std::size_t t = 0; t < s.total_len(); ++t)
        out += std::to_string(b) + "," + std::to_string(k) + "," +
               std::to_string(s.origin(b) + static_cast<std::int64_t>(t)) + "," + format_real(s.at(b, k, t)) + "\n";
  return out;
}

/// Items must share node count and length, each over consecutive steps.
inline SeriesBatch parse_series_csv(const std::string& text, const std::string& name = "series") {
  const auto lines = detail::csv_lines(text);
  require(lines.size() >= 2 && lines[0] == "batch,node,t,value", ErrorCode::IoError,
          name + ": needs the header 'batch,node,t,value' and at least one row");
  struct Row {
    long long b, k, t;
    double v;
  };
  std::vector<Row> rows;
  long long B = 0, K = 0;
  std::map<long long, std::pair<long long, long long>> span;  // item -> (first step, last step)
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto c = detail::split_csv(lines[r]);
    Row row{};
    require(c.size() == 4 && detail::parse_index(c[0], row.b) && detail::parse_index(c[1], row.k) &&
                detail::parse_index(c[2], row.t) && detail::parse_real(c[3], row.v) && row.b >= 0 && row.k >= 0,
            ErrorCode::IoError, name + ": bad row " + std::to_string(r));
    B = std::max(B, row.b + 1);
    K = std::max(K, row.k + 1);
    auto [it, fresh] = span.try_emplace(row.b, row.t, row.t);
    if (!fresh) it->second = {std::min(it->second.first, row.t), std::max(it->second.second, row.t)};
    rows.push_back(row);
  }
  require(span.size() == static_cast<std::size_t>(B), ErrorCode::IoError, name + ": batch indices have gaps");
  const long long len = span.begin()->second.second - span.begin()->second.first + 1;
  for (const auto& [b, se] : span)
    require(se.second - se.first + 1 == len, ErrorCode::IoError, name + ": items differ in length");
  require(static_cast<long long>(rows.size()) == B * K * len, ErrorCode::IoError,
          name + ": expected one row per (batch, node, step)");
  SeriesBatch out(static_cast<std::size_t>(B), static_cast<std::size_t>(K), static_cast<std::size_t>(len), 0);
  std::vector<char> seen(rows.size(), 0);
  for (const auto& row : rows) {
    const auto first = span[row.b].first;
    const auto idx = static_cast<std::size_t>((row.b * K + row.k) * len + (row.t - first));
    require(!seen[idx], ErrorCode::IoError, name + ": duplicate row");
    seen[idx] = 1;
    out.at(static_cast<std::size_t>(row.b), static_cast<std::size_t>(row.k), static_cast<std::size_t>(row.t - first)) =
        row.v;
  }
  for (const auto& [b, se] : span) out.set_origin(static_cast<std::size_t>(b), se.first);
  return out;
}

inline SeriesBatch read_series_csv(const std::string& path) { return parse_series_csv(read_text(path), path); }

// ---------------------------------------------------------------- schedules

/// `node,t,value` rows, t 1-based within the window, so forecast steps are
/// context_len + 1 .. total_len.
inline InterventionSchedule parse_schedule_csv(const std::string& text, std::size_t context_len,
                                               std::size_t total_len) {
  InterventionSchedule s(context_len, total_len);
  const auto lines = detail::csv_lines(text);
  require(!lines.empty() && lines[0] == "node,t,value", ErrorCode::ScheduleParseError,
          "schedule must start with the header 'node,t,value'");
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto cells = detail::split_csv(lines[r]);
    long long node = 0, t = 0;
    double v = 0.0;
    require(cells.size() == 3 && detail::parse_index(cells[0], node) && detail::parse_index(cells[1], t) &&
                detail::parse_real(cells[2], v) && node >= 0 && t >= 1 && std::isfinite(v),
            ErrorCode::ScheduleParseError, "schedule row " + std::to_string(r) + ": '" + lines[r] + "'");
    require(!s.lookup(static_cast<std::size_t>(node), static_cast<std::size_t>(t - 1)), ErrorCode::ScheduleParseError,
            "schedule row " + std::to_string(r) + " repeats an entry");
    s.set(static_cast<std::size_t>(node), static_cast<std::size_t>(t - 1), v);
  }
  return s;
}

inline std::string schedule_csv(const InterventionSchedule& s) {
  std::string out = "node,t,value\n";
  for (const auto& [key, v] : s.entries())
    out += std::to_string(key.first) + "," + std::to_string(key.second + 1) + "," + format_real(v) + "\n";
  return out;
}

// ---------------------------------------------------------------- results

/// `run,window,sample,node,t,value` over forecast steps, t 1-based in the window.
inline void append_rollouts_csv(std::string& out, std::size_t run, const Rollouts& r) {
  if (out.empty()) out = "run,window,sample,node,t,value\n";
  for (std::size_t w = 0; w < r.windows; ++w)
    for (std::size_t n = 0; n < r.samples; ++n)
      for (std::size_t k = 0; k < r.nodes; ++k)
        for (std::size_t h = 0; h < r.horizon; ++h)
          out += std::to_string(run) + "," + std::to_string(w) + "," + std::to_string(n) + "," + std::to_string(k) +
                 "," + std::to_string(r.context_len + h + 1) + "," + format_real(r.value(w, n, k, h)) + "\n";
}

inline void append_cf_csv(std::string& out, std::size_t run, const CfRollout& r) {
  if (out.empty()) out = "run,window,sample,node,t,value\n";
  for (std::size_t w = 0; w < r.windows; ++w)
    for (std::size_t k = 0; k < r.nodes; ++k)
      for (std::size_t h = 0; h < r.horizon; ++h)
        out += std::to_string(run) + "," + std::to_string(w) + ",0," + std::to_string(k) + "," +
               std::to_string(r.context_len + h + 1) + "," + format_real(r.value(w, k, h)) + "\n";
}

/// `run,window,origin,node,t,value` over whole windows, t 1-based.
inline void append_windows_csv(std::string& out, std::size_t run, const SeriesBatch& b) {
  if (out.empty()) out = "run,window,origin,node,t,value\n";
  for (std::size_t w = 0; w < b.batch(); ++w)
    for (std::size_t k = 0; k < b.nodes(); ++k)
      for (std::size_t t = 0; t < b.total_len(); ++t)
        out += std::to_string(run) + "," + std::to_string(w) + "," + std::to_string(b.origin(w)) + "," +
               std::to_string(k) + "," + std::to_string(t + 1) + "," + format_real(b.at(w, k, t)) + "\n";
}

/// Rollouts of every run, keyed by run index.
inline std::map<std::size_t, Rollouts> parse_rollouts_csv(const std::string& text, std::size_t nodes,
                                                          std::size_t context_len, std::size_t total_len) {
  const auto lines = detail::csv_lines(text);
  require(!lines.empty() && lines[0] == "run,window,sample,node,t,value", ErrorCode::AlignmentError,
          "rollout file has an unexpected header");
  struct Row {
    long long run, w, n, k, t;
    double v;
  };
  std::vector<Row> rows;
  std::map<std::size_t, std::pair<std::size_t, std::size_t>> dims;  // run -> (windows, samples)
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto c = detail::split_csv(lines[i]);
    Row r{};
    require(c.size() == 6 && detail::parse_index(c[0], r.run) && detail::parse_index(c[1], r.w) &&
                detail::parse_index(c[2], r.n) && detail::parse_index(c[3], r.k) && detail::parse_index(c[4], r.t) &&
                detail::parse_real(c[5], r.v) && r.run >= 0 && r.w >= 0 && r.n >= 0 && r.k >= 0 &&
                r.k < static_cast<long long>(nodes) && r.t > static_cast<long long>(context_len) &&
                r.t <= static_cast<long long>(total_len),
            ErrorCode::AlignmentError, "bad rollout row " + std::to_string(i));
    auto& d = dims[static_cast<std::size_t>(r.run)];
    d.first = std::max(d.first, static_cast<std::size_t>(r.w) + 1);
    d.second = std::max(d.second, static_cast<std::size_t>(r.n) + 1);
    rows.push_back(r);
  }
  std::map<std::size_t, Rollouts> out;
  const std::size_t H = total_len - context_len;
  for (const auto& [run, d] : dims) {
    Rollouts r;
    r.windows = d.first;
    r.samples = d.second;
    r.nodes = nodes;
    r.horizon = H;
    r.context_len = context_len;
    r.values.assign(r.windows * r.samples * nodes * H, std::numeric_limits<double>::quiet_NaN());
    out[run] = std::move(r);
  }
  for (const auto& row : rows) {
    auto& r = out[static_cast<std::size_t>(row.run)];
    r.values[r.index(static_cast<std::size_t>(row.w), static_cast<std::size_t>(row.n), static_cast<std::size_t>(row.k),
                     static_cast<std::size_t>(row.t) - context_len - 1)] = row.v;
  }
  for (const auto& [run, r] : out)
    for (double v : r.values)
      require(!std::isnan(v), ErrorCode::AlignmentError, "rollouts of run " + std::to_string(run) + " are incomplete");
  return out;
}

/// Whole windows of every run, keyed by run index; statistics refreshed.
inline std::map<std::size_t, SeriesBatch> parse_windows_csv(const std::string& text, std::size_t nodes,
                                                            std::size_t context_len, std::size_t total_len) {
  const auto lines = detail::csv_lines(text);
  require(!lines.empty() && lines[0] == "run,window,origin,node,t,value", ErrorCode::AlignmentError,
          "window file has an unexpected header");
  std::map<std::size_t, std::map<std::size_t, std::pair<long long, std::vector<double>>>> acc;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto c = detail::split_csv(lines[i]);
    long long run = 0, w = 0, origin = 0, k = 0, t = 0;
    double v = 0;
    require(c.size() == 6 && detail::parse_index(c[0], run) && detail::parse_index(c[1], w) &&
                detail::parse_index(c[2], origin) && detail::parse_index(c[3], k) && detail::parse_index(c[4], t) &&
                detail::parse_real(c[5], v) && run >= 0 && w >= 0 && k >= 0 && k < static_cast<long long>(nodes) &&
                t >= 1 && t <= static_cast<long long>(total_len),
            ErrorCode::AlignmentError, "bad window row " + std::to_string(i));
    auto& slot = acc[static_cast<std::size_t>(run)][static_cast<std::size_t>(w)];
    if (slot.second.empty()) slot = {origin, std::vector<double>(nodes * total_len, std::numeric_limits<double>::quiet_NaN())};
    slot.second[static_cast<std::size_t>(k) * total_len + static_cast<std::size_t>(t - 1)] = v;
  }
  std::map<std::size_t, SeriesBatch> out;
  for (const auto& [run, windows] : acc) {
    require(windows.rbegin()->first + 1 == windows.size(), ErrorCode::AlignmentError, "window indices have gaps");
    SeriesBatch b(windows.size(), nodes, total_len, context_len);
    for (const auto& [w, slot] : windows) {
      b.set_origin(w, slot.first);
      for (std::size_t k = 0; k < nodes; ++k)
        for (std::size_t t = 0; t < total_len; ++t) {
          const double v = slot.second[k * total_len + t];
          require(!std::isnan(v), ErrorCode::AlignmentError, "window file is incomplete");
          b.at(w, k, t) = v;
        }
    }
    b.refresh_stats();
    out.emplace(run, std::move(b));
  }
  return out;
}

/// `window,node,t,logp` per entry, then one `window,total,,logp` row per window.
inline std::string scores_csv(const TrajectoryScores& s, std::size_t context_len) {
  std::string out = "window,node,t,logp\n";
  for (std::size_t w = 0; w < s.windows; ++w)
    for (std::size_t k = 0; k < s.nodes; ++k)
      for (std::size_t h = 0; h < s.horizon; ++h)
        out += std::to_string(w) + "," + std::to_string(k) + "," + std::to_string(context_len + h + 1) + "," +
               format_real(s.at(w, k, h)) + "\n";
  for (std::size_t w = 0; w < s.windows; ++w) out += std::to_string(w) + ",total,," + format_real(s.total[w]) + "\n";
  return out;
}

inline std::string loss_csv(const std::vector<LossRecord>& curve) {
  std::string out = "step,epoch,loss\n";
  for (const auto& r : curve)
    out += std::to_string(r.step) + "," + std::to_string(r.epoch) + "," + format_real(r.loss) + "\n";
  return out;
}

// ---------------------------------------------------------------- checkpoints

struct Checkpoint {
  CausalDag dag;
  ModelConfig config;
  std::vector<ParamEntry> manifest;
  std::vector<double> payload;
  std::optional<TrainState> train_state;
};

namespace detail {

inline constexpr char kCheckpointMagic[8] = {'C', 'F', 'L', 'O', 'W', 'C', 'K', '\0'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

class ByteWriter {
 public:
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(std::string_view s) {
    u64(s.size());
    buf_.append(s);
  }
  void raw(std::string_view s) { buf_.append(s); }
  void matrices(const std::vector<Tensor2>& ms) {
    u64(ms.size());
    for (const auto& m : ms) {
      u64(static_cast<std::uint64_t>(m.rows()));
      u64(static_cast<std::uint64_t>(m.cols()));
      for (Eigen::Index i = 0; i < m.size(); ++i) f64(m.data()[i]);
    }
  }
  [[nodiscard]] const std::string& bytes() const noexcept { return buf_; }

 private:
  std::string buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string_view b) : b_(b) {}
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(b_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const auto n = u64();
    need(n);
    std::string s(b_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  std::string_view raw(std::size_t n) {
    need(n);
    auto s = b_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::vector<Tensor2> matrices() {
    std::vector<Tensor2> out(u64());
    for (auto& m : out) {
      const auto r = u64(), c = u64();
      need(r * c * 8);
      m.resize(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
      for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = f64();
    }
    return out;
  }
  [[nodiscard]] bool done() const noexcept { return pos_ == b_.size(); }

 private:
  void need(std::uint64_t n) const {
    require(n <= b_.size() - pos_, ErrorCode::IoError, "checkpoint is truncated");
  }
  std::string_view b_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Magic, version, config echo (JSON), parameter manifest, little-endian
/// payload, optional optimiser state, then an FNV-1a checksum of everything
/// before it.
inline std::string encode_checkpoint(const CausalFlowModel& model, const std::optional<TrainState>& state = {}) {
  detail::ByteWriter w;
  w.raw({detail::kCheckpointMagic, 8});
  w.u32(detail::kCheckpointVersion);
  nlohmann::json echo = model_config_to_json(model.config());
  echo["dag"] = dag_to_json(model.dag());
  w.str(echo.dump());
  const auto manifest = model.manifest();
  w.u64(manifest.size());
  for (const auto& e : manifest) {
    w.str(e.name);
    w.u64(static_cast<std::uint64_t>(e.rows));
    w.u64(static_cast<std::uint64_t>(e.cols));
  }
  const auto flat = model.flat_parameters();
  w.u64(flat.size());
  for (double v : flat) w.f64(v);
  w.u32(state ? 1 : 0);
  if (state) {
    w.u64(state->epochs_done);
    w.u64(state->step);
    w.f64(state->ema);
    w.f64(state->ema_min);
    w.u32(state->ema_started ? 1 : 0);
    w.u64(static_cast<std::uint64_t>(state->adam_step));
    w.matrices(state->adam_m);
    w.matrices(state->adam_v);
  }
  std::string bytes = w.bytes();
  detail::ByteWriter tail;
  tail.u64(detail::fnv1a64(bytes));
  return bytes + tail.bytes();
}

inline Checkpoint decode_checkpoint(std::string_view bytes) {
  require(bytes.size() >= 20, ErrorCode::IoError, "checkpoint is truncated");
  const auto body = bytes.substr(0, bytes.size() - 8);
  detail::ByteReader tail(bytes.substr(bytes.size() - 8));
  require(tail.u64() == detail::fnv1a64(body), ErrorCode::ChecksumMismatch, "checkpoint checksum does not match");
  detail::ByteReader r(body);
  require(r.raw(8) == std::string_view(detail::kCheckpointMagic, 8), ErrorCode::IoError, "not a checkpoint file");
  const auto version = r.u32();
  require(version == detail::kCheckpointVersion, ErrorCode::IoError,
          "unsupported checkpoint version " + std::to_string(version));
  Checkpoint c;
  try {
    const auto echo = nlohmann::json::parse(r.str());
    c.dag = dag_from_json(echo.at("dag"));
    c.config = model_config_from_json(echo.at("model"), echo.at("flow"));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::IoError, std::string("checkpoint config echo: ") + e.what());
  }
  const auto n = r.u64();
  std::size_t total = 0;
  for (std::uint64_t i = 0; i < n; ++i) {
    ParamEntry e;
    e.name = r.str();
    e.rows = static_cast<Eigen::Index>(r.u64());
    e.cols = static_cast<Eigen::Index>(r.u64());
    total += static_cast<std::size_t>(e.rows * e.cols);
    c.manifest.push_back(std::move(e));
  }
  c.payload.resize(r.u64());
  require(c.payload.size() == total, ErrorCode::ShapeMismatch, "manifest shapes do not sum to the payload length");
  for (auto& v : c.payload) v = r.f64();
  if (r.u32() != 0) {
    TrainState st;
    st.epochs_done = r.u64();
    st.step = r.u64();
    st.ema = r.f64();
    st.ema_min = r.f64();
    st.ema_started = r.u32() != 0;
    st.adam_step = static_cast<std::int64_t>(r.u64());
    st.adam_m = r.matrices();
    st.adam_v = r.matrices();
    c.train_state = std::move(st);
  }
  require(r.done(), ErrorCode::IoError, "trailing bytes in checkpoint");
  return c;
}

/// Model rebuilt from the echo with the stored parameters.
inline CausalFlowModel model_from_checkpoint(const Checkpoint& c) {
  CausalFlowModel m(c.dag, c.config, 0);
  require(m.manifest() == c.manifest, ErrorCode::ShapeMismatch, "checkpoint manifest does not match its config echo");
  m.set_flat_parameters(c.payload);
  return m;
}

inline void save_checkpoint(const std::string& path, const CausalFlowModel& model,
                            const std::optional<TrainState>& state = {}) {
  write_text(path, encode_checkpoint(model, state));
}

inline Checkpoint load_checkpoint(const std::string& path) { return decode_checkpoint(read_text(path)); }

// ---------------------------------------------------------------- plots

/// Fan chart of one (window, node): context line, 90% and 50% bands, median,
/// and the true continuation if given.
inline std::string fan_svg(std::span<const double> context, const PredictionBand& b90, const PredictionBand& b50,
                           std::size_t window, std::size_t node, std::span<const double> truth = {},
                           const std::string& title = "") {
  const std::size_t tau = context.size(), H = b90.horizon;
  auto at = [&](const PredictionBand& b, const std::vector<double>& v, std::size_t h) {
    return v[(window * b.nodes + node) * b.horizon + h];
  };
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  auto see = [&](double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  };
  for (double v : context) see(v);
  for (std::size_t h = 0; h < H; ++h) {
    see(at(b90, b90.lower, h));
    see(at(b90, b90.upper, h));
  }
  for (double v : truth) see(v);
  if (hi <= lo) hi = lo + 1.0;
  const double W = 800, Ht = 300, pad = 30;
  const double n = static_cast<double>(tau + H - 1);
  auto X = [&](std::size_t t) { return pad + (W - 2 * pad) * static_cast<double>(t) / std::max(n, 1.0); };
  auto Y = [&](double v) { return Ht - pad - (Ht - 2 * pad) * (v - lo) / (hi - lo); };
  auto pt = [&](std::size_t t, double v) { return format_real(X(t)) + "," + format_real(Y(v)) + " "; };
  auto band = [&](const PredictionBand& b, const char* fill) {
    std::string p;
    for (std::size_t h = 0; h < H; ++h) p += pt(tau + h, at(b, b.upper, h));
    for (std::size_t h = H; h-- > 0;) p += pt(tau + h, at(b, b.lower, h));
    return std::string("<polygon fill=\"") + fill + "\" stroke=\"none\" points=\"" + p + "\"/>\n";
  };
  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"300\">\n";
  svg += "<rect width=\"800\" height=\"300\" fill=\"white\"/>\n";
  if (!title.empty()) svg += "<text x=\"30\" y=\"20\" font-size=\"14\">" + title + "</text>\n";
  svg += band(b90, "#c6dbef");
  svg += band(b50, "#6baed6");
  std::string line;
  for (std::size_t t = 0; t < tau; ++t) line += pt(t, context[t]);
  svg += "<polyline fill=\"none\" stroke=\"black\" points=\"" + line + "\"/>\n";
  line.clear();
  for (std::size_t h = 0; h < H; ++h) line += pt(tau + h, at(b50, b50.median, h));
  svg += "<polyline fill=\"none\" stroke=\"#08519c\" stroke-width=\"2\" points=\"" + line + "\"/>\n";
  if (!truth.empty()) {
    line.clear();
    for (std::size_t h = 0; h < truth.size(); ++h) line += pt(tau + h, truth[h]);
    svg += "<polyline fill=\"none\" stroke=\"#d62728\" stroke-dasharray=\"4 3\" points=\"" + line + "\"/>\n";
  }
  svg += "<line x1=\"" + format_real(X(tau)) + "\" y1=\"" + format_real(pad) + "\" x2=\"" + format_real(X(tau)) +
         "\" y2=\"" + format_real(Ht - pad) + "\" stroke=\"gray\" stroke-dasharray=\"2 2\"/>\n";
  svg += "</svg>\n";
  return svg;
}

}  // namespace causalflow
