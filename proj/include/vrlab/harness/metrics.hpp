#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>

namespace vrlab {

// Append-only CSV writer for one run. Rows are keyed by step; writes at the
// same step merge into one row so steps stay strictly increasing in the file.
// Values must be finite — NaN is never emitted.
class MetricsWriter {
 public:
  struct Row {
    int64_t step = 0;
    std::optional<int64_t> episode;
    std::optional<double> episode_return;
    std::optional<double> eval_return;
    std::optional<double> critic_loss;
    std::optional<double> actor_loss;
    std::optional<double> phi_encoder;
    std::optional<double> phi_actor;
    std::optional<double> phi_critic;
    std::optional<double> rr_current;
    std::optional<double> wn_encoder;
    std::optional<double> wn_actor;
    std::optional<double> wn_critic;
    std::optional<int64_t> total_updates;
    std::string event;
  };

  static const char* header();

  explicit MetricsWriter(const std::string& path);
  ~MetricsWriter();

  void write(const Row& row);
  void flush();  // emits the pending row and flushes the stream

 private:
  void emit(const Row& row);
  static void merge(Row& into, const Row& from);

  std::ofstream out_;
  std::optional<Row> pending_;
  int64_t last_emitted_ = -1;
};

}  // namespace vrlab
