#include "vrlab/harness/metrics.hpp"

#include <charconv>
#include <cmath>

#include "vrlab/errors.hpp"

namespace vrlab {

namespace {

std::string fmt(double v) {
  if (!std::isfinite(v)) throw RunAborted("metrics: refusing to emit a non-finite value");
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void cell(std::string& line, const std::optional<double>& v) {
  line += ',';
  if (v) line += fmt(*v);
}

void cell(std::string& line, const std::optional<int64_t>& v) {
  line += ',';
  if (v) line += std::to_string(*v);
}

}  // namespace

const char* MetricsWriter::header() {
  return "step,episode,episode_return,eval_return,critic_loss,actor_loss,"
         "phi_encoder,phi_actor,phi_critic,rr_current,wn_encoder,wn_actor,wn_critic,"
         "total_updates,event";
}

MetricsWriter::MetricsWriter(const std::string& path) : out_(path) {
  if (!out_) throw RunAborted("metrics: cannot open " + path);
  out_ << header() << "\n";
}

MetricsWriter::~MetricsWriter() {
  try {
    flush();
  } catch (...) {
  }
}

void MetricsWriter::merge(Row& into, const Row& from) {
  auto take = [](auto& dst, const auto& src) {
    if (src) dst = src;
  };
  take(into.episode, from.episode);
  take(into.episode_return, from.episode_return);
  take(into.eval_return, from.eval_return);
  take(into.critic_loss, from.critic_loss);
  take(into.actor_loss, from.actor_loss);
  take(into.phi_encoder, from.phi_encoder);
  take(into.phi_actor, from.phi_actor);
  take(into.phi_critic, from.phi_critic);
  take(into.rr_current, from.rr_current);
  take(into.wn_encoder, from.wn_encoder);
  take(into.wn_actor, from.wn_actor);
  take(into.wn_critic, from.wn_critic);
  take(into.total_updates, from.total_updates);
  if (!from.event.empty()) {
    if (!into.event.empty()) into.event += "|";
    into.event += from.event;
  }
}

void MetricsWriter::write(const Row& row) {
  if (row.step <= last_emitted_)
    throw ContractViolation("metrics: steps must be strictly increasing");
  if (!pending_) {
    pending_ = row;
    return;
  }
  if (row.step == pending_->step) {
    merge(*pending_, row);
    return;
  }
  if (row.step < pending_->step)
    throw ContractViolation("metrics: steps must be strictly increasing");
  emit(*pending_);
  pending_ = row;
}

void MetricsWriter::emit(const Row& r) {
  std::string line = std::to_string(r.step);
  cell(line, r.episode);
  cell(line, r.episode_return);
  cell(line, r.eval_return);
  cell(line, r.critic_loss);
  cell(line, r.actor_loss);
  cell(line, r.phi_encoder);
  cell(line, r.phi_actor);
  cell(line, r.phi_critic);
  cell(line, r.rr_current);
  cell(line, r.wn_encoder);
  cell(line, r.wn_actor);
  cell(line, r.wn_critic);
  cell(line, r.total_updates);
  line += ',';
  line += r.event;
  out_ << line << "\n";
  last_emitted_ = r.step;
}

void MetricsWriter::flush() {
  if (pending_) {
    emit(*pending_);
    pending_.reset();
  }
  out_.flush();
}

}  // namespace vrlab
