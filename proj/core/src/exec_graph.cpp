#include "graphrt/exec_graph.hpp"

#include <string>

namespace graphrt {

Tensor& Workspace::alloc(std::vector<std::int64_t> shape) {
  owned_.emplace_back(std::move(shape));
  members_.insert(owned_.back().buffer_id());
  return owned_.back();
}

ExecGraph::ExecGraph(int length_key, std::vector<KernelInvocation> kernels,
                     std::uint64_t capture_epoch)
    : length_key_(length_key), kernels_(std::move(kernels)), capture_epoch_(capture_epoch) {
  for (const auto& k : kernels_) {
    total_flops_ += k.spec.flops;
    for (const auto& b : k.bindings) footprint_.insert(b.id);
  }
}

void ExecGraph::execute() const {
  for (const auto& k : kernels_) {
    if (k.run) k.run();
  }
}

void ExecGraph::dump(std::ostream& os) const {
  os << "exec_graph length=" << length_key_ << " kernels=" << kernels_.size()
     << " total_flops=" << total_flops_ << " epoch=" << capture_epoch_ << "\n";
  for (std::size_t i = 0; i < kernels_.size(); ++i) {
    const auto& k = kernels_[i];
    os << "  [" << i << "] " << k.spec.name << " shapes=";
    for (std::size_t b = 0; b < k.bindings.size(); ++b) {
      if (b) os << "x";
      os << shape_to_string(k.bindings[b].shape);
    }
    os << " flops=" << k.spec.flops << "\n";
  }
}

CaptureSession::CaptureSession(CaptureEngine* engine, int length_key)
    : engine_(engine), length_key_(length_key) {}

CaptureSession::~CaptureSession() {
  if (state_ == CaptureState::Open) engine_->close_key(length_key_);
}

void CaptureSession::abort(Errc code, const std::string& msg) {
  state_ = CaptureState::Aborted;
  kernels_.clear();
  engine_->close_key(length_key_);
  raise(code, msg);
}

void CaptureSession::record(const KernelInvocation& inv) {
  if (state_ != CaptureState::Open) raise(Errc::SessionClosed, "record on a closed capture session");
  if (inv.spec.op_class != OpClass::Static)
    abort(Errc::CaptureViolation, "dynamic kernel '" + inv.spec.name + "' during capture");
  for (const auto& b : inv.bindings) {
    if (!engine_->binding_allowed(b.id))
      abort(Errc::ForeignBuffer,
            "kernel '" + inv.spec.name + "' binds buffer " + std::to_string(b.id) +
                " outside workspace and weights");
  }
  kernels_.push_back(inv);
}

ExecGraphPtr CaptureSession::end_capture() {
  if (state_ != CaptureState::Open) raise(Errc::SessionClosed, "end_capture on a closed session");
  if (kernels_.empty()) abort(Errc::EmptyCapture, "capture recorded zero kernels");
  state_ = CaptureState::Closed;
  engine_->close_key(length_key_);
  return std::make_shared<ExecGraph>(length_key_, std::move(kernels_), engine_->next_epoch());
}

std::unique_ptr<CaptureSession> CaptureEngine::begin_capture(int length_key) {
  if (open_keys_.count(length_key) != 0)
    raise(Errc::CaptureInProgress, "capture already open for length " + std::to_string(length_key));
  open_keys_.insert(length_key);
  return std::unique_ptr<CaptureSession>(new CaptureSession(this, length_key));
}

ExecGraphPtr capture_sequence(CaptureEngine& engine, int length_key,
                              std::span<const KernelInvocation> kernels) {
  auto session = engine.begin_capture(length_key);
  for (const auto& k : kernels) session->record(k);
  return session->end_capture();
}

void validate_replay(const ExecGraph& graph, const KvCache& kv) {
  if (kv.cur_len() != graph.length_key())
    raise(Errc::WrongLength, "replay of length " + std::to_string(graph.length_key()) +
                                 " with kv.cur_len=" + std::to_string(kv.cur_len()));
  for (const auto& k : graph.kernels()) {
    for (const auto& b : k.bindings) {
      if (b.tensor->shape() != b.shape)
        raise(Errc::ReplayShapeError,
              "buffer " + std::to_string(b.id) + " now " + shape_to_string(b.tensor->shape()) +
                  ", captured as " + shape_to_string(b.shape));
    }
  }
}

}  // namespace graphrt
