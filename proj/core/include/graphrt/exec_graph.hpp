#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <ostream>
#include <set>
#include <span>
#include <vector>

#include "graphrt/kernels.hpp"
#include "graphrt/kv_cache.hpp"

namespace graphrt {

// Fixed pool of pre-allocated activation buffers shared by every captured
// graph. Buffers are allocated (or adopted from pre-allocated state such as
// the KV cache) up front; the pool never grows per capture, which is what
// keeps peak activation memory independent of how many graphs exist.
class Workspace {
 public:
  Workspace() = default;
  Workspace(const Workspace&) = delete;
  Workspace& operator=(const Workspace&) = delete;

  Tensor& alloc(std::vector<std::int64_t> shape);

  // Registers an externally owned buffer (e.g. a KV-cache tensor) as a
  // workspace member for capture validation. The caller keeps ownership and
  // must outlive the workspace's users.
  void adopt(const Tensor& t) { members_.insert(t.buffer_id()); }

  bool contains(BufferId id) const { return members_.count(id) != 0; }
  std::size_t buffer_count() const { return members_.size(); }
  const std::set<BufferId>& members() const { return members_; }

 private:
  std::deque<Tensor> owned_;  // deque: element addresses are stable
  std::set<BufferId> members_;
};

// Immutable record of a captured static kernel sequence for one sequence
// length. Holds executable invocations (closures over workspace/weight
// buffers), so replay re-runs the same math against current buffer contents.
class ExecGraph {
 public:
  ExecGraph(int length_key, std::vector<KernelInvocation> kernels, std::uint64_t capture_epoch);

  int length_key() const noexcept { return length_key_; }
  std::size_t kernel_count() const noexcept { return kernels_.size(); }
  std::span<const KernelInvocation> kernels() const noexcept { return kernels_; }
  std::int64_t total_flops() const noexcept { return total_flops_; }
  // Workspace buffers the graph reads or writes.
  const std::set<BufferId>& footprint() const noexcept { return footprint_; }
  std::uint64_t capture_epoch() const noexcept { return capture_epoch_; }

  // Runs every captured kernel in order against current buffer contents.
  void execute() const;

  // Human-readable listing: index, kernel name, bound shapes, flops.
  void dump(std::ostream& os) const;

 private:
  int length_key_;
  std::vector<KernelInvocation> kernels_;
  std::int64_t total_flops_ = 0;
  std::set<BufferId> footprint_;
  std::uint64_t capture_epoch_;
};

using ExecGraphPtr = std::shared_ptr<const ExecGraph>;

enum class CaptureState { Open, Closed, Aborted };

class CaptureEngine;

// Records a static kernel sequence into an ExecGraph. record() validates each
// kernel: a DYNAMIC op or a binding outside workspace-or-weights aborts the
// session (no partial graphs from invalid plans). end_capture() on a session
// with zero kernels raises EmptyCapture; any call after close/abort raises
// SessionClosed.
class CaptureSession {
 public:
  ~CaptureSession();
  CaptureSession(const CaptureSession&) = delete;
  CaptureSession& operator=(const CaptureSession&) = delete;

  void record(const KernelInvocation& inv);
  ExecGraphPtr end_capture();

  CaptureState state() const noexcept { return state_; }
  int length_key() const noexcept { return length_key_; }
  std::size_t recorded() const noexcept { return kernels_.size(); }

 private:
  friend class CaptureEngine;
  CaptureSession(CaptureEngine* engine, int length_key);
  void abort(Errc code, const std::string& msg);

  CaptureEngine* engine_;
  int length_key_;
  CaptureState state_ = CaptureState::Open;
  std::vector<KernelInvocation> kernels_;
};

// Owns capture bookkeeping for one workspace/weight set: which keys have an
// open session (at most one each) and the monotonically increasing capture
// epoch stamped onto finished graphs (duplicate captures of the same key are
// resolved last-writer-wins by comparing epochs).
class CaptureEngine {
 public:
  CaptureEngine(const Workspace& workspace, std::set<BufferId> weight_ids)
      : workspace_(&workspace), weight_ids_(std::move(weight_ids)) {}

  // Opens a capture for `length_key`; raises CaptureInProgress if a session
  // for the same key is already open.
  std::unique_ptr<CaptureSession> begin_capture(int length_key);

  bool binding_allowed(BufferId id) const {
    return workspace_->contains(id) || weight_ids_.count(id) != 0;
  }

 private:
  friend class CaptureSession;
  void close_key(int length_key) { open_keys_.erase(length_key); }
  std::uint64_t next_epoch() { return ++epoch_; }

  const Workspace* workspace_;
  std::set<BufferId> weight_ids_;
  std::set<int> open_keys_;
  std::uint64_t epoch_ = 0;
};

// Convenience: capture an already-built kernel sequence in one call.
ExecGraphPtr capture_sequence(CaptureEngine& engine, int length_key,
                              std::span<const KernelInvocation> kernels);

// Replay-time validation. Raises WrongLength if kv.cur_len() != graph length,
// ReplayShapeError if any bound buffer's live shape differs from the shape
// frozen at capture. Does not execute anything.
void validate_replay(const ExecGraph& graph, const KvCache& kv);

}  // namespace graphrt
