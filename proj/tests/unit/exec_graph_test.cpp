#include <sstream>
#include <vector>

#include <doctest.h>

#include "graphrt/exec_graph.hpp"
#include "graphrt/kernels.hpp"
#include "graphrt/model.hpp"
#include "test_util.hpp"

using namespace graphrt;

namespace {

struct Rig {
  Workspace ws;
  Tensor& a;
  Tensor& b;
  Tensor& out;
  CaptureEngine engine;
  Rig()
      : a(ws.alloc({2, 2})), b(ws.alloc({2, 2})), out(ws.alloc({2, 2})), engine(ws, {}) {}
};

}  // namespace

TEST_CASE("workspace: allocation and adoption") {
  Workspace ws;
  Tensor& t = ws.alloc({3});
  CHECK(ws.contains(t.buffer_id()));
  CHECK(ws.buffer_count() == 1);

  Tensor external({2});
  CHECK(!ws.contains(external.buffer_id()));
  ws.adopt(external);
  CHECK(ws.contains(external.buffer_id()));
  CHECK(ws.buffer_count() == 2);
}

TEST_CASE("capture: records static kernels and freezes flops/footprint") {
  Rig rig;
  fill_random(rig.a, 1);
  fill_random(rig.b, 2);
  auto inv = make_matmul(rig.a, rig.b, rig.out);
  auto session = rig.engine.begin_capture(4);
  session->record(inv);
  CHECK(session->recorded() == 1);
  auto graph = session->end_capture();
  CHECK(graph->length_key() == 4);
  CHECK(graph->kernel_count() == 1);
  CHECK(graph->total_flops() == 2 * 2 * 2 * 2);
  CHECK(graph->footprint().count(rig.a.buffer_id()) == 1);
  CHECK(graph->footprint().count(rig.out.buffer_id()) == 1);
}

TEST_CASE("capture: dynamic kernel aborts the session") {
  Rig rig;
  Tensor& emb = rig.ws.alloc({4, 2});
  Tensor& pos = rig.ws.alloc({4, 2});
  Tensor& x = rig.ws.alloc({1, 2});
  auto session = rig.engine.begin_capture(1);
  session->record(make_relu(x));
  CHECK_RAISES(Errc::CaptureViolation, session->record(make_extend_position(0, 0, emb, pos, x)));
  CHECK(session->state() == CaptureState::Aborted);
  CHECK(session->recorded() == 0);  // no partial graphs
  CHECK_RAISES(Errc::SessionClosed, session->end_capture());
  // The key is released: a fresh capture of the same length may start.
  auto retry = rig.engine.begin_capture(1);
  retry->record(make_relu(x));
  CHECK(retry->end_capture()->kernel_count() == 1);
}

TEST_CASE("capture: bindings outside workspace and weights are foreign") {
  Rig rig;
  Tensor stranger({2, 2});
  auto session = rig.engine.begin_capture(2);
  CHECK_RAISES(Errc::ForeignBuffer, session->record(make_relu(stranger)));
  CHECK(session->state() == CaptureState::Aborted);
}

TEST_CASE("capture: weight buffers are legal bindings") {
  Workspace ws;
  Tensor& x = ws.alloc({1, 2});
  Tensor& out = ws.alloc({1, 2});
  Tensor weight({2, 2});
  CaptureEngine engine(ws, {weight.buffer_id()});
  auto graph = capture_sequence(engine, 1, std::vector<KernelInvocation>{make_matmul(x, weight, out)});
  CHECK(graph->kernel_count() == 1);
}

TEST_CASE("capture: empty capture and closed-session use are errors") {
  Rig rig;
  auto session = rig.engine.begin_capture(3);
  CHECK_RAISES(Errc::EmptyCapture, session->end_capture());
  CHECK(session->state() == CaptureState::Aborted);

  auto again = rig.engine.begin_capture(3);
  again->record(make_relu(rig.a));
  auto graph = again->end_capture();
  CHECK_RAISES(Errc::SessionClosed, again->record(make_relu(rig.a)));
  CHECK_RAISES(Errc::SessionClosed, again->end_capture());
}

TEST_CASE("capture: one open session per length key") {
  Rig rig;
  auto first = rig.engine.begin_capture(7);
  CHECK_RAISES(Errc::CaptureInProgress, rig.engine.begin_capture(7));
  auto other_key = rig.engine.begin_capture(8);  // different key is fine
  first->record(make_relu(rig.a));
  first->end_capture();
  auto reopened = rig.engine.begin_capture(7);  // closed key reopens
  CHECK(reopened->state() == CaptureState::Open);
}

TEST_CASE("capture epochs increase across captures") {
  Rig rig;
  auto g1 = capture_sequence(rig.engine, 1, std::vector<KernelInvocation>{make_relu(rig.a)});
  auto g2 = capture_sequence(rig.engine, 2, std::vector<KernelInvocation>{make_relu(rig.a)});
  CHECK(g2->capture_epoch() > g1->capture_epoch());
}

TEST_CASE("replay: closures bind buffers, so reruns see current contents") {
  Rig rig;
  rig.a[0] = 1; rig.a[1] = 0; rig.a[2] = 0; rig.a[3] = 1;  // identity
  rig.b[0] = 5; rig.b[1] = 6; rig.b[2] = 7; rig.b[3] = 8;
  auto graph =
      capture_sequence(rig.engine, 1, std::vector<KernelInvocation>{make_matmul(rig.a, rig.b, rig.out)});

  graph->execute();
  CHECK(rig.out[0] == 5.0f);
  CHECK(rig.out[3] == 8.0f);

  rig.b[0] = 50;  // replay after an input change reflects the change
  graph->execute();
  CHECK(rig.out[0] == 50.0f);

  graph->execute();  // and is repeatable
  CHECK(rig.out[0] == 50.0f);
}

TEST_CASE("replay validation: length precondition and frozen shapes") {
  ModelConfig cfg;
  cfg.n_layers = 1;
  cfg.d_model = 8;
  cfg.n_heads = 2;
  cfg.vocab_size = 16;
  cfg.max_seq_len = 6;
  Model model(cfg);
  CaptureEngine engine(model.workspace(), model.weight_ids());
  const auto& plan = model.plan(2);
  auto graph = capture_sequence(engine, 2, {plan.data(), plan.size()});

  model.kv().set_len(1);
  CHECK_RAISES(Errc::WrongLength, validate_replay(*graph, model.kv()));
  model.kv().set_len(2);
  validate_replay(*graph, model.kv());  // fine now

  // A workspace buffer changing shape after capture invalidates the graph.
  model.x().reshape({8, 1});
  CHECK_RAISES(Errc::ReplayShapeError, validate_replay(*graph, model.kv()));
  model.x().reshape({1, 8});
  validate_replay(*graph, model.kv());
}

TEST_CASE("graph dump lists kernels") {
  Rig rig;
  auto graph =
      capture_sequence(rig.engine, 5, std::vector<KernelInvocation>{make_matmul(rig.a, rig.b, rig.out)});
  std::ostringstream os;
  graph->dump(os);
  CHECK(os.str().find("length=5") != std::string::npos);
  CHECK(os.str().find("matmul") != std::string::npos);
}

TEST_CASE("capture: a full model plan is capturable and its footprint is confined") {
  Model model(ModelConfig{});
  CaptureEngine engine(model.workspace(), model.weight_ids());
  const auto& plan = model.plan(3);
  auto graph = capture_sequence(engine, 3, {plan.data(), plan.size()});
  CHECK(static_cast<int>(graph->kernel_count()) == Model::kKernelsPerLayer * 4 + 2);
  for (BufferId id : graph->footprint()) CHECK(engine.binding_allowed(id));
}
